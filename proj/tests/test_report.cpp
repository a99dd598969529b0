#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "lyacert/error.hpp"
#include "lyacert/report.hpp"

using namespace lyacert;
using lyacert::testing::Gen;

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

QuadraticCertificate cert(const Matrix& q, double epsilon = 0.0) {
  return {QuadraticForm(q), 1e-3, epsilon};
}

// Built by hand so the golden page does not depend on the RNG.
ReportBundle golden_bundle(bool certified) {
  TrajectorySummary s;
  s.dt = 0.5;
  s.m = 1;
  for (int k = 0; k < 21; ++k) {
    const double t = 0.5 * (k + 1);
    const double decay = 1.0 / (1.0 + 0.2 * t);
    s.t.push_back(t);
    s.e.push_back(decay * (k % 4 < 2 ? 1.0 : -0.5));
    s.edot.push_back(-0.2 * decay * decay);
  }
  s.t_first = 0.0;
  s.t_last = 11.0;
  s.samples = 21;
  s.training_samples = 21;

  TrainOutcome outcome;
  for (int k = 0; k < 40; ++k) {
    outcome.loss_history.push_back(k < 35 ? 0.8 / (1 + k * k) : 0.0);
    outcome.param_norm_history.push_back(0.5 + 0.01 * k);
  }
  outcome.final_params = CholeskyParams{2, Vector::Constant(3, 0.25)};
  outcome.termination = Termination::Converged;

  CertifyConfig config;
  config.dt = 0.5;
  const auto q = cert(mat2(0.2425, -0.0134, -0.0134, 0.4804), 0.0125);
  Verdict verdict = certified ? Verdict{Certified{q, outcome}}
                              : Verdict{NotFound{"epsilon 0.0125 exceeds eps_max 0.001", outcome, q}};
  ReportBundle b{CertificateRecord{config, 1, verdict}, s, GridSpec{}, Provenance{"golden.csv", "0123456789abcdef"}};
  b.grid = default_grid(b.trajectory);
  return b;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void check_golden(const std::string& name, const std::string& actual) {
  const char* dir = std::getenv("LYACERT_TEST_DATA");
  ASSERT_NE(dir, nullptr) << "LYACERT_TEST_DATA is not set";
  const auto path = std::filesystem::path(dir) / name;
  if (std::getenv("LYACERT_UPDATE_GOLDEN")) {
    std::ofstream(path, std::ios::binary) << actual;
  }
  ASSERT_TRUE(std::filesystem::exists(path)) << path;
  EXPECT_TRUE(slurp(path) == actual) << "rendered output differs from " << path;
}

}  // namespace

TEST(FormatCandidate, Examples) {
  EXPECT_EQ(format_candidate(cert(mat2(0.2425, -0.0134, -0.0134, 0.4804))),
            "V = 0.2425·e^2 − 0.0268·e·e_dot + 0.4804·e_dot^2");
  EXPECT_EQ(format_candidate(cert(Matrix::Identity(2, 2))),
            "V = 1.0000·e^2 + 0.0000·e·e_dot + 1.0000·e_dot^2");
  EXPECT_EQ(format_candidate(cert(mat2(2, 0, 0, 3))),
            "V = 2.0000·e^2 + 0.0000·e·e_dot + 3.0000·e_dot^2");
  EXPECT_EQ(format_candidate(cert(mat2(1, 0.25, 0.25, 1))),
            "V = 1.0000·e^2 + 0.5000·e·e_dot + 1.0000·e_dot^2");
  // A cross term that rounds to zero keeps the plus sign.
  EXPECT_EQ(format_candidate(cert(mat2(1, -1e-7, -1e-7, 1))),
            "V = 1.0000·e^2 + 0.0000·e·e_dot + 1.0000·e_dot^2");
}

TEST(FormatCandidate, LargerStateFallsBackToRows) {
  const std::string text = format_candidate(cert(Matrix::Identity(4, 4)));
  EXPECT_EQ(text.rfind("V = ", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
}

TEST(SurfaceGrid, IdentityCorners) {
  const auto g = surface_grid(cert(Matrix::Identity(2, 2)), GridSpec{-1, 1, -1, 1, 3});
  ASSERT_EQ(g.e.size(), 3u);
  EXPECT_EQ(g.value(0, 0), 2.0);
  EXPECT_EQ(g.value(2, 2), 2.0);
  EXPECT_EQ(g.value(0, 2), 2.0);
  EXPECT_EQ(g.value(1, 1), 0.0);
  EXPECT_EQ(g.value(1, 2), 1.0);
}

TEST(SurfaceGrid, MatchesLyapunovValueAndSymmetry) {
  Gen gen(1);
  for (int trial = 0; trial < 30; ++trial) {
    const auto c = QuadraticCertificate{assemble_quadratic(gen.factor(2)), 1e-3, 0.0};
    const double r = gen.uniform(0.1, 5);
    const GridSpec spec{-r, r, -2 * r, 2 * r, 2 * gen.index(1, 10) + 1};
    const auto g = surface_grid(c, spec);
    const std::size_t n = spec.resolution;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        Vector xi(2);
        xi << g.e[i], g.edot[j];
        const double v = g.value(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        EXPECT_NEAR(v, lyapunov_value(c.q, xi), 1e-12 * (1 + std::abs(v)));
        EXPECT_GE(v, 0.0);
        EXPECT_NEAR(v, g.value(static_cast<Eigen::Index>(n - 1 - i), static_cast<Eigen::Index>(n - 1 - j)),
                    1e-12 * (1 + std::abs(v)));
      }
    }
  }
}

TEST(SurfaceGrid, PadsHigherDimensionsWithZeros) {
  Matrix q = Matrix::Identity(4, 4) * 3.0;
  const auto g = surface_grid(cert(q), GridSpec{-1, 1, -1, 1, 3});
  EXPECT_EQ(g.value(0, 0), 6.0);
}

TEST(GridSpec, Validation) {
  EXPECT_THROW((GridSpec{1, -1, -1, 1, 5}.validate()), InputError);
  EXPECT_THROW((GridSpec{-1, 1, -1, 1, 1}.validate()), InputError);
  EXPECT_THROW((GridSpec{-1, NAN, -1, 1, 5}.validate()), InputError);
  EXPECT_NO_THROW((GridSpec{}.validate()));
}

TEST(Fnv1a, KnownValues) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(fnv1a_hex("foobar"), "85944171f73967e8");
}

TEST(RenderReport, CertifiedContent) {
  const std::string html = render_report(golden_bundle(true));
  EXPECT_NE(html.find("epsilon = 0.0125"), std::string::npos);
  EXPECT_NE(html.find("V = 0.2425·e^2 − 0.0268·e·e_dot + 0.4804·e_dot^2"), std::string::npos);
  EXPECT_NE(html.find("<svg"), std::string::npos);
  EXPECT_EQ(html.find("does not, in itself, imply"), std::string::npos);
}

TEST(RenderReport, NotFoundCarriesCaveat) {
  const std::string html = render_report(golden_bundle(false));
  EXPECT_NE(html.find("The absence of a certificate does not, in itself, imply that the system is unstable."),
            std::string::npos);
  EXPECT_NE(html.find("exceeds eps_max"), std::string::npos);
}

TEST(RenderReport, SelfContained) {
  for (bool certified : {true, false}) {
    const std::string html = render_report(golden_bundle(certified));
    EXPECT_EQ(html.find("src="), std::string::npos);
    EXPECT_EQ(html.find("href="), std::string::npos);
    EXPECT_EQ(html.find("url("), std::string::npos);
    EXPECT_EQ(html.find("@import"), std::string::npos);
    EXPECT_EQ(html.find("<script"), std::string::npos);
  }
}

TEST(RenderReport, GoldenFiles) {
  check_golden("golden_certified.html", render_report(golden_bundle(true)));
  check_golden("golden_not_found.html", render_report(golden_bundle(false)));
  check_golden("golden_certified.json", bundle_to_json(golden_bundle(true)).dump(2) + "\n");
}

TEST(RenderReport, PureFunctionOfBundle) {
  EXPECT_EQ(render_report(golden_bundle(true)), render_report(golden_bundle(true)));
  EXPECT_EQ(bundle_to_json(golden_bundle(false)).dump(), bundle_to_json(golden_bundle(false)).dump());
}

TEST(BundleJson, ContainsRecordAndExtras) {
  const auto b = golden_bundle(true);
  const auto json = bundle_to_json(b);
  for (const char* key : {"trajectory", "surface", "provenance"}) EXPECT_TRUE(json.contains(key)) << key;
  EXPECT_EQ(json["provenance"]["input_hash"], "0123456789abcdef");
  const auto rec = record_from_json(json);
  const auto* c = std::get_if<Certified>(&rec.verdict);
  ASSERT_NE(c, nullptr);
  EXPECT_EQ(c->certificate.q.matrix(), std::get<Certified>(b.record.verdict).certificate.q.matrix());
  EXPECT_EQ(c->certificate.epsilon, 0.0125);
}

TEST(WriteReport, FormatsAndErrors) {
  const auto dir = std::filesystem::temp_directory_path() / "lyacert_test_report";
  std::filesystem::create_directories(dir);
  const auto b = golden_bundle(true);
  write_report(b, dir / "r.html", "html");
  write_report(b, dir / "r.json", "json");
  EXPECT_EQ(slurp(dir / "r.html"), render_report(b));
  EXPECT_NO_THROW(deserialize(slurp(dir / "r.json")));
  EXPECT_THROW(write_report(b, dir / "r.pdf", "pdf"), InputError);
  EXPECT_ANY_THROW(write_report(b, dir / "missing" / "r.html", "html"));
  std::filesystem::remove_all(dir);
}

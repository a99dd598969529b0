#include <cmath>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "lyacert/certifier.hpp"
#include "lyacert/error.hpp"
#include "lyacert/synth.hpp"

using namespace lyacert;
using lyacert::testing::Gen;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

RawTrajectory oscillator(double sigma, std::uint64_t seed = 0) {
  const auto raw = simulate(LtiSystem::damped_oscillator(0.05, 1.0), vec2(1, 0), 30.0, 0.01);
  return add_noise(raw, {sigma, seed});
}

RawTrajectory growing() {
  return simulate(LtiSystem::exponential(0.5), vec2(0.1, 0.05), 5.9, 0.1);
}

CertifyConfig fine(double dt = 0.1) {
  CertifyConfig c;
  c.dt = dt;
  return c;
}

// Identity Q with samples whose rates are prescribed: xi = [1, 0], xidot = [v/2, 0].
UniformTrajectory with_rates(const std::vector<double>& rates) {
  std::vector<Vector> xi, xidot;
  for (double v : rates) {
    xi.push_back(vec2(1, 0));
    xidot.push_back(vec2(v / 2, 0));
  }
  return UniformTrajectory::from_samples(xi, xidot);
}

void expect_bound_holds(const Certified& c, const UniformTrajectory& traj) {
  for (std::size_t k = 0; k < traj.samples(); ++k) {
    EXPECT_LE(lyapunov_rate(c.certificate.q, traj.xi[k], traj.xidot[k]), c.certificate.epsilon + 1e-12);
  }
}

}  // namespace

TEST(EstimateEpsilon, Examples) {
  const QuadraticForm id(Matrix::Identity(2, 2));
  EXPECT_DOUBLE_EQ(estimate_epsilon(id, with_rates({-1, 0.5, 2.3})), 2.3);
  EXPECT_EQ(estimate_epsilon(id, with_rates({-1, -0.5, -2.3})), 0.0);
  EXPECT_EQ(estimate_epsilon(id, with_rates({0})), 0.0);
}

TEST(EstimateEpsilon, Errors) {
  const QuadraticForm id(Matrix::Identity(2, 2));
  EXPECT_THROW(estimate_epsilon(id, UniformTrajectory{}), InputError);
  Gen gen(1);
  EXPECT_THROW(estimate_epsilon(id, gen.samples(3, 4)), InputError);
}

TEST(EstimateEpsilon, MatchesExhaustiveScan) {
  Gen gen(2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto q = assemble_quadratic(gen.factor(2));
    const auto traj = gen.samples(gen.index(1, 200), 2);
    double scan = 0.0;
    for (std::size_t k = 0; k < traj.samples(); ++k) {
      scan = std::max(scan, lyapunov_rate(q, traj.xi[k], traj.xidot[k]));
    }
    EXPECT_EQ(estimate_epsilon(q, traj), scan);
  }
}

TEST(EstimateEpsilon, NeverDecreasesAsSamplesAreAdded) {
  Gen gen(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto q = assemble_quadratic(gen.factor(2));
    const auto traj = gen.samples(60, 2);
    double prev = 0.0;
    for (std::size_t count = 1; count <= traj.samples(); ++count) {
      const double eps = estimate_epsilon(q, traj.slice(0, count));
      EXPECT_GE(eps, prev);
      prev = eps;
    }
  }
}

TEST(Certify, NoiselessOscillatorHasZeroEpsilon) {
  const auto result = run_pipeline(oscillator(0.0), fine());
  const auto* c = std::get_if<Certified>(&result.verdict);
  ASSERT_NE(c, nullptr) << verdict_reason(result.verdict);
  EXPECT_EQ(c->outcome.termination, Termination::Converged);
  EXPECT_EQ(c->certificate.epsilon, 0.0);
  EXPECT_GT(c->certificate.q.min_eigenvalue(), 0.0);
  expect_bound_holds(*c, result.trajectory);
}

TEST(Certify, NoisyOscillatorHasPositiveEpsilon) {
  const auto result = run_pipeline(oscillator(0.05, 1), fine());
  const auto* c = std::get_if<Certified>(&result.verdict);
  ASSERT_NE(c, nullptr) << verdict_reason(result.verdict);
  EXPECT_GT(c->certificate.epsilon, 0.0);
  EXPECT_EQ(c->certificate.epsilon, estimate_epsilon(c->certificate.q, result.trajectory));
  expect_bound_holds(*c, result.trajectory);
}

TEST(Certify, GrowingErrorIsNotCertified) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto config = fine();
    config.train.seed = seed;
    const auto v = certify(growing(), config);
    EXPECT_FALSE(std::holds_alternative<Certified>(v)) << verdict_reason(v);
  }
}

TEST(Certify, DivergenceIsReportedWithNorm) {
  auto config = fine();
  config.train.learning_rate = 50;
  config.train.theta_max = 10;
  const auto v = certify(oscillator(0.1, 2), config);
  ASSERT_TRUE(std::holds_alternative<Diverged>(v)) << verdict_reason(v);
  EXPECT_NE(verdict_reason(v).find("diverged"), std::string::npos);
  EXPECT_NE(verdict_reason(v).find("max-norm"), std::string::npos);
}

TEST(Certify, EpsMaxRejects) {
  auto config = fine();
  config.eps_max = 1e-6;
  const auto v = certify(oscillator(0.05, 1), config);
  const auto* n = std::get_if<NotFound>(&v);
  ASSERT_NE(n, nullptr);
  ASSERT_TRUE(n->candidate.has_value());
  EXPECT_GT(n->candidate->epsilon, 1e-6);
}

TEST(Certify, HoldoutEstimatesOnTrailingSamples) {
  auto config = fine();
  config.holdout_fraction = 0.25;
  const auto result = run_pipeline(oscillator(0.02, 3), config);
  const std::size_t total = result.trajectory.samples();
  EXPECT_EQ(result.training_samples, total - static_cast<std::size_t>(std::ceil(0.25 * total)));
  const auto* c = std::get_if<Certified>(&result.verdict);
  ASSERT_NE(c, nullptr) << verdict_reason(result.verdict);
  const auto held = result.trajectory.slice(result.training_samples, total - result.training_samples);
  EXPECT_EQ(c->certificate.epsilon, estimate_epsilon(c->certificate.q, held));
}

TEST(Certify, MlpModeRefusesNonConstantQ) {
  auto config = fine(0.2);
  config.train.mode = Mode::Mlp;
  config.train.hidden = {8};
  config.train.epochs = 300;
  const auto v = certify(oscillator(0.0), config);
  // After training the network output varies with xi, far beyond 1e-6 relative.
  const auto* n = std::get_if<NotFound>(&v);
  ASSERT_NE(n, nullptr) << verdict_reason(v);
  EXPECT_NE(n->reason.find("not constant"), std::string::npos);

  config.nonconstancy_tol = 1e6;
  EXPECT_FALSE(std::holds_alternative<Diverged>(certify(oscillator(0.0), config)));
}

TEST(Certify, IsDeterministic) {
  const auto a = certify(oscillator(0.05, 4), fine());
  const auto b = certify(oscillator(0.05, 4), fine());
  ASSERT_EQ(a.index(), b.index());
  EXPECT_EQ(outcome_of(a).loss_history, outcome_of(b).loss_history);
  if (const auto* ca = std::get_if<Certified>(&a)) {
    const auto& cb = std::get<Certified>(b);
    EXPECT_EQ(ca->certificate.q.matrix(), cb.certificate.q.matrix());
    EXPECT_EQ(ca->certificate.epsilon, cb.certificate.epsilon);
  }
}

TEST(Certify, PropagatesInputErrors) {
  RawTrajectory bad;
  bad.t = {0, 1};
  bad.r = {Vector::Zero(1), Vector::Zero(1)};
  bad.x = bad.r;
  EXPECT_THROW(certify(bad, fine()), InputError);
  EXPECT_THROW(certify(oscillator(0.0), fine(100.0)), InputError);
  auto config = fine();
  config.smoothing_window = 4;
  EXPECT_THROW(certify(oscillator(0.0), config), InputError);
}

TEST(VerdictReason, Examples) {
  QuadraticCertificate cert{QuadraticForm(Matrix::Identity(2, 2)), 1e-3, 4.8871};
  const std::string certified = verdict_reason(Certified{cert, TrainOutcome{}});
  EXPECT_NE(certified.find("epsilon = 4.8871"), std::string::npos);
  EXPECT_NE(certified.find("gamma = 0.001"), std::string::npos);

  TrainOutcome diverged;
  diverged.termination = Termination::Diverged;
  EXPECT_NE(verdict_reason(Diverged{"training diverged: parameter max-norm 2e+06", diverged}).find("diverged"),
            std::string::npos);

  const std::string not_found = verdict_reason(NotFound{"plateau", TrainOutcome{}, std::nullopt});
  EXPECT_NE(not_found.find("does not imply instability"), std::string::npos);
  EXPECT_EQ(not_found.find('\n'), std::string::npos);
}

TEST(QuadraticCertificate, CoefficientView) {
  Matrix q(2, 2);
  q << 0.2425, -0.0134, -0.0134, 0.4804;
  const QuadraticCertificate cert{QuadraticForm(q), 1e-3, 0};
  const auto c = cert.coefficients();
  EXPECT_EQ(c.q_ee, 0.2425);
  EXPECT_DOUBLE_EQ(c.q_cross, -0.0268);
  EXPECT_EQ(c.q_dd, 0.4804);
  const QuadraticCertificate big{QuadraticForm(Matrix::Identity(4, 4)), 1e-3, 0};
  EXPECT_THROW(big.coefficients(), InputError);
}

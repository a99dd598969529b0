#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "lyacert/error.hpp"
#include "lyacert/record.hpp"

using namespace lyacert;
using lyacert::testing::Gen;

namespace {

TrainOutcome outcome(Gen& gen, ModelParams params, Termination t) {
  TrainOutcome o;
  for (int k = 0; k < 25; ++k) {
    o.loss_history.push_back(std::abs(gen.normal()) / (k + 1));
    o.param_norm_history.push_back(std::abs(gen.normal()));
  }
  o.final_params = std::move(params);
  o.termination = t;
  return o;
}

CertifyConfig config(Gen& gen) {
  CertifyConfig c;
  c.dt = gen.uniform(0.01, 40);
  c.smoothing_window = 5;
  c.holdout_fraction = 0.125;
  c.train.gamma = gen.uniform(1e-4, 1e-2);
  c.train.learning_rate = gen.uniform(0.001, 0.1);
  c.train.epochs = 1234;
  c.train.seed = 0xfedcba9876543210ULL;
  c.train.mode = Mode::Mlp;
  c.train.hidden = {7, 3};
  return c;
}

void expect_same_config(const CertifyConfig& a, const CertifyConfig& b) {
  EXPECT_EQ(a.dt, b.dt);
  EXPECT_EQ(a.smoothing_window, b.smoothing_window);
  EXPECT_EQ(a.eps_max, b.eps_max);
  EXPECT_EQ(a.holdout_fraction, b.holdout_fraction);
  EXPECT_EQ(a.nonconstancy_tol, b.nonconstancy_tol);
  EXPECT_EQ(a.train.gamma, b.train.gamma);
  EXPECT_EQ(a.train.learning_rate, b.train.learning_rate);
  EXPECT_EQ(a.train.epochs, b.train.epochs);
  EXPECT_EQ(a.train.seed, b.train.seed);
  EXPECT_EQ(a.train.theta_max, b.train.theta_max);
  EXPECT_EQ(a.train.tol_loss, b.train.tol_loss);
  EXPECT_EQ(a.train.mode, b.train.mode);
  EXPECT_EQ(a.train.hidden, b.train.hidden);
}

void expect_same_outcome(const TrainOutcome& a, const TrainOutcome& b) {
  EXPECT_EQ(a.termination, b.termination);
  EXPECT_EQ(a.loss_history, b.loss_history);
  EXPECT_EQ(a.param_norm_history, b.param_norm_history);
  EXPECT_EQ(a.final_params.index(), b.final_params.index());
  EXPECT_EQ(flatten(a.final_params), flatten(b.final_params));
}

}  // namespace

TEST(Record, CertifiedRoundTrip) {
  Gen gen(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto q = assemble_quadratic(gen.factor(2));
    const CertificateRecord rec{config(gen), 1,
                                Certified{{q, 1e-3, gen.uniform(0, 5)},
                                          outcome(gen, gen.cholesky(2), Termination::EpochLimit)}};
    const auto back = deserialize(serialize(rec));
    expect_same_config(rec.config, back.config);
    EXPECT_EQ(back.m, 1u);
    const auto& a = std::get<Certified>(rec.verdict);
    const auto* b = std::get_if<Certified>(&back.verdict);
    ASSERT_NE(b, nullptr);
    EXPECT_EQ(a.certificate.q.matrix(), b->certificate.q.matrix());
    EXPECT_EQ(a.certificate.epsilon, b->certificate.epsilon);
    expect_same_outcome(a.outcome, b->outcome);
  }
}

TEST(Record, NotFoundAndDivergedRoundTrip) {
  Gen gen(2);
  auto cfg = config(gen);
  const auto q = assemble_quadratic(gen.factor(2));
  const CertificateRecord with_candidate{
      cfg, 1, NotFound{"plateau", outcome(gen, gen.mlp(2, {7, 3}), Termination::EpochLimit),
                       QuadraticCertificate{q, 1e-3, 0.5}}};
  const auto back = deserialize(serialize(with_candidate));
  const auto& n = std::get<NotFound>(back.verdict);
  EXPECT_EQ(n.reason, "plateau");
  ASSERT_TRUE(n.candidate.has_value());
  EXPECT_EQ(n.candidate->q.matrix(), q.matrix());
  expect_same_outcome(std::get<NotFound>(with_candidate.verdict).outcome, n.outcome);

  auto blown = gen.cholesky(2);
  blown.theta[0] = std::numeric_limits<double>::infinity();
  blown.theta[1] = std::numeric_limits<double>::quiet_NaN();
  const CertificateRecord diverged{cfg, 1, Diverged{"training diverged", outcome(gen, blown, Termination::Diverged)}};
  const auto json = to_json(diverged);
  EXPECT_TRUE(json["Q"].is_null());
  EXPECT_TRUE(json["epsilon"].is_null());
  const auto back2 = deserialize(serialize(diverged));
  const auto& d = std::get<Diverged>(back2.verdict);
  EXPECT_EQ(d.reason, "training diverged");
  const Vector theta = flatten(d.outcome.final_params);
  EXPECT_TRUE(std::isinf(theta[0]));
  EXPECT_TRUE(std::isnan(theta[1]));
}

TEST(Record, FixedFieldNames) {
  Gen gen(3);
  const CertificateRecord rec{CertifyConfig{}, 1,
                              Certified{{assemble_quadratic(gen.factor(2)), 1e-3, 0.0},
                                        outcome(gen, gen.cholesky(2), Termination::Converged)}};
  const auto json = to_json(rec);
  for (const char* key : {"mode", "m", "dt", "gamma", "Q", "epsilon", "termination", "loss_final", "seed",
                          "config"}) {
    EXPECT_TRUE(json.contains(key)) << key;
  }
  EXPECT_EQ(json["mode"], "constant");
  EXPECT_EQ(json["termination"], "converged");
  EXPECT_EQ(json["dt"], 30.0);
  EXPECT_EQ(json["config"]["eps_max"], "inf");
  EXPECT_EQ(json["Q"].size(), 2u);
  EXPECT_EQ(json["loss_final"], std::get<Certified>(rec.verdict).outcome.loss_history.back());
}

TEST(Record, MalformedInputThrows) {
  EXPECT_THROW(deserialize("{"), InputError);
  EXPECT_THROW(deserialize("[]"), InputError);
  EXPECT_THROW(deserialize(R"({"config": {}})"), InputError);
  Gen gen(4);
  const CertificateRecord rec{CertifyConfig{}, 1,
                              Certified{{assemble_quadratic(gen.factor(2)), 1e-3, 0.0},
                                        outcome(gen, gen.cholesky(2), Termination::Converged)}};
  auto json = to_json(rec);
  json["verdict"] = "maybe";
  EXPECT_THROW(record_from_json(json), InputError);
  json = to_json(rec);
  json["Q"] = nullptr;
  EXPECT_THROW(record_from_json(json), InputError);
  json = to_json(rec);
  json["params"]["theta"] = {1.0};
  EXPECT_THROW(record_from_json(json), InputError);
}

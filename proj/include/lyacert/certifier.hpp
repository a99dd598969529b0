#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <variant>

#include "lyacert/learner.hpp"
#include "lyacert/lyapunov.hpp"
#include "lyacert/timeseries.hpp"

namespace lyacert {

struct CertifyConfig {
  double dt = 30.0;
  std::size_t smoothing_window = 0;
  double eps_max = std::numeric_limits<double>::infinity();
  /// Trailing fraction of samples held out of training and used only for
  /// epsilon. 0 trains and estimates on the same samples.
  double holdout_fraction = 0.0;
  /// Mlp mode: largest allowed max_k |Q(xi_k) - mean Q|, relative to the
  /// largest entry of the mean.
  double nonconstancy_tol = 1e-6;
  TrainConfig train;

  void validate() const;
};

/// V(xi) = xi' Q xi with dV/dt <= epsilon on every sample it was checked on.
struct QuadraticCertificate {
  QuadraticForm q;
  double gamma = 0.0;
  double epsilon = 0.0;

  /// Coefficients of V = q_ee e^2 + q_cross e e_dot + q_dd e_dot^2 (m = 1 only).
  struct Coefficients {
    double q_ee;
    double q_cross;
    double q_dd;
  };
  Coefficients coefficients() const;
};

/// max(0, max_k dV/dt(xi_k)). Throws InputError on an empty trajectory or a
/// dimension mismatch.
double estimate_epsilon(const QuadraticForm& q, const UniformTrajectory& traj);

struct Certified {
  QuadraticCertificate certificate;
  TrainOutcome outcome;
};

struct NotFound {
  std::string reason;
  TrainOutcome outcome;
  /// The rejected candidate and its epsilon, when one could be formed.
  std::optional<QuadraticCertificate> candidate;
};

struct Diverged {
  std::string reason;
  TrainOutcome outcome;
};

using Verdict = std::variant<Certified, NotFound, Diverged>;

const TrainOutcome& outcome_of(const Verdict& verdict);
std::string verdict_name(const Verdict& verdict);  // "certified", "not_found", "diverged"

struct PipelineResult {
  UniformTrajectory trajectory;   // all differentiated samples
  std::size_t training_samples;   // leading samples the learner saw
  Verdict verdict;
};

/// resample -> differentiate -> train -> gate.
///
/// Gate: Diverged training is Diverged. Otherwise a candidate Q is formed
/// (the sample mean in Mlp mode, which must be constant within
/// nonconstancy_tol) and is Certified when training converged, or when it
/// stopped at the epoch limit with a negative mean dV/dt over the training
/// samples, provided epsilon <= eps_max. Anything else is NotFound.
PipelineResult run_pipeline(const RawTrajectory& raw, const CertifyConfig& config);

Verdict certify(const RawTrajectory& raw, const CertifyConfig& config);

/// One line. Certified lines carry epsilon and gamma; the others carry the
/// caveat that no certificate does not imply instability.
std::string verdict_reason(const Verdict& verdict);

}  // namespace lyacert

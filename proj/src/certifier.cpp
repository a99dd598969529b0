#include "lyacert/certifier.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "lyacert/error.hpp"
#include "lyacert/kernels.hpp"

namespace lyacert {

void CertifyConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError(fmt::format("dt must be positive, got {}", dt));
  if (smoothing_window > 1 && smoothing_window % 2 == 0) {
    throw InputError(fmt::format("smoothing window must be odd, got {}", smoothing_window));
  }
  if (!(eps_max >= 0.0)) throw InputError("eps_max must be non-negative");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    throw InputError("holdout fraction must lie in [0, 1)");
  }
  if (!(nonconstancy_tol >= 0.0)) throw InputError("non-constancy tolerance must be non-negative");
  train.validate();
}

QuadraticCertificate::Coefficients QuadraticCertificate::coefficients() const {
  if (q.dim() != 2) throw InputError("coefficient view needs a 2x2 Q (m = 1)");
  return {q(0, 0), 2.0 * q(0, 1), q(1, 1)};
}

double estimate_epsilon(const QuadraticForm& q, const UniformTrajectory& traj) {
  if (traj.samples() == 0) throw InputError("cannot estimate epsilon on an empty trajectory");
  if (static_cast<std::size_t>(traj.xi.front().size()) != q.dim()) {
    throw InputError(fmt::format("Q is {0}x{0} but the error state has dimension {1}", q.dim(),
                                 traj.xi.front().size()));
  }
  const auto rates = kernels::parallel::map(
      traj.samples(), [&](std::size_t k) { return lyapunov_rate(q, traj.xi[k], traj.xidot[k]); });
  double eps = 0.0;
  for (double v : rates) eps = std::max(eps, v);
  return eps;
}

const TrainOutcome& outcome_of(const Verdict& verdict) {
  return std::visit([](const auto& v) -> const TrainOutcome& { return v.outcome; }, verdict);
}

std::string verdict_name(const Verdict& verdict) {
  switch (verdict.index()) {
    case 0: return "certified";
    case 1: return "not_found";
    default: return "diverged";
  }
}

namespace {

double mean_rate(const QuadraticForm& q, const UniformTrajectory& traj) {
  return kernels::parallel::mean_loss(
      traj.samples(), [&](std::size_t k) { return lyapunov_rate(q, traj.xi[k], traj.xidot[k]); });
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

Verdict gate(TrainOutcome outcome, const UniformTrajectory& fit, const UniformTrajectory& check,
             const CertifyConfig& config) {
  const double gamma = config.train.gamma;
  if (outcome.termination == Termination::Diverged) {
    const double norm = outcome.param_norm_history.empty()
                            ? std::numeric_limits<double>::quiet_NaN()
                            : outcome.param_norm_history.back();
    std::string reason = fmt::format(
        "training diverged: parameter max-norm {:.4g} (limit {:.4g}), final loss {:.4g}", norm,
        config.train.theta_max, outcome.final_loss());
    return Diverged{std::move(reason), std::move(outcome)};
  }

  std::optional<QuadraticForm> q;
  double nonconstancy = 0.0;
  if (const auto* c = std::get_if<CholeskyParams>(&outcome.final_params)) {
    q = candidate_quadratic(*c);
  } else {
    auto mean = candidate_quadratic(std::get<MlpParams>(outcome.final_params), fit);
    nonconstancy = mean.nonconstancy;
    q = std::move(mean.mean);
  }
  QuadraticCertificate cert{*q, gamma, estimate_epsilon(*q, check)};

  const double limit = config.nonconstancy_tol * max_abs(q->matrix());
  if (nonconstancy > limit) {
    std::string reason = fmt::format(
        "network Q(xi) is not constant: max deviation {:.4g} from the mean exceeds {:.4g}",
        nonconstancy, limit);
    return NotFound{std::move(reason), std::move(outcome), std::move(cert)};
  }
  if (outcome.termination == Termination::EpochLimit) {
    const double rate = mean_rate(*q, fit);
    if (!(rate < 0.0)) {
      std::string reason = fmt::format(
          "no decrease found: epoch limit reached with loss {:.4g} and mean dV/dt {:.4g} >= 0",
          outcome.final_loss(), rate);
      return NotFound{std::move(reason), std::move(outcome), std::move(cert)};
    }
  }
  if (cert.epsilon > config.eps_max) {
    std::string reason = fmt::format("epsilon {:.4f} exceeds eps_max {:.4f}", cert.epsilon,
                                     config.eps_max);
    return NotFound{std::move(reason), std::move(outcome), std::move(cert)};
  }
  return Certified{std::move(cert), std::move(outcome)};
}

}  // namespace

PipelineResult run_pipeline(const RawTrajectory& raw, const CertifyConfig& config) {
  config.validate();
  raw.validate();
  UniformTrajectory traj = differentiate(resample(raw, config.dt), config.dt, config.smoothing_window);
  const std::size_t total = traj.samples();
  std::size_t fit_count = total;
  if (config.holdout_fraction > 0.0) {
    const auto held = static_cast<std::size_t>(
        std::ceil(config.holdout_fraction * static_cast<double>(total)));
    if (held == 0 || held >= total) {
      throw InputError(fmt::format("holdout fraction {} leaves no samples on one side of {}",
                                   config.holdout_fraction, total));
    }
    fit_count = total - held;
  }
  if (fit_count == total) {
    TrainOutcome outcome = train(traj, config.train);
    Verdict verdict = gate(std::move(outcome), traj, traj, config);
    return {std::move(traj), fit_count, std::move(verdict)};
  }
  const UniformTrajectory fit = traj.slice(0, fit_count);
  const UniformTrajectory check = traj.slice(fit_count, total - fit_count);
  TrainOutcome outcome = train(fit, config.train);
  Verdict verdict = gate(std::move(outcome), fit, check, config);
  return {std::move(traj), fit_count, std::move(verdict)};
}

Verdict certify(const RawTrajectory& raw, const CertifyConfig& config) {
  return run_pipeline(raw, config).verdict;
}

std::string verdict_reason(const Verdict& verdict) {
  constexpr const char* caveat = "no certificate found; this does not imply instability";
  if (const auto* c = std::get_if<Certified>(&verdict)) {
    return fmt::format("certified: dV/dt <= epsilon = {:.4f} on all samples (gamma = {:g}, {})",
                       c->certificate.epsilon, c->certificate.gamma,
                       to_string(c->outcome.termination));
  }
  if (const auto* n = std::get_if<NotFound>(&verdict)) {
    return fmt::format("not found: {}; {}", n->reason, caveat);
  }
  return fmt::format("{}; {}", std::get<Diverged>(verdict).reason, caveat);
}

}  // namespace lyacert

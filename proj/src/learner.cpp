#include "lyacert/learner.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "lyacert/error.hpp"
#include "lyacert/kernels.hpp"

namespace lyacert {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double ex = std::exp(x);
  return ex / (1.0 + ex);
}

CholeskyParams CholeskyParams::initial(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-0.01, 0.01);
  CholeskyParams p{n, Vector(static_cast<Eigen::Index>(size(n)))};
  for (Eigen::Index i = 0; i < p.theta.size(); ++i) p.theta[i] = noise(rng);
  return p;
}

namespace {

void require_theta(const CholeskyParams& params) {
  if (params.n == 0 || static_cast<std::size_t>(params.theta.size()) != CholeskyParams::size(params.n)) {
    throw InputError(fmt::format("Cholesky parameters for n = {} need {} entries, got {}", params.n,
                                 CholeskyParams::size(params.n), params.theta.size()));
  }
  if (!params.theta.allFinite()) throw InputError("Cholesky parameters are not finite");
}

// Dense lower factor from theta, plus d(diagonal)/d(theta) in `slope`.
Matrix dense_factor(std::size_t n, const double* theta, Vector* slope) {
  const auto nn = static_cast<Eigen::Index>(n);
  Matrix lower = Matrix::Zero(nn, nn);
  if (slope != nullptr) slope->resize(nn);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    lower(ii, ii) = softplus(theta[i]);
    if (slope != nullptr) (*slope)[ii] = logistic(theta[i]);
    for (std::size_t j = 0; j < i; ++j) {
      lower(ii, static_cast<Eigen::Index>(j)) = theta[CholeskyParams::offdiag_index(n, i, j)];
    }
  }
  return lower;
}

// 2 (L'xi) . (L'xidot)
double factor_rate(const Matrix& lower, const Vector& xi, const Vector& xidot) {
  const Eigen::Index n = lower.rows();
  double s = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    double a = 0.0;
    double b = 0.0;
    for (Eigen::Index i = j; i < n; ++i) {
      a += lower(i, j) * xi[i];
      b += lower(i, j) * xidot[i];
    }
    s += a * b;
  }
  return 2.0 * s;
}

// d rate / d theta, using d rate / d L_ij = 2 (xi_i (L'xidot)_j + xidot_i (L'xi)_j).
void factor_rate_grad(const Matrix& lower, const Vector& slope, const Vector& xi,
                      const Vector& xidot, std::span<double> g) {
  const Eigen::Index n = lower.rows();
  const auto un = static_cast<std::size_t>(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double a = 0.0;
    double b = 0.0;
    for (Eigen::Index i = j; i < n; ++i) {
      a += lower(i, j) * xi[i];
      b += lower(i, j) * xidot[i];
    }
    const auto uj = static_cast<std::size_t>(j);
    g[uj] = 2.0 * (xi[j] * b + xidot[j] * a) * slope[j];
    for (Eigen::Index i = j + 1; i < n; ++i) {
      g[CholeskyParams::offdiag_index(un, static_cast<std::size_t>(i), uj)] =
          2.0 * (xi[i] * b + xidot[i] * a);
    }
  }
}

void require_state_dim(std::size_t n, const UniformTrajectory& traj) {
  if (traj.samples() == 0) throw InputError("trajectory has no samples");
  if (static_cast<std::size_t>(traj.xi.front().size()) != n) {
    throw InputError(fmt::format("parameters act on dimension {}, trajectory states have {}", n,
                                 traj.xi.front().size()));
  }
}

}  // namespace

LowerTriangularFactor assemble_factor(const CholeskyParams& params) {
  require_theta(params);
  const std::size_t n = params.n;
  std::vector<double> packed(LowerTriangularFactor::packed_size(n));
  for (std::size_t i = 0; i < n; ++i) {
    packed[LowerTriangularFactor::packed_index(i, i)] = softplus(params.theta[static_cast<Eigen::Index>(i)]);
    for (std::size_t j = 0; j < i; ++j) {
      packed[LowerTriangularFactor::packed_index(i, j)] =
          params.theta[static_cast<Eigen::Index>(CholeskyParams::offdiag_index(n, i, j))];
    }
  }
  return {n, std::move(packed)};
}

// ---------------------------------------------------------------------------
// MLP

std::size_t MlpParams::parameter_count() const {
  std::size_t count = 0;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) count += layers[l + 1] * (layers[l] + 1);
  return count;
}

void MlpParams::validate() const {
  if (layers.size() < 2) throw InputError("network needs at least an input and an output layer");
  const std::size_t n = layers.front();
  if (n == 0 || layers.back() != CholeskyParams::size(n)) {
    throw InputError(fmt::format("network output must have n(n+1)/2 = {} units for input {}, got {}",
                                 CholeskyParams::size(n), n, layers.back()));
  }
  if (weights.size() != layers.size() - 1 || biases.size() != layers.size() - 1) {
    throw InputError("network has the wrong number of weight layers");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const auto out = static_cast<Eigen::Index>(layers[l + 1]);
    const auto in = static_cast<Eigen::Index>(layers[l]);
    if (weights[l].rows() != out || weights[l].cols() != in || biases[l].size() != out) {
      throw InputError(fmt::format("layer {} does not chain: expected {}x{}", l, out, in));
    }
  }
}

Vector MlpParams::flatten() const {
  Vector flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (Eigen::Index r = 0; r < weights[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < weights[l].cols(); ++c) flat[at++] = weights[l](r, c);
    }
    for (Eigen::Index r = 0; r < biases[l].size(); ++r) flat[at++] = biases[l][r];
  }
  return flat;
}

void MlpParams::assign(const Vector& flat) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count()) {
    throw InputError(fmt::format("network has {} parameters, got {}", parameter_count(), flat.size()));
  }
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (Eigen::Index r = 0; r < weights[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < weights[l].cols(); ++c) weights[l](r, c) = flat[at++];
    }
    for (Eigen::Index r = 0; r < biases[l].size(); ++r) biases[l][r] = flat[at++];
  }
}

MlpParams MlpParams::initial(std::size_t n, std::span<const std::size_t> hidden, std::uint64_t seed) {
  MlpParams p;
  p.layers.push_back(n);
  p.layers.insert(p.layers.end(), hidden.begin(), hidden.end());
  p.layers.push_back(CholeskyParams::size(n));
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < p.layers.size(); ++l) {
    const auto out = static_cast<Eigen::Index>(p.layers[l + 1]);
    const auto in = static_cast<Eigen::Index>(p.layers[l]);
    Matrix w = Matrix::Zero(out, in);
    Vector b = Vector::Zero(out);
    if (l + 2 < p.layers.size()) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(in));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (Eigen::Index r = 0; r < out; ++r) {
        for (Eigen::Index c = 0; c < in; ++c) w(r, c) = dist(rng);
      }
    } else {
      b = CholeskyParams::initial(n, seed).theta;
    }
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  p.validate();
  return p;
}

namespace {

// Activations of every layer; the last entry is the network output.
std::vector<Vector> forward_pass(const MlpParams& params, const Vector& xi) {
  std::vector<Vector> acts;
  acts.reserve(params.weights.size() + 1);
  acts.push_back(xi);
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    Vector z = params.weights[l] * acts.back() + params.biases[l];
    if (l + 1 < params.weights.size()) z = z.array().tanh().matrix();
    acts.push_back(std::move(z));
  }
  return acts;
}

}  // namespace

CholeskyParams mlp_forward(const MlpParams& params, const Vector& xi) {
  params.validate();
  if (static_cast<std::size_t>(xi.size()) != params.input_dim()) {
    throw InputError(fmt::format("network input has dimension {}, got {}", params.input_dim(), xi.size()));
  }
  auto acts = forward_pass(params, xi);
  return {params.input_dim(), std::move(acts.back())};
}

// ---------------------------------------------------------------------------
// Names

std::string to_string(Mode mode) { return mode == Mode::Constant ? "constant" : "mlp"; }

std::string to_string(Termination termination) {
  switch (termination) {
    case Termination::Converged: return "converged";
    case Termination::EpochLimit: return "epoch_limit";
    case Termination::Diverged: return "diverged";
  }
  return "unknown";
}

Mode mode_from_string(const std::string& s) {
  if (s == "constant") return Mode::Constant;
  if (s == "mlp") return Mode::Mlp;
  throw InputError(fmt::format("unknown mode '{}'", s));
}

Termination termination_from_string(const std::string& s) {
  if (s == "converged") return Termination::Converged;
  if (s == "epoch_limit") return Termination::EpochLimit;
  if (s == "diverged") return Termination::Diverged;
  throw InputError(fmt::format("unknown termination '{}'", s));
}

// ---------------------------------------------------------------------------
// Parameter plumbing

Vector flatten(const ModelParams& params) {
  return std::visit(
      [](const auto& p) -> Vector {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, CholeskyParams>) {
          return p.theta;
        } else {
          return p.flatten();
        }
      },
      params);
}

ModelParams with_flat(const ModelParams& params, const Vector& flat) {
  return std::visit(
      [&flat](const auto& p) -> ModelParams {
        auto copy = p;
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, CholeskyParams>) {
          if (flat.size() != copy.theta.size()) throw InputError("parameter vector has the wrong size");
          copy.theta = flat;
        } else {
          copy.assign(flat);
        }
        return copy;
      },
      params);
}

std::size_t state_dim(const ModelParams& params) {
  return std::visit(
      [](const auto& p) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, CholeskyParams>) {
          return p.n;
        } else {
          return p.input_dim();
        }
      },
      params);
}

void TrainConfig::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InputError("gamma must be positive and finite");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw InputError("learning rate must be non-negative and finite");
  }
  if (epochs == 0) throw InputError("epochs must be positive");
  if (!(theta_max > 0.0)) throw InputError("theta_max must be positive");
  if (!(tol_loss >= 0.0) || !std::isfinite(tol_loss)) throw InputError("tol_loss must be non-negative");
  if (mode == Mode::Mlp) {
    for (std::size_t h : hidden) {
      if (h == 0) throw InputError("hidden layer width must be positive");
    }
  }
}

double TrainOutcome::final_loss() const {
  return loss_history.empty() ? std::numeric_limits<double>::quiet_NaN() : loss_history.back();
}

double hinge_loss(double vdot, double gamma) { return std::max(0.0, vdot + gamma); }

// ---------------------------------------------------------------------------
// Objectives

ConstantObjective::ConstantObjective(const CholeskyParams& params, const UniformTrajectory& traj,
                                     double gamma)
    : n_(params.n), traj_(&traj), gamma_(gamma) {
  require_theta(params);
  require_state_dim(n_, traj);
  lower_ = dense_factor(n_, params.theta.data(), &diag_slope_);
}

double ConstantObjective::rate(std::size_t k) const {
  return factor_rate(lower_, traj_->xi[k], traj_->xidot[k]);
}

double ConstantObjective::loss(std::size_t k) const { return hinge_loss(rate(k), gamma_); }

double ConstantObjective::loss_grad(std::size_t k, std::span<double> g) const {
  const double h = rate(k) + gamma_;
  if (!(h > 0.0)) return 0.0;
  factor_rate_grad(lower_, diag_slope_, traj_->xi[k], traj_->xidot[k], g);
  return h;
}

MlpObjective::MlpObjective(const MlpParams& params, const UniformTrajectory& traj, double gamma)
    : params_(&params), traj_(&traj), gamma_(gamma) {
  params.validate();
  require_state_dim(params.input_dim(), traj);
}

double MlpObjective::rate(std::size_t k) const {
  const auto acts = forward_pass(*params_, traj_->xi[k]);
  const Matrix lower = dense_factor(params_->input_dim(), acts.back().data(), nullptr);
  return factor_rate(lower, traj_->xi[k], traj_->xidot[k]);
}

double MlpObjective::loss(std::size_t k) const { return hinge_loss(rate(k), gamma_); }

double MlpObjective::loss_grad(std::size_t k, std::span<double> g) const {
  const std::size_t n = params_->input_dim();
  const Vector& xi = traj_->xi[k];
  const Vector& xidot = traj_->xidot[k];
  const auto acts = forward_pass(*params_, xi);
  Vector slope;
  const Matrix lower = dense_factor(n, acts.back().data(), &slope);
  const double h = factor_rate(lower, xi, xidot) + gamma_;
  if (!(h > 0.0)) return 0.0;

  Vector delta = Vector::Zero(static_cast<Eigen::Index>(CholeskyParams::size(n)));
  factor_rate_grad(lower, slope, xi, xidot, std::span<double>(delta.data(), static_cast<std::size_t>(delta.size())));

  // Flat offsets of each layer's block.
  std::vector<std::size_t> offset(params_->weights.size());
  std::size_t at = 0;
  for (std::size_t l = 0; l < params_->weights.size(); ++l) {
    offset[l] = at;
    at += static_cast<std::size_t>(params_->weights[l].size() + params_->biases[l].size());
  }

  for (std::size_t l = params_->weights.size(); l-- > 0;) {
    const Matrix& w = params_->weights[l];
    const Vector& input = acts[l];
    std::size_t idx = offset[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) g[idx++] = delta[r] * input[c];
    }
    for (Eigen::Index r = 0; r < w.rows(); ++r) g[idx++] = delta[r];
    if (l > 0) {
      delta = (w.transpose() * delta).cwiseProduct((1.0 - input.array().square()).matrix());
    }
  }
  return h;
}

double batch_loss(const ModelParams& params, const UniformTrajectory& traj, double gamma) {
  return std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        using Objective = std::conditional_t<std::is_same_v<P, CholeskyParams>, ConstantObjective, MlpObjective>;
        const Objective objective(p, traj, gamma);
        return kernels::parallel::mean_loss(objective.samples(),
                                            [&](std::size_t k) { return objective.loss(k); });
      },
      params);
}

namespace {

kernels::LossGrad loss_and_grad(const ModelParams& params, const UniformTrajectory& traj, double gamma) {
  return std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        using Objective = std::conditional_t<std::is_same_v<P, CholeskyParams>, ConstantObjective, MlpObjective>;
        const Objective objective(p, traj, gamma);
        return kernels::parallel::mean_loss_grad(
            objective.samples(), objective.dim(),
            [&](std::size_t k, std::span<double> g) { return objective.loss_grad(k, g); });
      },
      params);
}

// False once a diagonal softplus underflows to zero.
bool factor_representable(const ModelParams& params) {
  if (const auto* p = std::get_if<CholeskyParams>(&params)) {
    for (std::size_t i = 0; i < p->n; ++i) {
      if (!(softplus(p->theta[static_cast<Eigen::Index>(i)]) > 0.0)) return false;
    }
  }
  return true;
}

}  // namespace

Vector batch_grad(const ModelParams& params, const UniformTrajectory& traj, double gamma) {
  return loss_and_grad(params, traj, gamma).grad;
}

TrainOutcome train(const UniformTrajectory& traj, const TrainConfig& config) {
  config.validate();
  if (traj.samples() == 0) throw InputError("trajectory has no samples");
  const auto n = static_cast<std::size_t>(traj.xi.front().size());

  TrainOutcome outcome;
  if (config.mode == Mode::Constant) {
    outcome.final_params = CholeskyParams::initial(n, config.seed);
  } else {
    outcome.final_params = MlpParams::initial(n, config.hidden, config.seed);
  }
  require_state_dim(n, traj);
  outcome.loss_history.reserve(config.epochs);
  outcome.param_norm_history.reserve(config.epochs);

  ModelParams& params = outcome.final_params;
  Vector flat = flatten(params);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double norm = flat.size() > 0 ? flat.cwiseAbs().maxCoeff() : 0.0;
    if (!std::isfinite(norm) || !factor_representable(params)) {
      outcome.termination = Termination::Diverged;
      return outcome;
    }
    const auto [loss, grad] = loss_and_grad(params, traj, config.gamma);
    if (!std::isfinite(loss) || !grad.allFinite()) {
      outcome.termination = Termination::Diverged;
      return outcome;
    }
    outcome.loss_history.push_back(loss);
    outcome.param_norm_history.push_back(norm);
    if (loss <= config.tol_loss) {
      outcome.termination = Termination::Converged;
      return outcome;
    }
    if (norm > config.theta_max) {
      outcome.termination = Termination::Diverged;
      return outcome;
    }
    if (epoch + 1 == config.epochs) break;
    flat -= config.learning_rate * grad;
    params = with_flat(params, flat);
  }
  outcome.termination = Termination::EpochLimit;
  return outcome;
}

QuadraticForm candidate_quadratic(const CholeskyParams& params) {
  return assemble_quadratic(assemble_factor(params));
}

MeanQuadratic candidate_quadratic(const MlpParams& params, const UniformTrajectory& traj) {
  params.validate();
  require_state_dim(params.input_dim(), traj);
  std::vector<Matrix> per_sample;
  per_sample.reserve(traj.samples());
  const auto n = static_cast<Eigen::Index>(params.input_dim());
  Matrix sum = Matrix::Zero(n, n);
  for (const Vector& xi : traj.xi) {
    per_sample.push_back(candidate_quadratic(mlp_forward(params, xi)).matrix());
    sum += per_sample.back();
  }
  Matrix mean = sum / static_cast<double>(traj.samples());
  mean = 0.5 * (mean + mean.transpose());
  double dev = 0.0;
  for (const Matrix& q : per_sample) dev = std::max(dev, (q - mean).cwiseAbs().maxCoeff());
  return {QuadraticForm(std::move(mean)), dev};
}

}  // namespace lyacert

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "lyacert/lyapunov.hpp"
#include "lyacert/timeseries.hpp"

namespace lyacert {

/// softplus(x) = ln(1 + e^x), evaluated as max(x, 0) + ln(1 + e^-|x|).
double softplus(double x);
/// d softplus / dx.
double logistic(double x);

/// Unconstrained parameters of a Cholesky factor of dimension n.
///
/// theta[0, n) are diagonal pre-activations (mapped through softplus);
/// theta[n, n(n+1)/2) are the strictly-lower entries in row-major order
/// (1,0), (2,0), (2,1), ... copied as they are.
struct CholeskyParams {
  std::size_t n = 0;
  Vector theta;

  static constexpr std::size_t size(std::size_t n) { return n * (n + 1) / 2; }
  static constexpr std::size_t offdiag_index(std::size_t n, std::size_t i, std::size_t j) {
    return n + i * (i - 1) / 2 + j;
  }

  /// Zero pre-activations plus uniform noise in [-0.01, 0.01] drawn from seed.
  static CholeskyParams initial(std::size_t n, std::uint64_t seed);
};

LowerTriangularFactor assemble_factor(const CholeskyParams& params);

/// Multilayer perceptron mapping xi (dimension n) to a CholeskyParams-shaped
/// output. Hidden layers use tanh, the output layer is affine.
struct MlpParams {
  std::vector<std::size_t> layers;  // [n, hidden..., n(n+1)/2]
  std::vector<Matrix> weights;      // weights[l] is layers[l+1] x layers[l]
  std::vector<Vector> biases;

  std::size_t input_dim() const { return layers.front(); }
  std::size_t parameter_count() const;

  /// Row-major weights then bias, layer by layer.
  Vector flatten() const;
  void assign(const Vector& flat);

  /// Throws InputError if the layer sizes do not chain or the output size
  /// is not n(n+1)/2 for the input size n.
  void validate() const;

  /// Hidden layers ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), zero hidden biases,
  /// zero output weights and CholeskyParams::initial as the output bias, so a
  /// fresh network is exactly the constant-mode starting point.
  static MlpParams initial(std::size_t n, std::span<const std::size_t> hidden, std::uint64_t seed);
};

CholeskyParams mlp_forward(const MlpParams& params, const Vector& xi);

enum class Mode { Constant, Mlp };
enum class Termination { Converged, EpochLimit, Diverged };

std::string to_string(Mode mode);
std::string to_string(Termination termination);
Mode mode_from_string(const std::string& s);
Termination termination_from_string(const std::string& s);

using ModelParams = std::variant<CholeskyParams, MlpParams>;

Vector flatten(const ModelParams& params);
ModelParams with_flat(const ModelParams& params, const Vector& flat);
/// Dimension n of the error state the parameters act on.
std::size_t state_dim(const ModelParams& params);

struct TrainConfig {
  double gamma = 1e-3;
  double learning_rate = 0.05;
  std::size_t epochs = 5000;
  std::uint64_t seed = 0;
  double theta_max = 1e6;
  double tol_loss = 1e-9;
  Mode mode = Mode::Constant;
  std::vector<std::size_t> hidden{16};

  /// Throws InputError when a field is out of range.
  void validate() const;
};

struct TrainOutcome {
  std::vector<double> loss_history;
  std::vector<double> param_norm_history;  // max-norm of the flattened parameters
  ModelParams final_params;
  Termination termination = Termination::EpochLimit;

  double final_loss() const;
};

/// max(0, vdot + gamma)
double hinge_loss(double vdot, double gamma);

/// Hinge objective for one constant Q = L L' over a trajectory.
class ConstantObjective {
 public:
  ConstantObjective(const CholeskyParams& params, const UniformTrajectory& traj, double gamma);

  std::size_t samples() const { return traj_->samples(); }
  std::size_t dim() const { return CholeskyParams::size(n_); }
  double rate(std::size_t k) const;
  double loss(std::size_t k) const;
  /// Loss of sample k; writes its (sub)gradient with respect to theta into g.
  double loss_grad(std::size_t k, std::span<double> g) const;

 private:
  std::size_t n_;
  Matrix lower_;
  Vector diag_slope_;
  const UniformTrajectory* traj_;
  double gamma_;
};

/// Hinge objective where each sample's Q comes from the network output at xi_k.
class MlpObjective {
 public:
  MlpObjective(const MlpParams& params, const UniformTrajectory& traj, double gamma);

  std::size_t samples() const { return traj_->samples(); }
  std::size_t dim() const { return params_->parameter_count(); }
  double rate(std::size_t k) const;
  double loss(std::size_t k) const;
  double loss_grad(std::size_t k, std::span<double> g) const;

 private:
  const MlpParams* params_;
  const UniformTrajectory* traj_;
  double gamma_;
};

/// Mean hinge loss over all samples. Throws InputError on a dimension mismatch.
double batch_loss(const ModelParams& params, const UniformTrajectory& traj, double gamma);
/// Gradient of batch_loss with respect to flatten(params); the hinge kink
/// contributes zero.
Vector batch_grad(const ModelParams& params, const UniformTrajectory& traj, double gamma);

/// Full-batch gradient descent from the seeded initialisation.
///
/// Every epoch evaluates the loss at the current parameters and records it;
/// training stops as Converged once the loss is <= tol_loss and as Diverged
/// once the parameter max-norm exceeds theta_max or the loss is not finite.
/// final_params are the parameters whose loss was recorded last.
TrainOutcome train(const UniformTrajectory& traj, const TrainConfig& config);

/// The Q of a constant-mode candidate.
QuadraticForm candidate_quadratic(const CholeskyParams& params);

/// Per-sample Q(xi_k) of a network candidate, their mean and the largest
/// entrywise deviation from it.
struct MeanQuadratic {
  QuadraticForm mean;
  double nonconstancy = 0.0;
};
MeanQuadratic candidate_quadratic(const MlpParams& params, const UniformTrajectory& traj);

}  // namespace lyacert

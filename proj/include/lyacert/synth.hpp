#pragma once

#include <cstdint>
#include <string>

#include "lyacert/lyapunov.hpp"
#include "lyacert/timeseries.hpp"

namespace lyacert {

/// Linear error dynamics xidot = A xi on the stacked state xi = [e; e_dot].
class LtiSystem {
 public:
  enum class Label { Hurwitz, Unstable };

  /// Labels A by the largest real part of its eigenvalues (< 0 is Hurwitz).
  /// Throws InvariantError if A is not square with even dimension, or not finite.
  explicit LtiSystem(Matrix a);

  /// Second-order error dynamics e_ddot = -freq^2 e - 2 damping freq e_dot.
  static LtiSystem damped_oscillator(double damping, double freq);
  /// e_ddot = rate e_dot, so e(t) = e0 exp(rate t) when e_dot(0) = rate e0.
  static LtiSystem exponential(double rate);

  const Matrix& a() const { return a_; }
  Label label() const { return label_; }
  double spectral_abscissa() const { return abscissa_; }
  std::size_t state_dim() const { return static_cast<std::size_t>(a_.rows()); }

 private:
  Matrix a_;
  Label label_;
  double abscissa_;
};

std::string to_string(LtiSystem::Label label);

struct NoiseSpec {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

/// Classical fixed-step RK4 on xidot = A xi from xi0, emitting every step on
/// t = 0, h, ..., up to t_end. The trajectory is framed as tracking: r = 0 and
/// x = -e, where e is the first half of xi, so tracking_error recovers e.
RawTrajectory simulate(const LtiSystem& system, const Vector& xi0, double t_end, double h);

/// Full RK4 state trajectory (both halves of xi) on the same grid as simulate.
std::vector<Vector> integrate_rk4(const Matrix& a, const Vector& xi0, double t_end, double h);

/// x <- x + N(0, sigma^2) per entry from a generator seeded with spec.seed.
RawTrajectory add_noise(const RawTrajectory& raw, const NoiseSpec& spec);

/// The unique symmetric Q with A'Q + QA = -I for a 2x2 Hurwitz A.
/// Throws InputError for any other A.
QuadraticForm solve_lyapunov_2x2(const Matrix& a);

}  // namespace lyacert

#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace lyacert {

using Vector = Eigen::VectorXd;

/// Time-stamped reference r(t) and observed state x(t), both of dimension m.
struct RawTrajectory {
  std::vector<double> t;
  std::vector<Vector> r;
  std::vector<Vector> x;

  std::size_t size() const { return t.size(); }
  std::size_t dim() const { return r.empty() ? 0 : static_cast<std::size_t>(r.front().size()); }

  /// Throws InputError unless t is strictly increasing, there are at least
  /// three samples, every r/x has the same dimension m >= 1 and all entries
  /// are finite.
  void validate() const;
};

/// Tracking error on a uniform grid together with the stacked error states
/// xi_k = [e_k; e_dot_k] and their rates xidot_k = [e_dot_k; e_ddot_k].
///
/// The first and last grid points have no centred stencil and carry no
/// (xi, xidot) pair, so xi[k] belongs to grid time t[k + 1].
struct UniformTrajectory {
  double dt = 0.0;
  std::size_t m = 0;
  std::vector<double> t;
  std::vector<Vector> e;
  std::vector<Vector> xi;
  std::vector<Vector> xidot;

  std::size_t samples() const { return xi.size(); }
  std::size_t state_dim() const { return 2 * m; }
  double sample_time(std::size_t k) const { return t[k + 1]; }

  /// Builds a trajectory straight from (xi, xidot) pairs, with no time grid.
  /// Used wherever the error states come from somewhere other than differentiate().
  static UniformTrajectory from_samples(std::vector<Vector> xi, std::vector<Vector> xidot,
                                        double dt = 1.0);

  /// Samples [first, first + count) as a new trajectory (grid and e are kept whole).
  UniformTrajectory slice(std::size_t first, std::size_t count) const;
};

/// e = r - x.
Vector tracking_error(const Vector& r, const Vector& x);

/// Linear interpolation onto t_first, t_first + dt, ... up to the last grid
/// point not beyond t_last.
RawTrajectory resample(const RawTrajectory& raw, double dt);

/// Centred moving average of odd width over a sequence of vectors. The window
/// shrinks symmetrically at the ends. Width 0 or 1 is the identity.
std::vector<Vector> moving_average(const std::vector<Vector>& series, std::size_t width);

/// Central first and second differences of e = r - x on a uniform grid.
///
/// smoothing_window > 1 applies moving_average to e before differencing.
/// Throws InputError on a non-uniform grid (tolerance 1e-9 * dt), fewer than
/// three samples or an even smoothing window.
UniformTrajectory differentiate(const RawTrajectory& raw, double dt,
                                std::size_t smoothing_window = 0);

}  // namespace lyacert

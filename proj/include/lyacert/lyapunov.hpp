#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "lyacert/timeseries.hpp"

namespace lyacert {

using Matrix = Eigen::MatrixXd;

/// Lower-triangular L with strictly positive diagonal, packed row by row:
/// (0,0), (1,0), (1,1), (2,0), ...
class LowerTriangularFactor {
 public:
  /// Throws InvariantError on a wrong entry count, a non-positive diagonal
  /// or a non-finite entry.
  LowerTriangularFactor(std::size_t n, std::vector<double> packed);

  static LowerTriangularFactor identity(std::size_t n);
  static LowerTriangularFactor from_matrix(const Matrix& lower);

  static constexpr std::size_t packed_size(std::size_t n) { return n * (n + 1) / 2; }
  static constexpr std::size_t packed_index(std::size_t i, std::size_t j) {
    return i * (i + 1) / 2 + j;
  }

  std::size_t dim() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const {
    return j > i ? 0.0 : packed_[packed_index(i, j)];
  }
  std::span<const double> packed() const { return packed_; }
  Matrix matrix() const;

 private:
  std::size_t n_;
  std::vector<double> packed_;
};

/// Symmetric matrix Q of the candidate V(xi) = xi' Q xi.
class QuadraticForm {
 public:
  /// Throws InvariantError unless q is square, finite and symmetric to
  /// 1e-12 relative to its largest entry.
  explicit QuadraticForm(Matrix q);

  std::size_t dim() const { return static_cast<std::size_t>(q_.rows()); }
  const Matrix& matrix() const { return q_; }
  double operator()(std::size_t i, std::size_t j) const {
    return q_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  double min_eigenvalue() const;

 private:
  Matrix q_;
};

/// Q = L L'. Every entry is formed once and mirrored, so the result is
/// exactly symmetric.
QuadraticForm assemble_quadratic(const LowerTriangularFactor& factor);

/// V(xi) = xi' Q xi.
double lyapunov_value(const QuadraticForm& q, const Vector& xi);

/// dV/dt = 2 xi' Q xidot along a sampled trajectory (chain rule, Q symmetric).
double lyapunov_rate(const QuadraticForm& q, const Vector& xi, const Vector& xidot);

}  // namespace lyacert

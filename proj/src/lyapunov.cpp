#include "lyacert/lyapunov.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "lyacert/error.hpp"

namespace lyacert {

LowerTriangularFactor::LowerTriangularFactor(std::size_t n, std::vector<double> packed)
    : n_(n), packed_(std::move(packed)) {
  if (n_ == 0) throw InvariantError("factor dimension must be positive");
  if (packed_.size() != packed_size(n_)) {
    throw InvariantError(fmt::format("factor of dimension {} needs {} entries, got {}", n_,
                                     packed_size(n_), packed_.size()));
  }
  for (double v : packed_) {
    if (!std::isfinite(v)) throw InvariantError("factor has a non-finite entry");
  }
  for (std::size_t i = 0; i < n_; ++i) {
    const double d = packed_[packed_index(i, i)];
    if (!(d > 0.0)) throw InvariantError(fmt::format("factor diagonal {} is {}, not positive", i, d));
  }
}

LowerTriangularFactor LowerTriangularFactor::identity(std::size_t n) {
  std::vector<double> packed(packed_size(n), 0.0);
  for (std::size_t i = 0; i < n; ++i) packed[packed_index(i, i)] = 1.0;
  return {n, std::move(packed)};
}

LowerTriangularFactor LowerTriangularFactor::from_matrix(const Matrix& lower) {
  if (lower.rows() != lower.cols()) throw InvariantError("factor must be square");
  const auto n = static_cast<std::size_t>(lower.rows());
  std::vector<double> packed;
  packed.reserve(packed_size(n));
  for (Eigen::Index i = 0; i < lower.rows(); ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) packed.push_back(lower(i, j));
  }
  return {n, std::move(packed)};
}

Matrix LowerTriangularFactor::matrix() const {
  const auto n = static_cast<Eigen::Index>(n_);
  Matrix out = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = packed_[packed_index(i, j)];
    }
  }
  return out;
}

QuadraticForm::QuadraticForm(Matrix q) : q_(std::move(q)) {
  if (q_.rows() != q_.cols() || q_.rows() == 0) throw InvariantError("Q must be square and non-empty");
  if (!q_.allFinite()) throw InvariantError("Q has a non-finite entry");
  const double scale = std::max(1.0, q_.cwiseAbs().maxCoeff());
  const double asym = (q_ - q_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) throw InvariantError(fmt::format("Q is not symmetric (|Q - Q'| = {})", asym));
}

double QuadraticForm::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(q_, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

QuadraticForm assemble_quadratic(const LowerTriangularFactor& factor) {
  const std::size_t n = factor.dim();
  Matrix q(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k <= j; ++k) s += factor(i, k) * factor(j, k);
      q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s;
      q(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = s;
    }
  }
  return QuadraticForm(std::move(q));
}

namespace {

void require_dim(const QuadraticForm& q, const Vector& v, const char* what) {
  if (static_cast<std::size_t>(v.size()) != q.dim()) {
    throw InputError(fmt::format("{} has dimension {}, candidate expects {}", what, v.size(), q.dim()));
  }
}

}  // namespace

double lyapunov_value(const QuadraticForm& q, const Vector& xi) {
  require_dim(q, xi, "xi");
  return xi.dot(q.matrix() * xi);
}

double lyapunov_rate(const QuadraticForm& q, const Vector& xi, const Vector& xidot) {
  require_dim(q, xi, "xi");
  require_dim(q, xidot, "xidot");
  return 2.0 * xi.dot(q.matrix() * xidot);
}

}  // namespace lyacert

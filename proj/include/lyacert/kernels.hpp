#pragma once

// Per-sample reductions behind the learner's loss and gradient.
//
// Each kernel comes in two flavours with the same contract: `serial` is the
// reference loop and `parallel` evaluates the per-sample terms with OpenMP.
// Both sum the terms in ascending sample order, so their results are
// bitwise identical for any thread count.

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace lyacert::kernels {

struct LossGrad {
  double loss = 0.0;
  Eigen::VectorXd grad;
};

// A GradTerm is callable as `double term(std::size_t k, std::span<double> g)`:
// it returns the loss of sample k and writes d(loss_k)/d(params) into g,
// which arrives zeroed and has the gradient dimension.

namespace serial {

template <class GradTerm>
LossGrad mean_loss_grad(std::size_t count, std::size_t dim, const GradTerm& term) {
  LossGrad out{0.0, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim))};
  if (count == 0) return out;
  Eigen::VectorXd g(static_cast<Eigen::Index>(dim));
  for (std::size_t k = 0; k < count; ++k) {
    g.setZero();
    out.loss += term(k, std::span<double>(g.data(), dim));
    out.grad += g;
  }
  const double inv = 1.0 / static_cast<double>(count);
  out.loss *= inv;
  out.grad *= inv;
  return out;
}

template <class LossTerm>
double mean_loss(std::size_t count, const LossTerm& term) {
  if (count == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < count; ++k) sum += term(k);
  return sum * (1.0 / static_cast<double>(count));
}

template <class Map>
std::vector<double> map(std::size_t count, const Map& f) {
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) out[k] = f(k);
  return out;
}

}  // namespace serial

namespace parallel {

/// Samples per parallel batch; bounds the per-sample gradient buffer.
inline constexpr std::size_t kBatch = 4096;

template <class GradTerm>
LossGrad mean_loss_grad(std::size_t count, std::size_t dim, const GradTerm& term) {
  LossGrad out{0.0, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim))};
  if (count == 0) return out;
  // One column per sample: terms are computed concurrently, summed in order.
  const std::size_t width = std::min(count, kBatch);
  Eigen::MatrixXd g(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(width));
  std::vector<double> loss(width);
  for (std::size_t first = 0; first < count; first += width) {
    const std::size_t len = std::min(width, count - first);
    g.setZero();
    const auto n = static_cast<std::ptrdiff_t>(len);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      loss[static_cast<std::size_t>(i)] = term(first + static_cast<std::size_t>(i),
                                               std::span<double>(g.col(i).data(), dim));
    }
    for (std::size_t i = 0; i < len; ++i) {
      out.loss += loss[i];
      out.grad += g.col(static_cast<Eigen::Index>(i));
    }
  }
  const double inv = 1.0 / static_cast<double>(count);
  out.loss *= inv;
  out.grad *= inv;
  return out;
}

template <class LossTerm>
double mean_loss(std::size_t count, const LossTerm& term) {
  if (count == 0) return 0.0;
  std::vector<double> loss(count);
  const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    loss[static_cast<std::size_t>(k)] = term(static_cast<std::size_t>(k));
  }
  double sum = 0.0;
  for (double v : loss) sum += v;
  return sum * (1.0 / static_cast<double>(count));
}

template <class Map>
std::vector<double> map(std::size_t count, const Map& f) {
  std::vector<double> out(count);
  const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    out[static_cast<std::size_t>(k)] = f(static_cast<std::size_t>(k));
  }
  return out;
}

}  // namespace parallel

}  // namespace lyacert::kernels

#include "lyacert/synth.hpp"

#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "lyacert/error.hpp"

namespace lyacert {

LtiSystem::LtiSystem(Matrix a) : a_(std::move(a)) {
  if (a_.rows() != a_.cols() || a_.rows() == 0 || a_.rows() % 2 != 0) {
    throw InvariantError("system matrix must be square with even dimension");
  }
  if (!a_.allFinite()) throw InvariantError("system matrix has a non-finite entry");
  Eigen::EigenSolver<Matrix> solver(a_, false);
  abscissa_ = solver.eigenvalues().real().maxCoeff();
  label_ = abscissa_ < 0.0 ? Label::Hurwitz : Label::Unstable;
}

LtiSystem LtiSystem::damped_oscillator(double damping, double freq) {
  if (!std::isfinite(damping) || !std::isfinite(freq)) throw InputError("non-finite oscillator parameter");
  Matrix a(2, 2);
  a << 0.0, 1.0, -freq * freq, -2.0 * damping * freq;
  return LtiSystem(std::move(a));
}

LtiSystem LtiSystem::exponential(double rate) {
  if (!std::isfinite(rate)) throw InputError("non-finite growth rate");
  Matrix a(2, 2);
  a << 0.0, 1.0, 0.0, rate;
  return LtiSystem(std::move(a));
}

std::string to_string(LtiSystem::Label label) {
  return label == LtiSystem::Label::Hurwitz ? "hurwitz" : "unstable";
}

std::vector<Vector> integrate_rk4(const Matrix& a, const Vector& xi0, double t_end, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw InputError(fmt::format("step must be positive, got {}", h));
  if (!(t_end >= h) || !std::isfinite(t_end)) {
    throw InputError(fmt::format("t_end = {} must be at least the step {}", t_end, h));
  }
  if (xi0.size() != a.rows()) {
    throw InputError(fmt::format("initial state has dimension {}, system has {}", xi0.size(), a.rows()));
  }
  const auto steps = static_cast<std::size_t>(std::floor(t_end / h + 1e-9));
  std::vector<Vector> states;
  states.reserve(steps + 1);
  states.push_back(xi0);
  Vector xi = xi0;
  for (std::size_t k = 0; k < steps; ++k) {
    const Vector k1 = a * xi;
    const Vector k2 = a * (xi + 0.5 * h * k1);
    const Vector k3 = a * (xi + 0.5 * h * k2);
    const Vector k4 = a * (xi + h * k3);
    xi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    states.push_back(xi);
  }
  return states;
}

RawTrajectory simulate(const LtiSystem& system, const Vector& xi0, double t_end, double h) {
  const auto states = integrate_rk4(system.a(), xi0, t_end, h);
  const auto m = static_cast<Eigen::Index>(system.state_dim() / 2);
  RawTrajectory raw;
  raw.t.reserve(states.size());
  raw.r.reserve(states.size());
  raw.x.reserve(states.size());
  for (std::size_t k = 0; k < states.size(); ++k) {
    raw.t.push_back(static_cast<double>(k) * h);
    raw.r.push_back(Vector::Zero(m));
    raw.x.push_back(-states[k].head(m));
  }
  return raw;
}

RawTrajectory add_noise(const RawTrajectory& raw, const NoiseSpec& spec) {
  if (!(spec.sigma >= 0.0) || !std::isfinite(spec.sigma)) {
    throw InputError(fmt::format("noise sigma must be finite and non-negative, got {}", spec.sigma));
  }
  RawTrajectory out = raw;
  if (spec.sigma == 0.0) return out;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.sigma);
  for (Vector& x : out.x) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += noise(rng);
  }
  return out;
}

QuadraticForm solve_lyapunov_2x2(const Matrix& a) {
  if (a.rows() != 2 || a.cols() != 2) throw InputError("Lyapunov oracle needs a 2x2 matrix");
  if (LtiSystem(a).label() != LtiSystem::Label::Hurwitz) {
    throw InputError("Lyapunov oracle needs a Hurwitz matrix");
  }
  // Unknowns (p, q, r) of Q = [[p, q], [q, r]]; rows are the (0,0), (0,1)
  // and (1,1) entries of A'Q + QA = -I.
  Eigen::Matrix3d lhs;
  lhs << 2.0 * a(0, 0), 2.0 * a(1, 0), 0.0,
         a(0, 1), a(0, 0) + a(1, 1), a(1, 0),
         0.0, 2.0 * a(0, 1), 2.0 * a(1, 1);
  const Eigen::Vector3d rhs(-1.0, 0.0, -1.0);
  const Eigen::Vector3d pqr = lhs.fullPivLu().solve(rhs);
  Matrix q(2, 2);
  q << pqr[0], pqr[1], pqr[1], pqr[2];
  return QuadraticForm(std::move(q));
}

}  // namespace lyacert

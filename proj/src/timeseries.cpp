#include "lyacert/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "lyacert/error.hpp"

namespace lyacert {

namespace {

bool all_finite(const Vector& v) { return v.allFinite(); }

void require_dt(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw InputError(fmt::format("time step must be positive and finite, got {}", dt));
  }
}

}  // namespace

void RawTrajectory::validate() const {
  if (r.size() != t.size() || x.size() != t.size()) {
    throw InputError("trajectory columns have different lengths");
  }
  if (t.size() < 3) {
    throw InputError(fmt::format("trajectory needs at least 3 samples, got {}", t.size()));
  }
  const auto m = r.front().size();
  if (m < 1) throw InputError("trajectory dimension must be at least 1");
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (!std::isfinite(t[k])) throw InputError(fmt::format("sample {}: non-finite time", k));
    if (k > 0 && !(t[k] > t[k - 1])) {
      throw InputError(fmt::format("sample {}: time {} is not after {}", k, t[k], t[k - 1]));
    }
    if (r[k].size() != m || x[k].size() != m) {
      throw InputError(fmt::format("sample {}: dimension differs from {}", k, m));
    }
    if (!all_finite(r[k]) || !all_finite(x[k])) {
      throw InputError(fmt::format("sample {}: non-finite value", k));
    }
  }
}

UniformTrajectory UniformTrajectory::from_samples(std::vector<Vector> xi, std::vector<Vector> xidot,
                                                  double dt) {
  if (xi.size() != xidot.size()) throw InputError("xi and xidot lengths differ");
  if (xi.empty()) throw InputError("trajectory has no samples");
  const auto n = xi.front().size();
  if (n == 0 || n % 2 != 0) throw InputError("error state dimension must be even and positive");
  for (std::size_t k = 0; k < xi.size(); ++k) {
    if (xi[k].size() != n || xidot[k].size() != n) {
      throw InputError(fmt::format("sample {}: state dimension differs from {}", k, n));
    }
  }
  UniformTrajectory out;
  out.dt = dt;
  out.m = static_cast<std::size_t>(n) / 2;
  out.xi = std::move(xi);
  out.xidot = std::move(xidot);
  return out;
}

UniformTrajectory UniformTrajectory::slice(std::size_t first, std::size_t count) const {
  if (first + count > samples()) throw InputError("slice exceeds trajectory");
  UniformTrajectory out;
  out.dt = dt;
  out.m = m;
  out.t = t;
  out.e = e;
  out.xi.assign(xi.begin() + first, xi.begin() + first + count);
  out.xidot.assign(xidot.begin() + first, xidot.begin() + first + count);
  return out;
}

Vector tracking_error(const Vector& r, const Vector& x) {
  if (r.size() != x.size()) {
    throw InputError(fmt::format("reference has dimension {}, state has {}", r.size(), x.size()));
  }
  if (!all_finite(r) || !all_finite(x)) throw InputError("non-finite reference or state");
  return r - x;
}

RawTrajectory resample(const RawTrajectory& raw, double dt) {
  raw.validate();
  require_dt(dt);
  const double t0 = raw.t.front();
  const double span = raw.t.back() - t0;
  if (dt > span) {
    throw InputError(fmt::format("resampling step {} exceeds the trajectory span {}", dt, span));
  }
  // The small slack keeps an endpoint that lies on the grid up to rounding.
  const auto steps = static_cast<std::size_t>(std::floor(span / dt + 1e-9));

  RawTrajectory out;
  out.t.reserve(steps + 1);
  out.r.reserve(steps + 1);
  out.x.reserve(steps + 1);

  std::size_t j = 0;
  const std::size_t last = raw.size() - 1;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double tk = t0 + static_cast<double>(k) * dt;
    while (j < last && raw.t[j + 1] <= tk) ++j;
    out.t.push_back(tk);
    if (j == last) {
      out.r.push_back(raw.r[last]);
      out.x.push_back(raw.x[last]);
      continue;
    }
    const double w = (tk - raw.t[j]) / (raw.t[j + 1] - raw.t[j]);
    out.r.push_back(raw.r[j] + w * (raw.r[j + 1] - raw.r[j]));
    out.x.push_back(raw.x[j] + w * (raw.x[j + 1] - raw.x[j]));
  }
  return out;
}

std::vector<Vector> moving_average(const std::vector<Vector>& series, std::size_t width) {
  if (width > 1 && width % 2 == 0) {
    throw InputError(fmt::format("smoothing window must be odd, got {}", width));
  }
  if (width <= 1) return series;
  const std::size_t n = series.size();
  std::vector<Vector> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t half = std::min({width / 2, k, n - 1 - k});
    Vector acc = Vector::Zero(series[k].size());
    for (std::size_t i = k - half; i <= k + half; ++i) acc += series[i];
    out.push_back(acc / static_cast<double>(2 * half + 1));
  }
  return out;
}

UniformTrajectory differentiate(const RawTrajectory& raw, double dt, std::size_t smoothing_window) {
  raw.validate();
  require_dt(dt);
  for (std::size_t k = 1; k < raw.size(); ++k) {
    const double step = raw.t[k] - raw.t[k - 1];
    if (std::abs(step - dt) > 1e-9 * dt) {
      throw InputError(fmt::format(
          "grid is not uniform: step {} between samples {} and {} differs from dt = {}", step,
          k - 1, k, dt));
    }
  }

  UniformTrajectory out;
  out.dt = dt;
  out.m = raw.dim();
  out.t = raw.t;
  out.e.reserve(raw.size());
  for (std::size_t k = 0; k < raw.size(); ++k) out.e.push_back(tracking_error(raw.r[k], raw.x[k]));

  const std::vector<Vector> e = moving_average(out.e, smoothing_window);
  const auto m = static_cast<Eigen::Index>(out.m);
  const double inv_2dt = 1.0 / (2.0 * dt);
  const double inv_dt2 = 1.0 / (dt * dt);
  out.xi.reserve(raw.size() - 2);
  out.xidot.reserve(raw.size() - 2);
  for (std::size_t k = 1; k + 1 < raw.size(); ++k) {
    const Vector e_dot = (e[k + 1] - e[k - 1]) * inv_2dt;
    const Vector e_ddot = (e[k + 1] - 2.0 * e[k] + e[k - 1]) * inv_dt2;
    Vector xi(2 * m);
    xi << e[k], e_dot;
    Vector xidot(2 * m);
    xidot << e_dot, e_ddot;
    out.xi.push_back(std::move(xi));
    out.xidot.push_back(std::move(xidot));
  }
  return out;
}

}  // namespace lyacert

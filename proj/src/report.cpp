#include "lyacert/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "lyacert/error.hpp"

namespace lyacert {

using nlohmann::json;

namespace {

constexpr std::string_view kMinus = "−";
constexpr std::string_view kDot = "·";

std::string coefficient(double v) { return fmt::format("{:.4f}", std::abs(v)); }

std::string escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

bool is_finite(double v) { return std::isfinite(v); }

}  // namespace

std::string format_candidate(const QuadraticCertificate& cert) {
  const Matrix& q = cert.q.matrix();
  if (q.rows() == 2) {
    const double cross = 2.0 * q(0, 1);
    const std::string b = coefficient(cross);
    const bool negative = cross < 0.0 && b != "0.0000";
    return fmt::format("V = {}{}e^2 {} {}{}e{}e_dot + {}{}e_dot^2", coefficient(q(0, 0)), kDot,
                       negative ? kMinus : "+", b, kDot, kDot, coefficient(q(1, 1)), kDot);
  }
  std::string out = "V = xi' Q xi with Q =";
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    out += "\n ";
    for (Eigen::Index j = 0; j < q.cols(); ++j) out += fmt::format(" {:>10.4f}", q(i, j));
  }
  return out;
}

void GridSpec::validate() const {
  if (!is_finite(e_min) || !is_finite(e_max) || !is_finite(edot_min) || !is_finite(edot_max)) {
    throw InputError("surface grid ranges must be finite");
  }
  if (!(e_min < e_max) || !(edot_min < edot_max)) throw InputError("surface grid ranges must be non-empty");
  if (resolution < 2) throw InputError("surface grid resolution must be at least 2");
}

namespace {

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return out;
}

}  // namespace

SurfaceGrid surface_grid(const QuadraticCertificate& cert, const GridSpec& spec) {
  spec.validate();
  const std::size_t n = cert.q.dim();
  if (n < 2 || n % 2 != 0) throw InputError("surface grid needs an even-dimensional Q");
  const std::size_t m = n / 2;
  SurfaceGrid grid;
  grid.e = linspace(spec.e_min, spec.e_max, spec.resolution);
  grid.edot = linspace(spec.edot_min, spec.edot_max, spec.resolution);
  const auto res = static_cast<Eigen::Index>(spec.resolution);
  grid.value.resize(res, res);
  Vector xi = Vector::Zero(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < res; ++i) {
    for (Eigen::Index j = 0; j < res; ++j) {
      xi[0] = grid.e[static_cast<std::size_t>(i)];
      xi[static_cast<Eigen::Index>(m)] = grid.edot[static_cast<std::size_t>(j)];
      grid.value(i, j) = lyapunov_value(cert.q, xi);
    }
  }
  return grid;
}

TrajectorySummary TrajectorySummary::of(const UniformTrajectory& traj, std::size_t training_samples) {
  TrajectorySummary s;
  s.dt = traj.dt;
  s.m = traj.m;
  s.samples = traj.samples();
  s.training_samples = training_samples;
  if (!traj.t.empty()) {
    s.t_first = traj.t.front();
    s.t_last = traj.t.back();
  }
  const auto m = static_cast<Eigen::Index>(traj.m);
  for (std::size_t k = 0; k < traj.samples(); ++k) {
    s.t.push_back(traj.t.empty() ? static_cast<double>(k) : traj.sample_time(k));
    s.e.push_back(traj.xi[k][0]);
    s.edot.push_back(traj.xi[k][m]);
  }
  return s;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

std::string hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot open '{}'", path.string()));
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return fnv1a_hex(bytes);
}

GridSpec default_grid(const TrajectorySummary& summary) {
  auto extent = [](const std::vector<double>& v) {
    double a = 0.0;
    for (double x : v) {
      if (is_finite(x)) a = std::max(a, std::abs(x));
    }
    return a > 0.0 ? 1.2 * a : 1.0;
  };
  const double e = extent(summary.e);
  const double ed = extent(summary.edot);
  return {-e, e, -ed, ed, 25};
}

ReportBundle make_bundle(const PipelineResult& result, const CertifyConfig& config,
                         Provenance provenance) {
  ReportBundle bundle{
      CertificateRecord{config, result.trajectory.m, result.verdict},
      TrajectorySummary::of(result.trajectory, result.training_samples),
      GridSpec{},
      std::move(provenance),
  };
  bundle.grid = default_grid(bundle.trajectory);
  return bundle;
}

namespace {

const QuadraticCertificate* candidate_of(const Verdict& verdict) {
  if (const auto* c = std::get_if<Certified>(&verdict)) return &c->certificate;
  if (const auto* n = std::get_if<NotFound>(&verdict)) return n->candidate ? &*n->candidate : nullptr;
  return nullptr;
}

// Plot area inside an SVG of fixed size.
struct Frame {
  double width = 640.0;
  double height = 260.0;
  double left = 64.0;
  double right = 16.0;
  double top = 16.0;
  double bottom = 36.0;

  double inner_w() const { return width - left - right; }
  double inner_h() const { return height - top - bottom; }
};

struct Range {
  double lo;
  double hi;
};

Range finite_range(const std::vector<double>& v) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double x : v) {
    if (!is_finite(x)) continue;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (!(lo <= hi)) return {0.0, 1.0};
  if (lo == hi) {
    const double pad = lo == 0.0 ? 1.0 : 0.5 * std::abs(lo);
    return {lo - pad, hi + pad};
  }
  return {lo, hi};
}

// Multiples of 1, 2 or 5 times a power of ten inside [lo, hi], about `target` of them.
std::vector<double> nice_ticks(double lo, double hi, int target) {
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double f : {1.0, 2.0, 5.0, 10.0}) {
    step = f * mag;
    if (step >= raw) break;
  }
  std::vector<double> ticks;
  const auto first = static_cast<long long>(std::ceil(lo / step - 1e-9));
  const auto last = static_cast<long long>(std::floor(hi / step + 1e-9));
  for (long long k = first; k <= last; ++k) ticks.push_back(static_cast<double>(k) * step);
  return ticks;
}

struct Series {
  const std::vector<double>* y;
  std::string_view color;
  std::string_view label;
};

std::string line_chart(const std::vector<double>& x, const std::vector<Series>& series,
                       std::string_view x_label, bool log_y) {
  const Frame f;
  std::vector<double> ys;
  for (const Series& s : series) {
    for (double v : *s.y) ys.push_back(log_y ? std::log10(v) : v);
  }
  const Range xr = finite_range(x);
  Range yr = finite_range(ys);
  if (log_y) yr = {std::floor(yr.lo), std::ceil(yr.hi)};
  if (yr.lo == yr.hi) yr.hi = yr.lo + 1.0;
  auto px = [&](double v) { return f.left + (v - xr.lo) / (xr.hi - xr.lo) * f.inner_w(); };
  auto py = [&](double v) { return f.top + (yr.hi - v) / (yr.hi - yr.lo) * f.inner_h(); };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {0} {1}\" width=\"{0}\" "
      "height=\"{1}\" font-size=\"11\">\n",
      f.width, f.height);
  svg += fmt::format(
      "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"none\" "
      "stroke=\"#999\"/>\n",
      f.left, f.top, f.inner_w(), f.inner_h());

  // Y ticks: decades on a log axis, five even steps otherwise.
  std::vector<double> ticks;
  if (log_y) {
    const int decades = static_cast<int>(yr.hi - yr.lo);
    const int stride = std::max(1, (decades + 5) / 6);
    for (int d = static_cast<int>(yr.lo); d <= static_cast<int>(yr.hi); d += stride) ticks.push_back(d);
  } else {
    ticks = nice_ticks(yr.lo, yr.hi, 4);
  }
  for (double t : ticks) {
    const std::string label = log_y ? fmt::format("1e{}", static_cast<int>(t)) : fmt::format("{:.3g}", t);
    svg += fmt::format(
        "<line x1=\"{0:.1f}\" x2=\"{1:.1f}\" y1=\"{2:.1f}\" y2=\"{2:.1f}\" stroke=\"#e4e4e4\"/>"
        "<text x=\"{3:.1f}\" y=\"{4:.1f}\" text-anchor=\"end\">{5}</text>\n",
        f.left, f.left + f.inner_w(), py(t), f.left - 4.0, py(t) + 4.0, label);
  }
  for (double t : nice_ticks(xr.lo, xr.hi, 5)) {
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:.4g}</text>\n", px(t),
                       f.top + f.inner_h() + 14.0, t);
  }
  svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n",
                     f.left + f.inner_w() / 2.0, f.height - 4.0, escape(x_label));

  double legend_y = f.top + 14.0;
  for (const Series& s : series) {
    std::string points;
    for (std::size_t k = 0; k < x.size() && k < s.y->size(); ++k) {
      const double v = log_y ? std::log10((*s.y)[k]) : (*s.y)[k];
      if (!is_finite(v) || !is_finite(x[k])) continue;
      points += fmt::format("{:.2f},{:.2f} ", px(x[k]), py(v));
    }
    if (!points.empty()) points.pop_back();
    svg += fmt::format(
        "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.3\" points=\"{}\"/>\n", s.color, points);
    svg += fmt::format(
        "<line x1=\"{0:.1f}\" x2=\"{1:.1f}\" y1=\"{2:.1f}\" y2=\"{2:.1f}\" stroke=\"{3}\" "
        "stroke-width=\"2\"/><text x=\"{4:.1f}\" y=\"{5:.1f}\">{6}</text>\n",
        f.left + f.inner_w() - 110.0, f.left + f.inner_w() - 90.0, legend_y, s.color,
        f.left + f.inner_w() - 84.0, legend_y + 4.0, escape(s.label));
    legend_y += 16.0;
  }
  svg += "</svg>\n";
  return svg;
}

std::string surface_svg(const SurfaceGrid& grid) {
  const double width = 640.0;
  const double height = 400.0;
  const double margin = 16.0;
  const double caption = 36.0;
  const auto res = grid.value.rows();
  const double vmax = std::max(grid.value.maxCoeff(), 1e-300);
  const double cos30 = std::sqrt(3.0) / 2.0;

  // Isometric view of the unit square (e, e_dot) with V / max V as height,
  // then fitted into the drawing area.
  Matrix px(res, res);
  Matrix py(res, res);
  for (Eigen::Index i = 0; i < res; ++i) {
    for (Eigen::Index j = 0; j < res; ++j) {
      const double a = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(res - 1);
      const double b = -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(res - 1);
      px(i, j) = (a - b) * cos30;
      py(i, j) = (a + b) * 0.5 - 1.2 * grid.value(i, j) / vmax;
    }
  }
  const double fit = std::min((width - 2 * margin) / (px.maxCoeff() - px.minCoeff()),
                              (height - 2 * margin - caption) / (py.maxCoeff() - py.minCoeff()));
  const double ox = width / 2.0 - fit * (px.maxCoeff() + px.minCoeff()) / 2.0;
  const double oy = margin - fit * py.minCoeff();
  auto at = [&](Eigen::Index i, Eigen::Index j) {
    return fmt::format("{:.2f},{:.2f}", ox + fit * px(i, j), oy + fit * py(i, j));
  };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {0} {1}\" width=\"{0}\" "
      "height=\"{1}\" font-size=\"11\">\n",
      width, height);

  // Painter's order: cells further from the viewer (smaller i + j) first.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> cells;
  for (Eigen::Index i = 0; i + 1 < res; ++i) {
    for (Eigen::Index j = 0; j + 1 < res; ++j) cells.emplace_back(i, j);
  }
  std::stable_sort(cells.begin(), cells.end(),
                   [](const auto& l, const auto& r) { return l.first + l.second < r.first + r.second; });
  for (const auto& [i, j] : cells) {
    const double w = (grid.value(i, j) + grid.value(i + 1, j) + grid.value(i, j + 1) +
                      grid.value(i + 1, j + 1)) / (4.0 * vmax);
    const int red = static_cast<int>(std::lround(40 + 200 * w));
    const int green = static_cast<int>(std::lround(90 + 80 * (1.0 - w)));
    const int blue = static_cast<int>(std::lround(220 - 170 * w));
    svg += fmt::format(
        "<polygon points=\"{} {} {} {}\" fill=\"rgb({},{},{})\" stroke=\"#333\" "
        "stroke-width=\"0.3\"/>\n",
        at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1), red, green, blue);
  }
  svg += fmt::format(
      "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">e in [{:.3g}, {:.3g}] runs to the "
      "lower right, e_dot in [{:.3g}, {:.3g}] to the lower left; max V on the grid = {:.4g}</text>\n",
      width / 2.0, height - 12.0, grid.e.front(), grid.e.back(), grid.edot.front(), grid.edot.back(), vmax);
  svg += "</svg>\n";
  return svg;
}

std::string matrix_table(const Matrix& q) {
  std::string out = "<table class=\"matrix\">\n";
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    out += "<tr>";
    for (Eigen::Index j = 0; j < q.cols(); ++j) out += fmt::format("<td>{:.4f}</td>", q(i, j));
    out += "</tr>\n";
  }
  out += "</table>\n";
  return out;
}

constexpr std::string_view kStyle = R"(body { font-family: sans-serif; max-width: 720px; margin: 24px auto; color: #222; }
header { padding: 12px 16px; border-radius: 4px; }
header.certified { background: #e3f4e1; border: 1px solid #6bb266; }
header.not_found { background: #fdf2d9; border: 1px solid #d8a935; }
header.diverged { background: #fbe3e1; border: 1px solid #c9554c; }
h1 { margin: 0 0 6px; font-size: 22px; }
h2 { font-size: 16px; border-bottom: 1px solid #ddd; padding-bottom: 2px; }
.formula { font-family: monospace; font-size: 16px; }
.caveat { font-style: italic; }
table { border-collapse: collapse; }
td, th { padding: 2px 10px; text-align: left; }
table.matrix td { font-family: monospace; text-align: right; }
pre { background: #f6f6f6; padding: 8px; overflow-x: auto; }
@media print { body { margin: 0; max-width: none; } section { page-break-inside: avoid; } }
)";

std::string number_text(double v, std::string_view spec) {
  if (!is_finite(v)) return std::isnan(v) ? "n/a" : (v > 0 ? "inf" : "-inf");
  return fmt::format(fmt::runtime(spec), v);
}

}  // namespace

std::string render_report(const ReportBundle& bundle) {
  const CertificateRecord& record = bundle.record;
  const Verdict& verdict = record.verdict;
  const TrainOutcome& outcome = outcome_of(verdict);
  const QuadraticCertificate* cert = candidate_of(verdict);
  const std::string kind = verdict_name(verdict);
  const bool certified = std::holds_alternative<Certified>(verdict);
  const CertifyConfig& config = record.config;

  std::string html;
  html += "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n";
  html += fmt::format("<title>Stability report: {}</title>\n", escape(bundle.provenance.input));
  html += fmt::format("<style>\n{}</style>\n</head>\n<body>\n", kStyle);

  const std::string_view headline = certified ? "Stability certificate found"
                                    : kind == "not_found" ? "No stability certificate found"
                                                          : "Training diverged";
  html += fmt::format("<header class=\"{}\">\n<h1>{}</h1>\n<p>{}</p>\n</header>\n", kind, headline,
                      escape(verdict_reason(verdict)));

  html += "<section>\n<h2>Lyapunov candidate</h2>\n";
  if (cert) {
    if (cert->q.dim() == 2) {
      html += fmt::format("<p class=\"formula\">{}</p>\n", escape(format_candidate(*cert)));
    } else {
      html += "<p class=\"formula\">V = &xi;&#x1D40; Q &xi; with</p>\n" + matrix_table(cert->q.matrix());
    }
    if (!certified) html += "<p>This candidate was rejected; it is shown for diagnosis only.</p>\n";
    if (config.train.mode == Mode::Mlp) {
      html += "<p>Q is the mean of the network output Q(&xi;) over the training samples.</p>\n";
    }
  } else {
    html += "<p>No candidate could be formed from the final parameters.</p>\n";
  }
  html += "</section>\n";

  html += "<section>\n<h2>Noise bound and training</h2>\n<table>\n";
  if (cert) {
    html += fmt::format("<tr><th>epsilon (&epsilon;)</th><td>epsilon = {}</td></tr>\n",
                        number_text(cert->epsilon, "{:.4f}"));
  }
  html += fmt::format("<tr><th>gamma (&gamma;)</th><td>{}</td></tr>\n", number_text(config.train.gamma, "{:g}"));
  html += fmt::format("<tr><th>termination</th><td>{}</td></tr>\n", to_string(outcome.termination));
  html += fmt::format("<tr><th>epochs run</th><td>{}</td></tr>\n", outcome.loss_history.size());
  html += fmt::format("<tr><th>final loss</th><td>{}</td></tr>\n", number_text(outcome.final_loss(), "{:.6g}"));
  html += "</table>\n";
  if (cert) {
    html += fmt::format(
        "<p>dV/dt &le; &epsilon; holds on every {} sample; &epsilon; = 0 means every sample "
        "decreases V by at least &gamma;.</p>\n",
        record.config.holdout_fraction > 0.0 ? "held-out" : "training");
  }
  if (!certified) {
    html += "<p class=\"caveat\">The absence of a certificate does not, in itself, imply that the "
            "system is unstable.</p>\n";
  }
  html += "</section>\n";

  html += "<section>\n<h2>Lyapunov surface</h2>\n";
  if (cert) {
    html += surface_svg(surface_grid(*cert, bundle.grid));
    if (cert->q.dim() > 2) html += "<p>Slice through the first error component and its rate.</p>\n";
  } else {
    html += "<p>No surface to plot.</p>\n";
  }
  html += "</section>\n";

  const TrajectorySummary& traj = bundle.trajectory;
  html += "<section>\n<h2>Tracking error</h2>\n";
  html += line_chart(traj.t, {{&traj.e, "#1f5fa8", "e"}, {&traj.edot, "#d2691e", "e_dot"}}, "t [s]", false);
  html += fmt::format(
      "<p>{} samples at dt = {:g} s over t = [{:g}, {:g}], m = {}; {} used for training.</p>\n",
      traj.samples, traj.dt, traj.t_first, traj.t_last, traj.m, traj.training_samples);
  html += "</section>\n";

  html += "<section>\n<h2>Training loss</h2>\n";
  std::vector<double> epochs(outcome.loss_history.size());
  std::iota(epochs.begin(), epochs.end(), 0.0);
  // Exact zeros have no logarithm; they sit on a floor below the smallest positive loss.
  double floor = 1e-12;
  for (double v : outcome.loss_history) {
    if (v > 0.0 && is_finite(v)) floor = std::min(floor, v);
  }
  std::vector<double> shown = outcome.loss_history;
  for (double& v : shown) v = std::max(v, floor);
  html += line_chart(epochs, {{&shown, "#333", "loss"}}, "epoch", true);
  html += "</section>\n";

  html += "<section>\n<h2>Provenance</h2>\n<table>\n";
  html += fmt::format("<tr><th>input</th><td>{}</td></tr>\n", escape(bundle.provenance.input));
  html += fmt::format("<tr><th>input hash (FNV-1a 64)</th><td>{}</td></tr>\n",
                      escape(bundle.provenance.input_hash));
  html += fmt::format("<tr><th>tool version</th><td>lyacert {}</td></tr>\n", escape(bundle.provenance.version));
  html += fmt::format("<tr><th>seed</th><td>{}</td></tr>\n", config.train.seed);
  html += "</table>\n";
  html += fmt::format("<pre>{}</pre>\n", escape(config_to_json(config).dump(2)));
  html += "</section>\n</body>\n</html>\n";
  return html;
}

json bundle_to_json(const ReportBundle& bundle) {
  json doc = to_json(bundle.record);
  const TrajectorySummary& t = bundle.trajectory;
  doc["trajectory"] = {
      {"t_first", t.t_first}, {"t_last", t.t_last}, {"dt", t.dt},
      {"m", t.m},             {"samples", t.samples}, {"training_samples", t.training_samples},
  };
  doc["surface"] = {
      {"e_range", {bundle.grid.e_min, bundle.grid.e_max}},
      {"edot_range", {bundle.grid.edot_min, bundle.grid.edot_max}},
      {"resolution", bundle.grid.resolution},
  };
  doc["provenance"] = {
      {"input", bundle.provenance.input},
      {"input_hash", bundle.provenance.input_hash},
      {"version", bundle.provenance.version},
  };
  return doc;
}

void write_report(const ReportBundle& bundle, const std::filesystem::path& path, std::string_view format) {
  std::string text;
  if (format == "html") {
    text = render_report(bundle);
  } else if (format == "json") {
    text = bundle_to_json(bundle).dump(2) + "\n";
  } else {
    throw InputError(fmt::format("unknown report format '{}'", format));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw std::runtime_error(fmt::format("failed writing '{}'", path.string()));
}

}  // namespace lyacert

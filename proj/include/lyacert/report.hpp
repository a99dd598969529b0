#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lyacert/certifier.hpp"
#include "lyacert/record.hpp"

namespace lyacert {

inline constexpr std::string_view tool_version = "0.1.0";

/// "V = a·e^2 ± b·e·e_dot + c·e_dot^2" with four decimals when m = 1
/// (b = |2 Q01|, U+2212 for a negative sign). Larger Q fall back to a
/// plain-text matrix, one row per line.
std::string format_candidate(const QuadraticCertificate& cert);

struct GridSpec {
  double e_min = -1.0;
  double e_max = 1.0;
  double edot_min = -1.0;
  double edot_max = 1.0;
  std::size_t resolution = 25;

  /// Throws InputError on non-finite or empty ranges or resolution < 2.
  void validate() const;
};

/// V on the (e_0, e_dot_0) plane with all other components zero.
/// value(i, j) belongs to (e[i], edot[j]).
struct SurfaceGrid {
  std::vector<double> e;
  std::vector<double> edot;
  Matrix value;
};

SurfaceGrid surface_grid(const QuadraticCertificate& cert, const GridSpec& spec);

struct TrajectorySummary {
  double t_first = 0.0;
  double t_last = 0.0;
  double dt = 0.0;
  std::size_t m = 0;
  std::size_t samples = 0;
  std::size_t training_samples = 0;
  // First error component and its rate at every sample time.
  std::vector<double> t;
  std::vector<double> e;
  std::vector<double> edot;

  static TrajectorySummary of(const UniformTrajectory& traj, std::size_t training_samples);
};

struct Provenance {
  std::string input;
  std::string input_hash;  // FNV-1a 64, 16 hex digits
  std::string version{tool_version};
};

struct ReportBundle {
  CertificateRecord record;
  TrajectorySummary trajectory;
  GridSpec grid;
  Provenance provenance;
};

/// FNV-1a 64 of the bytes, as 16 lower-case hex digits.
std::string fnv1a_hex(std::string_view bytes);
std::string hash_file(const std::filesystem::path& path);

/// A square grid covering 1.2 times the largest |e| and |e_dot| seen.
GridSpec default_grid(const TrajectorySummary& summary);

ReportBundle make_bundle(const PipelineResult& result, const CertifyConfig& config,
                         Provenance provenance);

/// Self-contained HTML page with inline SVG. A pure function of the bundle.
std::string render_report(const ReportBundle& bundle);
/// The certificate record plus "trajectory", "surface" and "provenance" keys.
nlohmann::json bundle_to_json(const ReportBundle& bundle);

/// Writes render_report (html) or bundle_to_json (json). Throws InputError
/// on an unknown format and std::runtime_error when the file cannot be written.
void write_report(const ReportBundle& bundle, const std::filesystem::path& path,
                  std::string_view format = "html");

}  // namespace lyacert

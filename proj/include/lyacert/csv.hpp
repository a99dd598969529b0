#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "lyacert/timeseries.hpp"

namespace lyacert {

// Trajectory CSV: header `t,r_0,...,r_{m-1},x_0,...,x_{m-1}` (or `t,r,x` when
// m = 1), comma separated, '.' decimal point. Blank lines and lines whose
// first non-blank character is '#' are skipped. Errors name the 1-based line.

RawTrajectory parse_csv(std::istream& in, const std::string& source = "<stream>");
RawTrajectory read_csv(const std::filesystem::path& path);

/// Writes with the scalar `t,r,x` header when m = 1. Values use the shortest
/// representation that parses back to the same double.
void write_csv(std::ostream& out, const RawTrajectory& raw);
void write_csv(const std::filesystem::path& path, const RawTrajectory& raw);

}  // namespace lyacert

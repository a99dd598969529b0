#include "lyacert/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "lyacert/error.hpp"

namespace lyacert {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

// Returns m, or 0 if the header is not a trajectory header.
std::size_t header_dim(const std::vector<std::string_view>& fields) {
  if (fields.size() == 3 && fields[0] == "t" && fields[1] == "r" && fields[2] == "x") return 1;
  if (fields.size() < 3 || (fields.size() - 1) % 2 != 0 || fields[0] != "t") return 0;
  const std::size_t m = (fields.size() - 1) / 2;
  for (std::size_t i = 0; i < m; ++i) {
    if (fields[1 + i] != fmt::format("r_{}", i)) return 0;
    if (fields[1 + m + i] != fmt::format("x_{}", i)) return 0;
  }
  return m;
}

}  // namespace

RawTrajectory parse_csv(std::istream& in, const std::string& source) {
  RawTrajectory raw;
  std::size_t m = 0;
  std::size_t line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view content = trim(line);
    if (content.empty() || content.front() == '#') continue;
    const auto fields = split(content);

    if (m == 0) {
      m = header_dim(fields);
      if (m == 0) {
        throw InputError(fmt::format("{}:{}: expected header 't,r_0,...,x_0,...' or 't,r,x', got '{}'",
                                     source, line_no, content));
      }
      continue;
    }

    if (fields.size() != 2 * m + 1) {
      throw InputError(fmt::format("{}:{}: expected {} fields, got {}", source, line_no, 2 * m + 1,
                                   fields.size()));
    }
    std::vector<double> values(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const auto f = fields[i];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), values[i]);
      if (ec != std::errc() || ptr != f.data() + f.size() || f.empty()) {
        throw InputError(fmt::format("{}:{}: field {} is not a number: '{}'", source, line_no, i + 1, f));
      }
      if (!std::isfinite(values[i])) {
        throw InputError(fmt::format("{}:{}: field {} is not finite", source, line_no, i + 1));
      }
    }
    if (!raw.t.empty() && !(values[0] > raw.t.back())) {
      throw InputError(fmt::format("{}:{}: time {} does not increase", source, line_no, values[0]));
    }
    raw.t.push_back(values[0]);
    raw.r.push_back(Eigen::Map<const Vector>(values.data() + 1, static_cast<Eigen::Index>(m)));
    raw.x.push_back(Eigen::Map<const Vector>(values.data() + 1 + m, static_cast<Eigen::Index>(m)));
  }
  if (m == 0) throw InputError(fmt::format("{}: no header line found", source));
  if (raw.size() < 3) {
    throw InputError(fmt::format("{}: need at least 3 data rows, got {}", source, raw.size()));
  }
  return raw;
}

RawTrajectory read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open '{}'", path.string()));
  return parse_csv(in, path.string());
}

void write_csv(std::ostream& out, const RawTrajectory& raw) {
  raw.validate();
  const std::size_t m = raw.dim();
  if (m == 1) {
    out << "t,r,x\n";
  } else {
    out << 't';
    for (std::size_t i = 0; i < m; ++i) out << fmt::format(",r_{}", i);
    for (std::size_t i = 0; i < m; ++i) out << fmt::format(",x_{}", i);
    out << '\n';
  }
  for (std::size_t k = 0; k < raw.size(); ++k) {
    std::string row = fmt::format("{}", raw.t[k]);
    for (Eigen::Index i = 0; i < raw.r[k].size(); ++i) row += fmt::format(",{}", raw.r[k][i]);
    for (Eigen::Index i = 0; i < raw.x[k].size(); ++i) row += fmt::format(",{}", raw.x[k][i]);
    out << row << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const RawTrajectory& raw) {
  std::ofstream out(path);
  if (!out) throw InputError(fmt::format("cannot write '{}'", path.string()));
  write_csv(out, raw);
  if (!out) throw InputError(fmt::format("write to '{}' failed", path.string()));
}

}  // namespace lyacert

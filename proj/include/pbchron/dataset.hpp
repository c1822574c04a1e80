#pragma once
// Core dataset types and CSV I/O. The on-disk format is one header line
//   label,depth,density,pb210,sd_pb210,thickness,ra226,sd_ra226
// preceded by optional '#' comment lines; a comment of the form
// "# core_id=<id> sampling_year=<yr>" carries core metadata.

#include <algorithm>
#include <cerrno>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbchron/units.hpp"

namespace pbchron {

// Malformed file contents (bad header, unparseable field).
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Structurally parseable but violates a domain invariant.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Missing or unreadable input file: a usage problem, not a runtime failure.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One slab. `depth` is the slab bottom; the slab spans [depth-thickness, depth).
struct Measurement {
  std::string label;
  double depth = 0.0;      // cm, bottom of slab
  double density = 0.0;    // g/cm^3 dry bulk
  double pb210 = 0.0;      // Bq/kg total activity; may go negative under noise
  double pb210_sd = 0.0;   // Bq/kg
  double thickness = 0.0;  // cm
  double ra226 = 0.0;      // Bq/kg
  double ra226_sd = 0.0;   // Bq/kg

  double top() const { return depth - thickness; }
  double midpoint() const { return depth - 0.5 * thickness; }
};

struct Dataset {
  std::vector<Measurement> measurements;  // kept sorted by depth
  std::string core_id = "core";
  double sampling_year = 0.0;  // age-zero reference; simulated cores leave it 0
};

inline const char* kDatasetHeader = "label,depth,density,pb210,sd_pb210,thickness,ra226,sd_ra226";

// Files must carry strictly positive sds; engines may run on in-memory
// datasets with degenerate (zero) sds, e.g. Monte Carlo consistency checks.
inline void validate_dataset(const Dataset& d, bool require_positive_sd = true) {
  if (d.measurements.empty()) throw ValidationError("dataset is empty");
  std::string problems;
  for (std::size_t i = 0; i < d.measurements.size(); ++i) {
    const Measurement& m = d.measurements[i];
    auto complain = [&](const char* what) {
      problems += "row " + std::to_string(i + 1) + " (" + m.label + "): " + what + "; ";
    };
    if (!(m.depth > 0.0)) complain("depth must be > 0");
    if (!(m.density > 0.0)) complain("density must be > 0");
    if (!(m.thickness > 0.0)) complain("thickness must be > 0");
    if (require_positive_sd) {
      if (!(m.pb210_sd > 0.0)) complain("pb210_sd must be > 0");
      if (!(m.ra226_sd > 0.0)) complain("ra226_sd must be > 0");
    } else {
      if (!(m.pb210_sd >= 0.0)) complain("pb210_sd must be >= 0");
      if (!(m.ra226_sd >= 0.0)) complain("ra226_sd must be >= 0");
    }
    if (i > 0) {
      const Measurement& prev = d.measurements[i - 1];
      if (!(m.depth > prev.depth)) complain("depths not increasing");
      else if (m.depth - m.thickness < prev.depth - 1e-9) complain("slab overlaps previous");
    }
  }
  if (!problems.empty()) throw ValidationError("invalid dataset: " + problems);
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline double parse_number(const std::string& s, std::size_t row, std::size_t col) {
  const char* begin = s.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  if (end == begin || (end && *end != '\0') || errno == ERANGE)
    throw FormatError("parse failure at row " + std::to_string(row) + ", column " +
                      std::to_string(col) + ": '" + s + "' is not a number");
  return v;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Fixed 5-decimal rendering used for every numeric CSV field.
inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.5f", v);
  return buf;
}

}  // namespace detail

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open dataset file: " + path);
  Dataset d;
  std::string line;
  bool header_seen = false;
  std::size_t row_number = 0;
  while (std::getline(in, line)) {
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      // Metadata comment, if present.
      std::size_t pos = line.find("core_id=");
      if (pos != std::string::npos) {
        std::size_t end = line.find(' ', pos);
        d.core_id = line.substr(pos + 8, end == std::string::npos ? end : end - pos - 8);
      }
      pos = line.find("sampling_year=");
      if (pos != std::string::npos) d.sampling_year = std::atof(line.c_str() + pos + 14);
      continue;
    }
    if (!header_seen) {
      if (line != kDatasetHeader)
        throw FormatError("bad header: expected '" + std::string(kDatasetHeader) + "'");
      header_seen = true;
      continue;
    }
    ++row_number;
    const auto fields = detail::split_csv(line);
    if (fields.size() != 8)
      throw FormatError("parse failure at row " + std::to_string(row_number) + ": expected 8 fields, got " +
                        std::to_string(fields.size()));
    Measurement m;
    m.label = detail::trim(fields[0]);
    m.depth = detail::parse_number(detail::trim(fields[1]), row_number, 2);
    m.density = detail::parse_number(detail::trim(fields[2]), row_number, 3);
    m.pb210 = detail::parse_number(detail::trim(fields[3]), row_number, 4);
    m.pb210_sd = detail::parse_number(detail::trim(fields[4]), row_number, 5);
    m.thickness = detail::parse_number(detail::trim(fields[5]), row_number, 6);
    m.ra226 = detail::parse_number(detail::trim(fields[6]), row_number, 7);
    m.ra226_sd = detail::parse_number(detail::trim(fields[7]), row_number, 8);
    d.measurements.push_back(std::move(m));
  }
  if (!header_seen) throw FormatError("missing header line in " + path);
  std::stable_sort(d.measurements.begin(), d.measurements.end(),
                   [](const Measurement& a, const Measurement& b) { return a.depth < b.depth; });
  validate_dataset(d);
  return d;
}

// `extra_comments` lines are written verbatim after a leading "# ".
inline void write_dataset(const Dataset& d, const std::string& path,
                          const std::vector<std::string>& extra_comments = {}) {
  validate_dataset(d);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset file: " + path);
  for (const auto& c : extra_comments) out << "# " << c << "\n";
  out << "# core_id=" << d.core_id << " sampling_year=" << detail::fmt(d.sampling_year) << "\n";
  out << kDatasetHeader << "\n";
  for (const auto& m : d.measurements) {
    out << m.label << ',' << detail::fmt(m.depth) << ',' << detail::fmt(m.density) << ','
        << detail::fmt(m.pb210) << ',' << detail::fmt(m.pb210_sd) << ',' << detail::fmt(m.thickness)
        << ',' << detail::fmt(m.ra226) << ',' << detail::fmt(m.ra226_sd) << "\n";
  }
  if (!out) throw std::runtime_error("I/O failure writing " + path);
}

}  // namespace pbchron

#pragma once
// Age-depth results shared by all dating engines, with CSV serialization.
// Chronology CSV columns: method,depth,age,sd,lower95,upper95,truncated
// (truncated=1 marks a depth the engine could not date; its numeric fields
// are written as nan).

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbchron/dataset.hpp"

namespace pbchron {

enum class Method { ci_crs, r_crs, plum };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::ci_crs: return "CI-CRS";
    case Method::r_crs: return "R-CRS";
    case Method::plum: return "Plum";
  }
  return "?";
}

inline Method method_from_name(const std::string& s) {
  if (s == "CI-CRS") return Method::ci_crs;
  if (s == "R-CRS") return Method::r_crs;
  if (s == "Plum") return Method::plum;
  throw FormatError("unknown method name: " + s);
}

struct AgeEstimate {
  double depth = 0.0;      // cm
  double age_mean = 0.0;   // yr before coring
  double lower95 = 0.0;    // yr
  double upper95 = 0.0;    // yr
  double sd_proxy = 0.0;   // yr; quadrature/Monte-Carlo sd, or interval width / 4
  bool dated = true;       // false: engine declined this depth (e.g. truncation)
  int mc_excluded = 0;     // Monte Carlo draws that could not date this depth
};

struct Chronology {
  Method method = Method::ci_crs;
  std::vector<AgeEstimate> estimates;  // ordered by depth
  std::vector<std::string> warnings;
};

inline const char* kChronologyHeader = "method,depth,age,sd,lower95,upper95,truncated";

inline void write_chronology(const Chronology& c, const std::string& path,
                             const std::vector<std::string>& extra_comments = {}) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write chronology file: " + path);
  for (const auto& line : extra_comments) out << "# " << line << "\n";
  for (const auto& w : c.warnings) out << "# warning: " << w << "\n";
  out << kChronologyHeader << "\n";
  for (const auto& e : c.estimates) {
    out << method_name(c.method) << ',' << detail::fmt(e.depth) << ',';
    if (e.dated) {
      out << detail::fmt(e.age_mean) << ',' << detail::fmt(e.sd_proxy) << ','
          << detail::fmt(e.lower95) << ',' << detail::fmt(e.upper95) << ",0\n";
    } else {
      out << "nan,nan,nan,nan,1\n";
    }
  }
  if (!out) throw std::runtime_error("I/O failure writing " + path);
}

inline Chronology load_chronology(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open chronology file: " + path);
  Chronology c;
  std::string line;
  bool header_seen = false;
  bool method_seen = false;
  std::size_t row_number = 0;
  while (std::getline(in, line)) {
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != kChronologyHeader)
        throw FormatError("bad header: expected '" + std::string(kChronologyHeader) + "'");
      header_seen = true;
      continue;
    }
    ++row_number;
    const auto fields = detail::split_csv(line);
    if (fields.size() != 7)
      throw FormatError("parse failure at row " + std::to_string(row_number) + ": expected 7 fields");
    const Method m = method_from_name(detail::trim(fields[0]));
    if (!method_seen) {
      c.method = m;
      method_seen = true;
    } else if (m != c.method) {
      throw FormatError("mixed methods in chronology file at row " + std::to_string(row_number));
    }
    AgeEstimate e;
    e.depth = detail::parse_number(detail::trim(fields[1]), row_number, 2);
    e.dated = detail::trim(fields[6]) == "0";
    if (e.dated) {
      e.age_mean = detail::parse_number(detail::trim(fields[2]), row_number, 3);
      e.sd_proxy = detail::parse_number(detail::trim(fields[3]), row_number, 4);
      e.lower95 = detail::parse_number(detail::trim(fields[4]), row_number, 5);
      e.upper95 = detail::parse_number(detail::trim(fields[5]), row_number, 6);
    } else {
      e.age_mean = e.sd_proxy = e.lower95 = e.upper95 = std::nan("");
    }
    c.estimates.push_back(e);
  }
  if (!header_seen) throw FormatError("missing header line in " + path);
  return c;
}

}  // namespace pbchron

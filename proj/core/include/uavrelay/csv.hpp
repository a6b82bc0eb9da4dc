#pragma once

#include <charconv>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

namespace uavrelay {

/// Shortest decimal form that round-trips to the same double, so CSV
/// output is reproducible and loss-free.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void write_csv_field(std::ostream& out, const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) {
    out << field;
    return;
  }
  out << '"';
  for (char c : field) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

/// Splits one CSV line honoring double-quote escaping.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace uavrelay

#pragma once

#include <charconv>
#include <cstdio>
#include <ostream>
#include <string>
#include <system_error>

namespace dcgd {

// Shortest decimal that round-trips the exact double; keeps CSV output
// byte-stable across runs.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::ostream& csv_field(std::ostream& os, double v) { return os << format_double(v); }

}  // namespace dcgd

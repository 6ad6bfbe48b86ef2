#pragma once

#include <charconv>
#include <cstdio>
#include <string>
#include <string_view>

#include "fsurv/types.hpp"

namespace fsurv::detail {

// Shortest round-trip decimal form; keeps CSV/JSON output byte-stable.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& what) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw DataError(what + ": cannot parse number '" + std::string(s) + "'");
  return v;
}

inline long parse_long(std::string_view s, const std::string& what) {
  long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw DataError(what + ": cannot parse integer '" + std::string(s) + "'");
  return v;
}

}  // namespace fsurv::detail

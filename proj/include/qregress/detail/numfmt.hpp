#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace qregress::detail {

// Shortest decimal text that parses back to the same double.
inline std::string format_number(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace qregress::detail

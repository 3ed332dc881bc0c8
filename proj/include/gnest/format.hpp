#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace gnest {

/// Locale-independent decimal with 17 significant digits ("nan"/"inf" for
/// non-finite values), so output bytes depend only on the value.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

}  // namespace gnest

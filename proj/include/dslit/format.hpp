#pragma once

#include <charconv>
#include <string>

namespace dslit {

/// Shortest locale-independent text with 17 significant digits ("%.17g").
inline std::string format_double(double value) {
  char buffer[32];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value, std::chars_format::general, 17);
  return std::string(buffer, result.ptr);
}

} // namespace dslit

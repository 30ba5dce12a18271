#pragma once

#include <array>
#include <charconv>
#include <cstdio>
#include <string>

namespace earwatch {

/// Shortest decimal form that round-trips the exact double. std::to_chars
/// output is unique per value, so formatted files are identical across
/// platforms.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

inline std::string format_fixed(double v, int decimals) {
  std::array<char, 64> buf{};
  const int n = std::snprintf(buf.data(), buf.size(), "%.*f", decimals, v);
  return std::string(buf.data(), static_cast<std::size_t>(n));
}

}  // namespace earwatch

#include "evofuzz/segments.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace evofuzz {

std::size_t placeholder_count(std::span<const Segment> segments) {
  return static_cast<std::size_t>(std::count_if(
      segments.begin(), segments.end(), [](const Segment& s) { return s.is_placeholder(); }));
}

std::string splice(std::span<const Segment> segments, std::span<const std::string> fills) {
  std::string out;
  for (const auto& s : segments) {
    if (!s.is_placeholder()) {
      out += s.text;
      continue;
    }
    if (s.index >= fills.size()) {
      throw std::invalid_argument(
          fmt::format("no fill for placeholder {} ({} fills)", s.index, fills.size()));
    }
    out += fills[s.index];
  }
  return out;
}

}  // namespace evofuzz

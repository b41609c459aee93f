#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace evofuzz {

// One piece of an infill request: literal text, or the index of a
// placeholder to be filled by the model.
struct Segment {
  enum class Kind { kText, kPlaceholder };

  Kind kind = Kind::kText;
  std::string text;         // kText only
  std::size_t index = 0;    // kPlaceholder only

  static Segment literal(std::string text) { return {Kind::kText, std::move(text), 0}; }
  static Segment placeholder(std::size_t index) { return {Kind::kPlaceholder, {}, index}; }
  bool is_placeholder() const { return kind == Kind::kPlaceholder; }
  bool operator==(const Segment&) const = default;
};

std::size_t placeholder_count(std::span<const Segment> segments);

// Concatenates literal segments with fills[index] in place of each
// placeholder. Throws std::invalid_argument when a fill is missing.
std::string splice(std::span<const Segment> segments, std::span<const std::string> fills);

}  // namespace evofuzz

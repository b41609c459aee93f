#pragma once

#include <array>
#include <cstddef>
#include <string_view>

namespace evofuzz {

// Mutation operators. The integer codes are stable: they appear in corpus
// manifests and reports.
enum class OperatorId : int {
  kArgument = 0,
  kKeyword = 1,
  kPrefix = 2,
  kSuffix = 3,
  kPrefixArgument = 4,
  kSuffixArgument = 5,
  kMethod = 6,
};

inline constexpr std::size_t kOperatorCount = 7;

inline constexpr std::array<OperatorId, kOperatorCount> kAllOperators = {
    OperatorId::kArgument,       OperatorId::kKeyword,        OperatorId::kPrefix,
    OperatorId::kSuffix,         OperatorId::kPrefixArgument, OperatorId::kSuffixArgument,
    OperatorId::kMethod,
};

inline constexpr int to_code(OperatorId op) { return static_cast<int>(op); }

// Throws std::out_of_range for codes outside 0..6.
OperatorId operator_from_code(int code);

std::string_view to_string(OperatorId op);

// Accepts the names produced by to_string. Throws std::invalid_argument.
OperatorId operator_from_string(std::string_view name);

}  // namespace evofuzz

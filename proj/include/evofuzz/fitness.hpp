#pragma once

#include <compare>
#include <span>
#include <string>
#include <string_view>

#include "evofuzz/corpus.hpp"
#include "evofuzz/pyast.hpp"

namespace evofuzz::fitness {

// D = dataflow depth, U = distinct library callees, R = call sites whose
// (callee, normalized args) pair repeats an earlier site. Throws
// pyast::ParseError.
FitnessScore score(std::string_view source, std::span<const std::string> prefixes);

// The same census over an already-built graph.
FitnessScore score(const pyast::DataflowGraph& graph);

// Seed-bank order: `less` means `a` ranks ahead of `b` (higher total).
std::strong_ordering compare(const FitnessScore& a, const FitnessScore& b);

}  // namespace evofuzz::fitness

#include "evofuzz/fitness.hpp"

#include <set>
#include <utility>

namespace evofuzz::fitness {

FitnessScore score(const pyast::DataflowGraph& graph) {
  std::set<std::string_view> callees;
  std::set<std::pair<std::string_view, std::string_view>> seen;
  int repeats = 0;
  for (const auto& site : graph.nodes) {
    callees.insert(site.callee);
    if (!seen.emplace(site.callee, site.normalized_args).second) ++repeats;
  }
  return FitnessScore::make(graph.depth, static_cast<int>(callees.size()), repeats);
}

FitnessScore score(std::string_view source, std::span<const std::string> prefixes) {
  return score(pyast::build_dataflow(source, prefixes));
}

std::strong_ordering compare(const FitnessScore& a, const FitnessScore& b) {
  return b.total <=> a.total;
}

}  // namespace evofuzz::fitness

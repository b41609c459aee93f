#include <algorithm>

#include "evofuzz/corpus.hpp"
#include "evofuzz/genbackend.hpp"
#include "evofuzz/pyast.hpp"

namespace evofuzz::genbackend {
namespace {

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; });
}

std::string seed_program(std::string_view raw, std::string_view prompt, std::string_view kickoff) {
  if (!prompt.empty() && raw.starts_with(prompt)) {
    raw.remove_prefix(prompt.size());
  }
  std::string out;
  if (!kickoff.empty() && !raw.starts_with(kickoff)) {
    // The completion continues after the kick-off line that ends the prompt.
    out.assign(kickoff);
    if (!out.ends_with('\n')) out.push_back('\n');
  }
  out.append(raw);
  return out;
}

}  // namespace

std::string_view to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::kUnparseable:
      return "unparseable";
    case RejectReason::kEmptyAfterTrim:
      return "empty-after-trim";
    case RejectReason::kNoTargetCall:
      return "no-target-call";
  }
  return "unparseable";
}

PostprocessResult postprocess(std::string_view raw, PostprocessMode mode, const ApiTarget& target,
                              std::string_view prompt, std::string_view kickoff) {
  std::string text = mode == PostprocessMode::kSeed ? seed_program(raw, prompt, kickoff) : std::string(raw);
  if (blank(text)) return {std::nullopt, RejectReason::kEmptyAfterTrim};
  std::string trimmed = pyast::trim_to_parse(text);
  if (blank(trimmed)) return {std::nullopt, RejectReason::kUnparseable};
  std::string cleaned = pyast::eliminate_dead_code(pyast::remove_prints(trimmed), target);
  if (corpus::normalize(cleaned).empty()) return {std::nullopt, RejectReason::kEmptyAfterTrim};
  auto prefixes = library_prefixes(target);
  auto sites = pyast::find_calls(cleaned, prefixes);
  bool calls_target = std::any_of(sites.begin(), sites.end(), [&](const pyast::CallSite& s) {
    return is_target_callee(s.callee, target);
  });
  if (!calls_target) return {std::nullopt, RejectReason::kNoTargetCall};
  return {std::move(cleaned), std::nullopt};
}

}  // namespace evofuzz::genbackend

#pragma once

// Masking operators that turn a program into an infill problem.

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "evofuzz/api_target.hpp"
#include "evofuzz/corpus.hpp"
#include "evofuzz/operator_id.hpp"
#include "evofuzz/pyast.hpp"
#include "evofuzz/rng.hpp"
#include "evofuzz/segments.hpp"

namespace evofuzz::mutator {

// Serialized placeholder marker; backends map it to their own sentinel.
inline constexpr std::string_view kPlaceholder = "<SPAN>";

enum class SpanRole { kArgs, kKeywordName, kKeywordValue, kLines, kMethodName };

std::string_view to_string(SpanRole role);

// Text that stands in for a placeholder of this role in a parse check
// ("None", "x" or "pass").
std::string_view neutral_fill(SpanRole role);

struct MaskSpan {
  std::size_t offset = 0;  // position of the marker in masked_source
  SpanRole role = SpanRole::kArgs;
  std::string original;    // text the marker (with its decoration) replaced
  // Range of masked_source that was inserted for this span: the marker plus
  // any separator added around it (", " before a keyword, a line break
  // before a suffix). Restoring replaces this range by `original`.
  pyast::ByteRange decorated;
};

struct MaskedProgram {
  std::string masked_source;
  OperatorId op = OperatorId::kArgument;
  std::vector<MaskSpan> spans;  // in source order
  std::string parent_hash;
  ApiTarget target;

  std::size_t placeholder_count() const { return spans.size(); }

  // Substitutes fills[i] for the i-th marker.
  std::string fill(std::span<const std::string> fills) const;

  // Puts the masked-out text back; equals the parent source byte-for-byte.
  std::string restore() const;

  // Literal text and placeholders in order, as sent to a backend.
  std::vector<Segment> segments() const;

  // fill() with neutral_fill() for each span.
  std::string neutral_source() const;
};

class MaskError : public std::runtime_error {
 public:
  enum class Kind { kNoCallSite, kNothingBeforeTarget, kNoLibraryCall, kNoTargetCall, kIncoherent };

  MaskError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Whole argument list of `site` replaced by one marker.
MaskedProgram mask_argument(const TestProgram& p, const pyast::CallSite& site);

// ", <SPAN>=<SPAN>" appended after the last argument of `site`.
MaskedProgram mask_keyword(const TestProgram& p, const pyast::CallSite& site);

// A run of 1..k whole lines before the target statement replaced by one
// marker; k uniform over the available lines.
MaskedProgram mask_prefix(const TestProgram& p, const pyast::CallSite& target_site, Rng& rng);

// mask_prefix over the given 1-based inclusive line range.
MaskedProgram mask_prefix_lines(const TestProgram& p, const pyast::CallSite& target_site,
                                int first_line, int last_line);

// A marker line inserted right after the target statement.
MaskedProgram mask_suffix(const TestProgram& p, const pyast::CallSite& target_site);

MaskedProgram mask_prefix_argument(const TestProgram& p, const pyast::CallSite& target_site,
                                   Rng& rng);
MaskedProgram mask_suffix_argument(const TestProgram& p, const pyast::CallSite& target_site);

// The callee of a uniformly chosen library call minus its library root
// (or the method name of a method call) replaced by one marker.
MaskedProgram mask_method(const TestProgram& p, std::span<const pyast::CallSite> sites, Rng& rng);

// Finds the call sites of `p` and applies `op`, choosing sites uniformly:
// argument/keyword/method over all library calls, the region operators over
// target calls. Throws MaskError when the operator does not apply.
MaskedProgram apply_operator(OperatorId op, const TestProgram& p, Rng& rng);

}  // namespace evofuzz::mutator

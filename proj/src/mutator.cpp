#include "evofuzz/mutator.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace evofuzz::mutator {
namespace {

using pyast::CallSite;

// One marker to place over [begin, end) of the parent source, with
// separators inserted before/after it.
struct Edit {
  std::size_t begin;
  std::size_t end;
  std::string before;
  std::string after;
  SpanRole role;
};

MaskedProgram build(const TestProgram& p, OperatorId op, std::vector<Edit> edits) {
  std::stable_sort(edits.begin(), edits.end(),
                   [](const Edit& a, const Edit& b) { return a.begin < b.begin; });
  MaskedProgram m;
  m.op = op;
  m.parent_hash = p.norm_hash;
  m.target = p.target;
  std::string_view src = p.source;
  std::size_t cursor = 0;
  for (const auto& e : edits) {
    m.masked_source.append(src.substr(cursor, e.begin - cursor));
    MaskSpan span;
    span.role = e.role;
    span.original = std::string(src.substr(e.begin, e.end - e.begin));
    span.decorated.begin = m.masked_source.size();
    m.masked_source += e.before;
    span.offset = m.masked_source.size();
    m.masked_source += kPlaceholder;
    m.masked_source += e.after;
    span.decorated.end = m.masked_source.size();
    m.spans.push_back(std::move(span));
    cursor = e.end;
  }
  m.masked_source.append(src.substr(cursor));
  if (auto err = pyast::parse_check(m.neutral_source())) {
    throw MaskError(MaskError::Kind::kIncoherent,
                    fmt::format("{} mask does not sit at a coherent position: line {}: {}",
                                to_string(op), err->line, err->message));
  }
  return m;
}

void check_site(const TestProgram& p, const CallSite& site) {
  const auto& s = p.source;
  bool ok = site.call_span.end <= s.size() && site.arg_span.begin > 0 &&
            site.arg_span.end < s.size() && site.arg_span.begin <= site.arg_span.end &&
            s[site.arg_span.begin - 1] == '(' && s[site.arg_span.end] == ')' &&
            site.callee_span.end <= s.size();
  if (!ok) {
    throw MaskError(MaskError::Kind::kNoCallSite,
                    fmt::format("call site '{}' does not match the program", site.callee));
  }
}

struct Lines {
  std::vector<std::size_t> starts;  // byte offset of each line, 0-based index
  std::string_view source;

  explicit Lines(std::string_view s) : source(s) {
    starts.push_back(0);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '\n') starts.push_back(i + 1);
    }
  }
  std::size_t count() const { return starts.size(); }
  // 1-based line number to [begin, end) without the newline.
  std::size_t begin(int line) const { return starts[static_cast<std::size_t>(line - 1)]; }
  std::size_t end(int line) const {
    auto idx = static_cast<std::size_t>(line);
    return idx < starts.size() ? starts[idx] - 1 : source.size();
  }
  std::size_t indent_end(int line) const {
    std::size_t i = begin(line);
    std::size_t e = end(line);
    while (i < e && (source[i] == ' ' || source[i] == '\t' || source[i] == '\f')) ++i;
    return i;
  }
};

Edit argument_edit(const CallSite& site) {
  return {site.arg_span.begin, site.arg_span.end, "", "", SpanRole::kArgs};
}

Edit line_region_edit(const Lines& lines, int first, int last) {
  return {lines.indent_end(first), lines.end(last), "", "", SpanRole::kLines};
}

std::vector<Edit> suffix_edits(const TestProgram& p, const CallSite& site) {
  Lines lines(p.source);
  int first = site.statement_first_line;
  int last = site.statement_last_line;
  std::string indent(p.source.substr(lines.begin(first), lines.indent_end(first) - lines.begin(first)));
  std::size_t at = lines.end(last);
  return {Edit{at, at, "\n" + indent, "", SpanRole::kLines}};
}

int lines_before(const CallSite& site) { return site.statement_first_line - 1; }

MaskedProgram prefix_like(const TestProgram& p, const CallSite& site, Rng& rng, bool with_args) {
  check_site(p, site);
  int available = lines_before(site);
  if (available < 1) {
    throw MaskError(MaskError::Kind::kNothingBeforeTarget,
                    fmt::format("no line precedes the call to '{}'", site.callee));
  }
  Lines lines(p.source);
  OperatorId op = with_args ? OperatorId::kPrefixArgument : OperatorId::kPrefix;
  auto attempt = [&](int first, int last) -> std::optional<MaskedProgram> {
    std::vector<Edit> edits{line_region_edit(lines, first, last)};
    if (with_args) edits.push_back(argument_edit(site));
    try {
      return build(p, op, std::move(edits));
    } catch (const MaskError& e) {
      if (e.kind() != MaskError::Kind::kIncoherent) throw;
      return std::nullopt;
    }
  };
  constexpr int kAttempts = 16;
  for (int i = 0; i < kAttempts; ++i) {
    int k = static_cast<int>(rng.uniform_int(1, available));
    int first = static_cast<int>(rng.uniform_int(1, available - k + 1));
    if (auto m = attempt(first, first + k - 1)) return std::move(*m);
  }
  // Regions straddling block structure failed; fall back to single lines
  // nearest the target.
  for (int line = available; line >= 1; --line) {
    if (auto m = attempt(line, line)) return std::move(*m);
  }
  throw MaskError(MaskError::Kind::kIncoherent,
                  fmt::format("no maskable line precedes the call to '{}'", site.callee));
}

}  // namespace

std::string_view to_string(SpanRole role) {
  switch (role) {
    case SpanRole::kArgs:
      return "args";
    case SpanRole::kKeywordName:
      return "keyword-name";
    case SpanRole::kKeywordValue:
      return "keyword-value";
    case SpanRole::kLines:
      return "lines";
    case SpanRole::kMethodName:
      return "method-name";
  }
  return "args";
}

std::string_view neutral_fill(SpanRole role) {
  switch (role) {
    case SpanRole::kArgs:
    case SpanRole::kKeywordValue:
      return "None";
    case SpanRole::kKeywordName:
    case SpanRole::kMethodName:
      return "x";
    case SpanRole::kLines:
      return "pass";
  }
  return "None";
}

std::string MaskedProgram::fill(std::span<const std::string> fills) const {
  if (fills.size() != spans.size()) {
    throw std::invalid_argument(
        fmt::format("expected {} fills, got {}", spans.size(), fills.size()));
  }
  std::string out = masked_source;
  for (std::size_t i = spans.size(); i-- > 0;) {
    out.replace(spans[i].offset, kPlaceholder.size(), fills[i]);
  }
  return out;
}

std::string MaskedProgram::restore() const {
  std::string out = masked_source;
  for (std::size_t i = spans.size(); i-- > 0;) {
    const auto& s = spans[i];
    out.replace(s.decorated.begin, s.decorated.size(), s.original);
  }
  return out;
}

std::vector<Segment> MaskedProgram::segments() const {
  std::vector<Segment> out;
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (spans[i].offset > cursor) {
      out.push_back(Segment::literal(masked_source.substr(cursor, spans[i].offset - cursor)));
    }
    out.push_back(Segment::placeholder(i));
    cursor = spans[i].offset + kPlaceholder.size();
  }
  if (cursor < masked_source.size()) out.push_back(Segment::literal(masked_source.substr(cursor)));
  return out;
}

std::string MaskedProgram::neutral_source() const {
  std::vector<std::string> fills;
  for (const auto& s : spans) fills.emplace_back(neutral_fill(s.role));
  return fill(fills);
}

MaskedProgram mask_argument(const TestProgram& p, const CallSite& site) {
  check_site(p, site);
  return build(p, OperatorId::kArgument, {argument_edit(site)});
}

MaskedProgram mask_keyword(const TestProgram& p, const CallSite& site) {
  check_site(p, site);
  std::size_t at = site.last_arg_end;
  bool has_args = at > site.arg_span.begin;
  return build(p, OperatorId::kKeyword,
               {Edit{at, at, has_args ? ", " : "", "", SpanRole::kKeywordName},
                Edit{at, at, "=", "", SpanRole::kKeywordValue}});
}

MaskedProgram mask_prefix(const TestProgram& p, const CallSite& target_site, Rng& rng) {
  return prefix_like(p, target_site, rng, false);
}

MaskedProgram mask_prefix_lines(const TestProgram& p, const CallSite& target_site,
                                int first_line, int last_line) {
  check_site(p, target_site);
  if (first_line < 1 || last_line < first_line || last_line > lines_before(target_site)) {
    throw MaskError(MaskError::Kind::kNothingBeforeTarget,
                    fmt::format("lines {}-{} do not lie before the call to '{}'", first_line,
                                last_line, target_site.callee));
  }
  Lines lines(p.source);
  return build(p, OperatorId::kPrefix, {line_region_edit(lines, first_line, last_line)});
}

MaskedProgram mask_suffix(const TestProgram& p, const CallSite& target_site) {
  check_site(p, target_site);
  return build(p, OperatorId::kSuffix, suffix_edits(p, target_site));
}

MaskedProgram mask_prefix_argument(const TestProgram& p, const CallSite& target_site, Rng& rng) {
  return prefix_like(p, target_site, rng, true);
}

MaskedProgram mask_suffix_argument(const TestProgram& p, const CallSite& target_site) {
  check_site(p, target_site);
  auto edits = suffix_edits(p, target_site);
  edits.push_back(argument_edit(target_site));
  return build(p, OperatorId::kSuffixArgument, std::move(edits));
}

MaskedProgram mask_method(const TestProgram& p, std::span<const CallSite> sites, Rng& rng) {
  std::vector<const CallSite*> eligible;
  for (const auto& s : sites) {
    if (!s.name_span.empty()) eligible.push_back(&s);
  }
  if (eligible.empty()) {
    throw MaskError(MaskError::Kind::kNoLibraryCall, "program has no library call to rename");
  }
  const CallSite& site =
      *eligible[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(eligible.size()) - 1))];
  check_site(p, site);
  return build(p, OperatorId::kMethod,
               {Edit{site.name_span.begin, site.name_span.end, "", "", SpanRole::kMethodName}});
}

MaskedProgram apply_operator(OperatorId op, const TestProgram& p, Rng& rng) {
  auto prefixes = library_prefixes(p.target);
  auto sites = pyast::find_calls(p.source, prefixes);
  if (op == OperatorId::kMethod) return mask_method(p, sites, rng);
  auto pick = [&](const std::vector<const CallSite*>& from) -> const CallSite& {
    return *from[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(from.size()) - 1))];
  };
  if (op == OperatorId::kArgument || op == OperatorId::kKeyword) {
    if (sites.empty()) {
      throw MaskError(MaskError::Kind::kNoLibraryCall, "program has no library call");
    }
    std::vector<const CallSite*> all;
    for (const auto& s : sites) all.push_back(&s);
    const auto& site = pick(all);
    return op == OperatorId::kArgument ? mask_argument(p, site) : mask_keyword(p, site);
  }
  std::vector<const CallSite*> targets;
  for (const auto& s : sites) {
    if (is_target_callee(s.callee, p.target)) targets.push_back(&s);
  }
  if (targets.empty()) {
    throw MaskError(MaskError::Kind::kNoTargetCall,
                    fmt::format("program does not call '{}'", p.target.qualified_name));
  }
  const auto& site = pick(targets);
  switch (op) {
    case OperatorId::kPrefix:
      return mask_prefix(p, site, rng);
    case OperatorId::kSuffix:
      return mask_suffix(p, site);
    case OperatorId::kPrefixArgument:
      return mask_prefix_argument(p, site, rng);
    case OperatorId::kSuffixArgument:
      return mask_suffix_argument(p, site);
    default:
      break;
  }
  throw MaskError(MaskError::Kind::kNoCallSite, "unhandled operator");
}

}  // namespace evofuzz::mutator

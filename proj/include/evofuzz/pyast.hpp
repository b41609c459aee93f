#pragma once

// Parsing and static analysis of Python snippets.
//
// The parser covers the Python 3 statement and expression grammar that
// generated test programs use (no `match` statements, no PEP 695 type
// parameters). It validates syntax only, in the same sense as `ast.parse`:
// `return` outside a function is accepted, undefined names are not checked.

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evofuzz/api_target.hpp"

namespace evofuzz::pyast {

struct SyntaxError {
  int line = 0;    // 1-based
  int column = 0;  // 0-based byte column
  std::string message;
};

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(SyntaxError error);
  const SyntaxError& error() const noexcept { return error_; }

 private:
  SyntaxError error_;
};

// Half-open byte range [begin, end).
struct ByteRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return begin == end; }
  bool contains(const ByteRange& other) const {
    return begin <= other.begin && other.end <= end;
  }
  std::string_view slice(std::string_view source) const {
    return source.substr(begin, end - begin);
  }
  bool operator==(const ByteRange&) const = default;
};

// Marker separating a library root from a method name in callees that were
// attributed through dataflow, e.g. "tf.·batch" for `ds.batch(5)`.
inline constexpr std::string_view kMethodMarker = "·";

struct CallSite {
  // Dotted callee, e.g. "torch.mm"; method calls on library-produced values
  // are named "<root>.<kMethodMarker><method>".
  std::string callee;
  ByteRange callee_span;  // source slice of the callee expression
  ByteRange arg_span;     // everything strictly between the parentheses
  ByteRange call_span;    // callee through the closing parenthesis
  // Range the method operator masks: the callee minus its library root, or
  // the method name of a method call. Empty when not maskable.
  ByteRange name_span;
  int first_line = 0;     // inclusive, 1-based
  int last_line = 0;
  std::string normalized_args;
  bool is_method = false;
  // End offset of the last positional/keyword argument, or arg_span.begin
  // when the call has no arguments.
  std::size_t last_arg_end = 0;

  // Innermost statement containing the call (a compound statement when the
  // call sits in its header).
  ByteRange statement_span;
  int statement_first_line = 0;
  int statement_last_line = 0;
  int statement_indent = 0;  // byte column of the statement's first token
  std::size_t top_level_index = 0;
};

struct DataflowGraph {
  std::vector<CallSite> nodes;                            // library call sites
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // (producer, consumer)
  int depth = 0;  // max edge count over any path
};

// Syntactic validation. Returns the first error, or nullopt when the source
// parses.
std::optional<SyntaxError> parse_check(std::string_view source);

// Longest prefix of whole lines that parses; the input unchanged when it
// parses as-is. Lines of the prefix are joined with '\n' and carry no
// trailing newline.
std::string trim_to_parse(std::string_view source);

// Library call sites in evaluation order (arguments before the call that
// consumes them). Throws ParseError.
std::vector<CallSite> find_calls(std::string_view source, std::span<const std::string> prefixes);

// Def-use graph over library call sites. Throws ParseError.
DataflowGraph build_dataflow(std::string_view source, std::span<const std::string> prefixes);

// Removes top-level statements whose bound names are never read afterwards
// and that reach no library call. Statements feeding the target call stay.
// Throws ParseError.
std::string eliminate_dead_code(std::string_view source, const ApiTarget& target);

// Drops `print(...)` expression statements at every nesting level; a block
// left empty gets `pass`. Throws ParseError.
std::string remove_prints(std::string_view source);

// Canonical argument text: tokens joined without whitespace except between
// adjacent word-like tokens.
std::string canonical_tokens(std::string_view source_fragment);

// True when `name` is `prefix` or starts with `prefix` followed by '.'.
bool has_dotted_prefix(std::string_view name, std::string_view prefix);

}  // namespace evofuzz::pyast

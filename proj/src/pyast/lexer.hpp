#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace evofuzz::pyast::detail {

enum class TokenKind { kName, kNumber, kString, kOp, kNewline, kIndent, kDedent, kEnd };

struct Token {
  TokenKind kind = TokenKind::kEnd;
  std::string_view text;  // view into the source; empty for synthetic tokens
  std::size_t begin = 0;
  std::size_t end = 0;
  int line = 1;
  int end_line = 1;
  int column = 0;
  bool fstring = false;
};

// Tokenizes Python source following the reference tokenizer's rules for
// indentation, implicit line joining and string literals. Throws ParseError.
std::vector<Token> tokenize(std::string_view source);

bool is_keyword(std::string_view word);

}  // namespace evofuzz::pyast::detail

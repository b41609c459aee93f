#include "pyast/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <string>

#include "evofuzz/pyast.hpp"

namespace evofuzz::pyast::detail {
namespace {

constexpr std::array<std::string_view, 35> kKeywords = {
    "False", "None",   "True",    "and",      "as",       "assert", "async",
    "await", "break",  "class",   "continue", "def",      "del",    "elif",
    "else",  "except", "finally", "for",      "from",     "global", "if",
    "import", "in",    "is",      "lambda",   "nonlocal", "not",    "or",
    "pass",  "raise",  "return",  "try",      "while",    "with",   "yield"};

constexpr std::array<std::string_view, 4> kOps3 = {"**=", "//=", ">>=", "<<="};
constexpr std::array<std::string_view, 5> kOps3b = {"...", "!=", "->", ":=", "**"};
constexpr std::array<std::string_view, 17> kOps2 = {"//", ">>", "<<", "<=", ">=", "==",
                                                    "+=", "-=", "*=", "/=", "%=", "&=",
                                                    "|=", "^=", "@=", "!=", ":="};
constexpr std::string_view kOps1 = "+-*/%@&|^~<>()[]{},:;.=";

bool is_ident_start(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c >= 0x80;
}
bool is_ident_char(unsigned char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }
bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

bool is_string_prefix(std::string_view word) {
  if (word.size() > 2) return false;
  std::string lower;
  for (char c : word) lower.push_back(static_cast<char>(c | 0x20));
  return lower == "r" || lower == "u" || lower == "b" || lower == "f" || lower == "br" ||
         lower == "rb" || lower == "fr" || lower == "rf";
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    while (true) {
      if (at_line_start_ && brackets_.empty()) {
        if (!start_logical_line()) break;
      }
      if (pos_ >= src_.size()) break;
      unsigned char c = static_cast<unsigned char>(src_[pos_]);
      if (c == ' ' || c == '\t' || c == '\f') {
        ++pos_;
      } else if (c == '#') {
        skip_comment();
      } else if (c == '\n' || c == '\r') {
        std::size_t nl = pos_;
        consume_newline();
        if (brackets_.empty()) {
          emit(TokenKind::kNewline, nl, nl, line_ - 1);
          at_line_start_ = true;
        }
      } else if (c == '\\') {
        lex_continuation();
      } else if (is_ident_start(c)) {
        lex_name_or_string();
      } else if (is_digit(c) || (c == '.' && pos_ + 1 < src_.size() &&
                                 is_digit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        lex_number();
      } else if (c == '"' || c == '\'') {
        lex_string(pos_, pos_, false);
      } else {
        lex_operator();
      }
    }
    finish();
    return std::move(out_);
  }

 private:
  [[noreturn]] void fail(int line, int column, std::string message) {
    throw ParseError(SyntaxError{line, column, std::move(message)});
  }
  [[noreturn]] void fail_here(std::string message) {
    fail(line_, static_cast<int>(pos_ - line_start_), std::move(message));
  }

  int column_of(std::size_t offset) const { return static_cast<int>(offset - line_start_); }

  void emit(TokenKind kind, std::size_t begin, std::size_t end, int line, int end_line = -1,
            int column = -1) {
    Token t;
    t.kind = kind;
    t.text = src_.substr(begin, end - begin);
    t.begin = begin;
    t.end = end;
    t.line = line;
    t.end_line = end_line < 0 ? line : end_line;
    t.column = column < 0 ? column_of(begin) : column;
    out_.push_back(t);
  }

  void consume_newline() {
    if (src_[pos_] == '\r' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') ++pos_;
    ++pos_;
    ++line_;
    line_start_ = pos_;
  }

  void skip_comment() {
    while (pos_ < src_.size() && src_[pos_] != '\n' && src_[pos_] != '\r') ++pos_;
  }

  // Measures indentation at the start of a line, skipping blank and
  // comment-only lines. Returns false at end of input.
  bool start_logical_line() {
    while (true) {
      int col = 0;
      std::size_t p = pos_;
      while (p < src_.size()) {
        char c = src_[p];
        if (c == ' ') {
          ++col;
        } else if (c == '\t') {
          col = (col / 8 + 1) * 8;
        } else if (c == '\f') {
          col = 0;
        } else {
          break;
        }
        ++p;
      }
      pos_ = p;
      if (p >= src_.size()) return false;
      char c = src_[p];
      if (c == '#') {
        skip_comment();
        if (pos_ >= src_.size()) return false;
        consume_newline();
        continue;
      }
      if (c == '\n' || c == '\r') {
        consume_newline();
        continue;
      }
      at_line_start_ = false;
      if (col > indents_.back()) {
        indents_.push_back(col);
        emit(TokenKind::kIndent, pos_, pos_, line_);
      } else {
        while (col < indents_.back()) {
          indents_.pop_back();
          emit(TokenKind::kDedent, pos_, pos_, line_);
        }
        if (col != indents_.back()) {
          fail(line_, col, "unindent does not match any outer indentation level");
        }
      }
      return true;
    }
  }

  void lex_continuation() {
    std::size_t next = pos_ + 1;
    if (next >= src_.size()) fail_here("unexpected EOF while parsing");
    if (src_[next] == '\n' || src_[next] == '\r') {
      pos_ = next;
      consume_newline();
      if (pos_ >= src_.size()) fail_here("unexpected EOF while parsing");
      return;
    }
    fail_here("unexpected character after line continuation character");
  }

  void lex_name_or_string() {
    std::size_t begin = pos_;
    while (pos_ < src_.size() && is_ident_char(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    std::string_view word = src_.substr(begin, pos_ - begin);
    if (pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\'') &&
        is_string_prefix(word)) {
      bool is_f = word.find_first_of("fF") != std::string_view::npos;
      lex_string(begin, pos_, is_f);
      return;
    }
    emit(TokenKind::kName, begin, pos_, line_);
  }

  void lex_number() {
    std::size_t begin = pos_;
    auto digits = [&](auto pred) {
      while (pos_ < src_.size() &&
             (pred(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
        ++pos_;
      }
    };
    if (src_[pos_] == '0' && pos_ + 1 < src_.size() &&
        std::string_view("xXoObB").find(src_[pos_ + 1]) != std::string_view::npos) {
      pos_ += 2;
      std::size_t body = pos_;
      digits([](unsigned char c) { return std::isxdigit(c) != 0; });
      if (pos_ == body) fail_here("invalid number literal");
    } else {
      digits(is_digit);
      if (pos_ < src_.size() && src_[pos_] == '.') {
        ++pos_;
        digits(is_digit);
      }
      if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
        std::size_t save = pos_;
        ++pos_;
        if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
        if (pos_ < src_.size() && is_digit(static_cast<unsigned char>(src_[pos_]))) {
          digits(is_digit);
        } else {
          pos_ = save;
          fail_here("invalid decimal literal");
        }
      }
      if (pos_ < src_.size() && (src_[pos_] == 'j' || src_[pos_] == 'J')) ++pos_;
    }
    if (pos_ < src_.size() && is_ident_char(static_cast<unsigned char>(src_[pos_]))) {
      fail_here("invalid decimal literal");
    }
    emit(TokenKind::kNumber, begin, pos_, line_);
  }

  // `begin` is the start of the prefix, `quote` the opening quote.
  void lex_string(std::size_t begin, std::size_t quote, bool is_f) {
    int start_line = line_;
    int start_col = column_of(begin);
    char q = src_[quote];
    bool triple = quote + 2 < src_.size() && src_[quote + 1] == q && src_[quote + 2] == q;
    pos_ = quote + (triple ? 3 : 1);
    while (true) {
      if (pos_ >= src_.size()) {
        fail(start_line, start_col,
             triple ? "unterminated triple-quoted string literal"
                    : "unterminated string literal");
      }
      char c = src_[pos_];
      if (c == '\\') {
        ++pos_;
        if (pos_ >= src_.size()) continue;
        if (src_[pos_] == '\n' || src_[pos_] == '\r') {
          consume_newline();
        } else {
          ++pos_;
        }
        continue;
      }
      if (c == '\n' || c == '\r') {
        if (!triple) fail(start_line, start_col, "unterminated string literal");
        consume_newline();
        continue;
      }
      if (c == q) {
        if (!triple) {
          ++pos_;
          break;
        }
        if (pos_ + 2 < src_.size() && src_[pos_ + 1] == q && src_[pos_ + 2] == q) {
          pos_ += 3;
          break;
        }
      }
      ++pos_;
    }
    emit(TokenKind::kString, begin, pos_, start_line, line_, start_col);
    out_.back().fstring = is_f;
  }

  void lex_operator() {
    std::string_view rest = src_.substr(pos_);
    std::size_t len = 0;
    for (auto op : kOps3) {
      if (rest.starts_with(op)) len = 3;
    }
    if (len == 0) {
      for (auto op : kOps3b) {
        if (rest.starts_with(op)) len = op.size();
      }
    }
    if (len == 0) {
      for (auto op : kOps2) {
        if (rest.starts_with(op)) len = 2;
      }
    }
    if (len == 0 && kOps1.find(rest[0]) != std::string_view::npos) len = 1;
    if (len == 0) fail_here("invalid character '" + std::string(1, rest[0]) + "'");

    char c = rest[0];
    if (len == 1 && (c == '(' || c == '[' || c == '{')) {
      emit(TokenKind::kOp, pos_, pos_ + 1, line_);
      brackets_.push_back(out_.back());
    } else if (len == 1 && (c == ')' || c == ']' || c == '}')) {
      if (brackets_.empty()) fail_here(std::string("unmatched '") + c + "'");
      char open = brackets_.back().text[0];
      char expected = open == '(' ? ')' : open == '[' ? ']' : '}';
      if (c != expected) {
        fail_here(std::string("closing parenthesis '") + c +
                  "' does not match opening parenthesis '" + open + "'");
      }
      brackets_.pop_back();
      emit(TokenKind::kOp, pos_, pos_ + 1, line_);
    } else {
      emit(TokenKind::kOp, pos_, pos_ + len, line_);
    }
    pos_ += len;
  }

  void finish() {
    if (!brackets_.empty()) {
      const Token& open = brackets_.back();
      fail(open.line, open.column, "'" + std::string(open.text) + "' was never closed");
    }
    if (!out_.empty() && out_.back().kind != TokenKind::kNewline &&
        out_.back().kind != TokenKind::kDedent) {
      emit(TokenKind::kNewline, src_.size(), src_.size(), line_);
    }
    while (indents_.size() > 1) {
      indents_.pop_back();
      emit(TokenKind::kDedent, src_.size(), src_.size(), line_);
    }
    emit(TokenKind::kEnd, src_.size(), src_.size(), line_);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::size_t line_start_ = 0;
  bool at_line_start_ = true;
  std::vector<int> indents_{0};
  std::vector<Token> brackets_;
  std::vector<Token> out_;
};

}  // namespace

std::vector<Token> tokenize(std::string_view source) { return Lexer(source).run(); }

bool is_keyword(std::string_view word) {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

}  // namespace evofuzz::pyast::detail

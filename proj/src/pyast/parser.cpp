#include <algorithm>
#include <array>
#include <set>
#include <string>

#include "evofuzz/pyast.hpp"
#include "pyast/ast.hpp"

namespace evofuzz::pyast::detail {
namespace {

enum class TargetContext { kAssign, kAugAssign, kAnnotated, kDel, kFor, kWith, kComprehension };

constexpr std::array<std::string_view, 13> kAugOps = {"+=", "-=", "*=", "/=", "//=", "%=", "@=",
                                                      "&=", "|=", "^=", ">>=", "<<=", "**="};

std::string_view describe(ExprKind kind) {
  switch (kind) {
    case ExprKind::kCall:
      return "function call";
    case ExprKind::kConstant:
    case ExprKind::kString:
      return "literal";
    case ExprKind::kBinOp:
    case ExprKind::kUnaryOp:
      return "expression";
    case ExprKind::kBoolOp:
      return "expression";
    case ExprKind::kCompare:
      return "comparison";
    case ExprKind::kIfExp:
      return "conditional expression";
    case ExprKind::kLambda:
      return "lambda";
    case ExprKind::kDict:
      return "dict literal";
    case ExprKind::kSet:
      return "set display";
    case ExprKind::kComprehension:
      return "comprehension";
    case ExprKind::kNamedExpr:
      return "named expression";
    case ExprKind::kAwait:
      return "await expression";
    case ExprKind::kYield:
      return "yield expression";
    default:
      return "expression";
  }
}

class Parser {
 public:
  Parser(std::string_view src, std::vector<Token> tokens)
      : src_(src), toks_(std::move(tokens)) {}

  Module run() {
    Module m;
    while (!at(TokenKind::kEnd)) parse_statement(m.body);
    m.tokens = std::move(toks_);
    return m;
  }

 private:
  // ---- token helpers ------------------------------------------------------

  const Token& peek(std::size_t k = 0) const {
    return toks_[std::min(pos_ + k, toks_.size() - 1)];
  }
  const Token& prev() const { return toks_[pos_ == 0 ? 0 : pos_ - 1]; }
  bool at(TokenKind kind, std::size_t k = 0) const { return peek(k).kind == kind; }
  bool at_op(std::string_view op, std::size_t k = 0) const {
    const Token& t = peek(k);
    return t.kind == TokenKind::kOp && t.text == op;
  }
  bool at_kw(std::string_view kw, std::size_t k = 0) const {
    const Token& t = peek(k);
    return t.kind == TokenKind::kName && t.text == kw;
  }
  bool at_identifier(std::size_t k = 0) const {
    const Token& t = peek(k);
    return t.kind == TokenKind::kName && !is_keyword(t.text);
  }
  const Token& take() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }

  [[noreturn]] void fail(const Token& t, std::string message = "invalid syntax") const {
    throw ParseError(SyntaxError{t.line, t.column, std::move(message)});
  }
  [[noreturn]] void fail_at(const Expr& e, std::string message) const {
    auto line_start = src_.rfind('\n', e.begin == 0 ? 0 : e.begin - 1);
    int column = line_start == std::string_view::npos || e.begin == 0
                     ? static_cast<int>(e.begin)
                     : static_cast<int>(e.begin - line_start - 1);
    throw ParseError(SyntaxError{e.line, column, std::move(message)});
  }

  const Token& expect_op(std::string_view op) {
    if (!at_op(op)) {
      if (at(TokenKind::kNewline) || at(TokenKind::kEnd)) {
        fail(peek(), "expected '" + std::string(op) + "'");
      }
      fail(peek());
    }
    return take();
  }
  const Token& expect_kw(std::string_view kw) {
    if (!at_kw(kw)) fail(peek(), "expected '" + std::string(kw) + "'");
    return take();
  }
  const Token& expect_identifier() {
    if (!at_identifier()) fail(peek());
    return take();
  }

  bool at_simple_end() const {
    return at(TokenKind::kNewline) || at_op(";") || at(TokenKind::kEnd);
  }

  bool starts_expression(std::size_t k = 0) const {
    const Token& t = peek(k);
    switch (t.kind) {
      case TokenKind::kNumber:
      case TokenKind::kString:
        return true;
      case TokenKind::kName:
        return !is_keyword(t.text) || t.text == "None" || t.text == "True" ||
               t.text == "False" || t.text == "not" || t.text == "lambda" ||
               t.text == "await" || t.text == "yield";
      case TokenKind::kOp:
        return t.text == "(" || t.text == "[" || t.text == "{" || t.text == "-" ||
               t.text == "+" || t.text == "~" || t.text == "*" || t.text == "...";
      default:
        return false;
    }
  }

  // ---- node helpers -------------------------------------------------------

  static ExprPtr make(ExprKind kind, const Token& first) {
    auto e = std::make_unique<Expr>(kind);
    e->begin = first.begin;
    e->line = first.line;
    return e;
  }
  static ExprPtr make_from(ExprKind kind, const Expr& first) {
    auto e = std::make_unique<Expr>(kind);
    e->begin = first.begin;
    e->line = first.line;
    return e;
  }
  void close(Expr& e) const {
    e.end = prev().end;
    e.end_line = prev().end_line;
  }
  static StmtPtr make_stmt(StmtKind kind, const Token& first) {
    auto s = std::make_unique<Stmt>(kind);
    s->begin = first.begin;
    s->first_line = first.line;
    s->indent = first.column;
    return s;
  }
  void close(Stmt& s) const {
    s.end = prev().end;
    s.last_line = prev().end_line;
  }
  static void close_compound(Stmt& s) {
    for (auto it = s.bodies.rbegin(); it != s.bodies.rend(); ++it) {
      if (!it->empty()) {
        s.end = std::max(s.end, it->back()->end);
        s.last_line = std::max(s.last_line, it->back()->last_line);
        return;
      }
    }
  }

  // ---- statements ---------------------------------------------------------

  void parse_statement(Block& out) {
    if (at(TokenKind::kIndent)) fail(peek(), "unexpected indent");
    if (at(TokenKind::kNewline)) {
      take();
      return;
    }
    if (at_kw("if") || at_kw("while") || at_kw("for") || at_kw("try") || at_kw("with") ||
        at_kw("def") || at_kw("class") || at_op("@") ||
        (at_kw("async") && (at_kw("def", 1) || at_kw("for", 1) || at_kw("with", 1)))) {
      out.push_back(parse_compound());
      return;
    }
    parse_simple_statements(out);
  }

  void parse_simple_statements(Block& out) {
    while (true) {
      out.push_back(parse_simple());
      if (at_op(";")) {
        take();
        if (at(TokenKind::kNewline)) break;
        continue;
      }
      break;
    }
    if (!at(TokenKind::kNewline)) fail(peek());
    take();
  }

  Block parse_block() {
    Block body;
    if (at(TokenKind::kNewline)) {
      take();
      if (!at(TokenKind::kIndent)) fail(peek(), "expected an indented block");
      take();
      while (!at(TokenKind::kDedent) && !at(TokenKind::kEnd)) parse_statement(body);
      if (at(TokenKind::kDedent)) take();
    } else {
      parse_simple_statements(body);
    }
    return body;
  }

  StmtPtr parse_simple() {
    const Token& first = peek();
    if (at_kw("pass") || at_kw("break") || at_kw("continue")) {
      auto kind = first.text == "pass"    ? StmtKind::kPass
                  : first.text == "break" ? StmtKind::kBreak
                                          : StmtKind::kContinue;
      auto s = make_stmt(kind, first);
      take();
      close(*s);
      return s;
    }
    if (at_kw("return")) {
      auto s = make_stmt(StmtKind::kReturn, first);
      take();
      if (!at_simple_end()) s->value = star_expressions();
      close(*s);
      return s;
    }
    if (at_kw("raise")) {
      auto s = make_stmt(StmtKind::kRaise, first);
      take();
      if (!at_simple_end()) {
        s->exprs.push_back(expression());
        if (at_kw("from")) {
          take();
          s->exprs.push_back(expression());
        }
      }
      close(*s);
      return s;
    }
    if (at_kw("global") || at_kw("nonlocal")) {
      auto s = make_stmt(first.text == "global" ? StmtKind::kGlobal : StmtKind::kNonlocal, first);
      take();
      s->bound_names.push_back(expect_identifier().text);
      while (at_op(",")) {
        take();
        s->bound_names.push_back(expect_identifier().text);
      }
      close(*s);
      return s;
    }
    if (at_kw("del")) {
      auto s = make_stmt(StmtKind::kDel, first);
      take();
      auto targets = target_list(/*allow_star=*/false);
      check_target(*targets, TargetContext::kDel);
      s->targets.push_back(std::move(targets));
      close(*s);
      return s;
    }
    if (at_kw("assert")) {
      auto s = make_stmt(StmtKind::kAssert, first);
      take();
      s->exprs.push_back(expression());
      if (at_op(",")) {
        take();
        s->exprs.push_back(expression());
      }
      close(*s);
      return s;
    }
    if (at_kw("import")) return parse_import();
    if (at_kw("from")) return parse_from_import();

    ExprPtr head = at_kw("yield") ? yield_expr() : star_expressions();
    if (at_op("=")) {
      auto s = make_stmt(StmtKind::kAssign, first);
      ExprPtr current = std::move(head);
      while (at_op("=")) {
        check_target(*current, TargetContext::kAssign);
        s->targets.push_back(std::move(current));
        take();
        current = at_kw("yield") ? yield_expr() : star_expressions();
      }
      s->value = std::move(current);
      close(*s);
      return s;
    }
    if (peek().kind == TokenKind::kOp &&
        std::find(kAugOps.begin(), kAugOps.end(), peek().text) != kAugOps.end()) {
      check_target(*head, TargetContext::kAugAssign);
      auto s = make_stmt(StmtKind::kAugAssign, first);
      s->targets.push_back(std::move(head));
      take();
      s->value = at_kw("yield") ? yield_expr() : star_expressions();
      close(*s);
      return s;
    }
    if (at_op(":")) {
      check_target(*head, TargetContext::kAnnotated);
      auto s = make_stmt(StmtKind::kAnnAssign, first);
      s->targets.push_back(std::move(head));
      take();
      s->exprs.push_back(expression());
      if (at_op("=")) {
        take();
        s->value = at_kw("yield") ? yield_expr() : star_expressions();
      }
      close(*s);
      return s;
    }
    if (head->kind == ExprKind::kStarred) fail_at(*head, "can't use starred expression here");
    auto s = make_stmt(StmtKind::kExpr, first);
    s->value = std::move(head);
    close(*s);
    return s;
  }

  std::string_view dotted_name() {
    const Token& first = expect_identifier();
    std::size_t end = first.end;
    while (at_op(".")) {
      take();
      end = expect_identifier().end;
    }
    return src_.substr(first.begin, end - first.begin);
  }

  StmtPtr parse_import() {
    auto s = make_stmt(StmtKind::kImport, peek());
    take();
    while (true) {
      std::string_view name = dotted_name();
      if (at_kw("as")) {
        take();
        s->bound_names.push_back(expect_identifier().text);
      } else {
        s->bound_names.push_back(name.substr(0, name.find('.')));
      }
      if (!at_op(",")) break;
      take();
    }
    close(*s);
    return s;
  }

  StmtPtr parse_from_import() {
    auto s = make_stmt(StmtKind::kImportFrom, peek());
    take();
    bool has_dots = false;
    while (at_op(".") || at_op("...")) {
      take();
      has_dots = true;
    }
    if (!at_kw("import")) {
      dotted_name();
    } else if (!has_dots) {
      fail(peek());
    }
    expect_kw("import");
    if (at_op("*")) {
      take();
      close(*s);
      return s;
    }
    bool parenthesized = at_op("(");
    if (parenthesized) take();
    while (true) {
      std::string_view name = expect_identifier().text;
      if (at_kw("as")) {
        take();
        name = expect_identifier().text;
      }
      s->bound_names.push_back(name);
      if (!at_op(",")) break;
      take();
      if (parenthesized && at_op(")")) break;
      if (!parenthesized && at_simple_end()) {
        fail(peek(), "trailing comma not allowed without surrounding parentheses");
      }
    }
    if (parenthesized) expect_op(")");
    close(*s);
    return s;
  }

  StmtPtr parse_compound() {
    std::vector<ExprPtr> decorators;
    const Token& first = peek();
    while (at_op("@")) {
      take();
      decorators.push_back(named_expression());
      if (!at(TokenKind::kNewline)) fail(peek());
      take();
      if (!(at_op("@") || at_kw("def") || at_kw("class") ||
            (at_kw("async") && at_kw("def", 1)))) {
        fail(peek());
      }
    }
    if (!decorators.empty() || at_kw("def") || at_kw("class") ||
        (at_kw("async") && at_kw("def", 1))) {
      StmtPtr s = at_kw("class") ? parse_class(first) : parse_def(first);
      // Decorators evaluate before the defaults.
      s->exprs.insert(s->exprs.begin(), std::make_move_iterator(decorators.begin()),
                      std::make_move_iterator(decorators.end()));
      return s;
    }
    if (at_kw("async")) take();
    if (at_kw("if")) return parse_if();
    if (at_kw("while")) return parse_while();
    if (at_kw("for")) return parse_for(first);
    if (at_kw("try")) return parse_try();
    return parse_with(first);
  }

  StmtPtr parse_if() {
    auto s = make_stmt(StmtKind::kIf, peek());
    take();
    s->exprs.push_back(named_expression());
    expect_op(":");
    s->bodies.push_back(parse_block());
    while (at_kw("elif")) {
      take();
      s->exprs.push_back(named_expression());
      expect_op(":");
      s->bodies.push_back(parse_block());
    }
    if (at_kw("else")) {
      take();
      expect_op(":");
      s->bodies.push_back(parse_block());
    }
    close_compound(*s);
    return s;
  }

  StmtPtr parse_while() {
    auto s = make_stmt(StmtKind::kWhile, peek());
    take();
    s->exprs.push_back(named_expression());
    expect_op(":");
    s->bodies.push_back(parse_block());
    if (at_kw("else")) {
      take();
      expect_op(":");
      s->bodies.push_back(parse_block());
    }
    close_compound(*s);
    return s;
  }

  StmtPtr parse_for(const Token& first) {
    auto s = make_stmt(StmtKind::kFor, first);
    expect_kw("for");
    auto target = target_list(/*allow_star=*/true);
    check_target(*target, TargetContext::kFor);
    s->targets.push_back(std::move(target));
    expect_kw("in");
    s->value = star_expressions();
    expect_op(":");
    s->bodies.push_back(parse_block());
    if (at_kw("else")) {
      take();
      expect_op(":");
      s->bodies.push_back(parse_block());
    }
    close_compound(*s);
    return s;
  }

  StmtPtr parse_try() {
    auto s = make_stmt(StmtKind::kTry, peek());
    take();
    expect_op(":");
    s->bodies.push_back(parse_block());
    while (at_kw("except")) {
      take();
      if (at_op("*")) take();
      Handler h;
      if (!at_op(":")) {
        h.type = expression();
        if (at_op(",")) fail(peek(), "multiple exception types must be parenthesized");
        if (at_kw("as")) {
          take();
          h.name = expect_identifier().text;
        }
      }
      expect_op(":");
      s->handlers.push_back(std::move(h));
      s->bodies.push_back(parse_block());
    }
    bool has_else = false;
    if (at_kw("else")) {
      if (s->handlers.empty()) fail(peek(), "expected 'except' or 'finally' block");
      take();
      expect_op(":");
      s->bodies.push_back(parse_block());
      has_else = true;
    }
    if (at_kw("finally")) {
      take();
      expect_op(":");
      s->bodies.push_back(parse_block());
    } else if (s->handlers.empty() && !has_else) {
      fail(peek(), "expected 'except' or 'finally' block");
    }
    close_compound(*s);
    return s;
  }

  void with_item(Stmt& s) {
    s.exprs.push_back(expression());
    if (at_kw("as")) {
      take();
      auto target = star_target();
      check_target(*target, TargetContext::kWith);
      s.targets.push_back(std::move(target));
    } else {
      s.targets.push_back(nullptr);
    }
  }

  StmtPtr parse_with(const Token& first) {
    auto s = make_stmt(StmtKind::kWith, first);
    expect_kw("with");
    bool done = false;
    if (at_op("(")) {
      // Parenthesized item list; falls back to a plain expression on failure.
      std::size_t save = pos_;
      try {
        take();
        while (!at_op(")")) {
          with_item(*s);
          if (!at_op(",")) break;
          take();
        }
        expect_op(")");
        if (!at_op(":")) fail(peek());
        done = true;
      } catch (const ParseError&) {
        pos_ = save;
        s->exprs.clear();
        s->targets.clear();
      }
    }
    if (!done) {
      with_item(*s);
      while (at_op(",")) {
        take();
        with_item(*s);
      }
    }
    expect_op(":");
    s->bodies.push_back(parse_block());
    close_compound(*s);
    return s;
  }

  // Parameters up to (not including) `closing`. Names go to `names`, default
  // and annotation expressions to `exprs`.
  void parse_params(std::string_view closing, bool annotations,
                    std::vector<std::string_view>& names, std::vector<ExprPtr>& exprs) {
    bool seen_default = false;
    bool seen_star = false;
    while (!at_op(closing)) {
      if (at_op("/")) {
        take();
      } else if (at_op("*") || at_op("**")) {
        bool double_star = at_op("**");
        take();
        if (double_star || !at_op(",")) {
          names.push_back(expect_identifier().text);
          if (annotations && at_op(":")) {
            take();
            exprs.push_back(at_op("*") ? star_expression() : expression());
          }
        }
        seen_star = true;
      } else {
        names.push_back(expect_identifier().text);
        if (annotations && at_op(":")) {
          take();
          exprs.push_back(expression());
        }
        if (at_op("=")) {
          take();
          exprs.push_back(expression());
          seen_default = true;
        } else if (seen_default && !seen_star) {
          fail(prev(), "non-default argument follows default argument");
        }
      }
      if (!at_op(",")) break;
      take();
    }
  }

  StmtPtr parse_def(const Token& first) {
    auto s = make_stmt(StmtKind::kFunctionDef, first);
    if (at_kw("async")) take();
    expect_kw("def");
    s->bound_names.push_back(expect_identifier().text);
    expect_op("(");
    parse_params(")", true, s->params, s->exprs);
    expect_op(")");
    if (at_op("->")) {
      take();
      s->exprs.push_back(expression());
    }
    expect_op(":");
    s->bodies.push_back(parse_block());
    close_compound(*s);
    return s;
  }

  StmtPtr parse_class(const Token& first) {
    auto s = make_stmt(StmtKind::kClassDef, first);
    expect_kw("class");
    s->bound_names.push_back(expect_identifier().text);
    if (at_op("(")) {
      auto holder = make(ExprKind::kName, peek());
      auto call = call_suffix(std::move(holder));
      for (std::size_t i = 1; i < call->kids.size(); ++i) s->exprs.push_back(std::move(call->kids[i]));
    }
    expect_op(":");
    s->bodies.push_back(parse_block());
    close_compound(*s);
    return s;
  }

  // ---- targets ------------------------------------------------------------

  ExprPtr star_target() {
    if (at_op("*")) {
      auto e = make(ExprKind::kStarred, take());
      e->kids.push_back(bitwise_or());
      close(*e);
      return e;
    }
    return bitwise_or();
  }

  // Comma-separated targets without comparisons, so `in` terminates the list.
  ExprPtr target_list(bool allow_star) {
    auto first = allow_star ? star_target() : bitwise_or();
    if (!at_op(",")) return first;
    auto tuple = make_from(ExprKind::kTuple, *first);
    tuple->kids.push_back(std::move(first));
    while (at_op(",")) {
      take();
      if (!starts_expression() || at_kw("in")) break;
      tuple->kids.push_back(allow_star ? star_target() : bitwise_or());
    }
    close(*tuple);
    return tuple;
  }

  void check_target(const Expr& e, TargetContext ctx, bool nested = false) const {
    const bool del = ctx == TargetContext::kDel;
    switch (e.kind) {
      case ExprKind::kName:
      case ExprKind::kAttribute:
      case ExprKind::kSubscript:
        return;
      case ExprKind::kTuple:
      case ExprKind::kList:
        if (ctx == TargetContext::kAugAssign) {
          fail_at(e, "'tuple' is an illegal expression for augmented assignment");
        }
        if (ctx == TargetContext::kAnnotated) {
          fail_at(e, "only single target (not tuple) can be annotated");
        }
        for (const auto& kid : e.kids) check_target(*kid, ctx, true);
        return;
      case ExprKind::kStarred:
        if (del) fail_at(e, "cannot delete starred");
        if (!nested) fail_at(e, "starred assignment target must be in a list or tuple");
        check_target(*e.kids[0], ctx, true);
        return;
      default:
        fail_at(e, std::string(del ? "cannot delete " : "cannot assign to ") +
                       std::string(describe(e.kind)));
    }
  }

  // ---- expressions --------------------------------------------------------

  ExprPtr star_expressions() {
    auto first = star_expression();
    if (!at_op(",")) return first;
    auto tuple = make_from(ExprKind::kTuple, *first);
    tuple->kids.push_back(std::move(first));
    while (at_op(",")) {
      take();
      if (!starts_expression()) break;
      tuple->kids.push_back(star_expression());
    }
    close(*tuple);
    return tuple;
  }

  ExprPtr star_expression() {
    if (at_op("*")) {
      auto e = make(ExprKind::kStarred, take());
      e->kids.push_back(bitwise_or());
      close(*e);
      return e;
    }
    return expression();
  }

  ExprPtr star_named_expression() {
    if (at_op("*")) return star_expression();
    return named_expression();
  }

  ExprPtr named_expression() {
    if (at_identifier() && at_op(":=", 1)) {
      const Token& name = take();
      auto e = make(ExprKind::kNamedExpr, name);
      e->ident = name.text;
      e->ident_begin = name.begin;
      take();
      e->kids.push_back(expression());
      close(*e);
      return e;
    }
    auto e = expression();
    if (at_op(":=")) fail(peek(), "cannot use assignment expressions with " +
                                      std::string(describe(e->kind)));
    return e;
  }

  ExprPtr yield_expr() {
    auto e = make(ExprKind::kYield, take());
    if (at_kw("from")) {
      take();
      e->kids.push_back(expression());
    } else if (starts_expression() && !at_kw("yield")) {
      e->kids.push_back(star_expressions());
    }
    close(*e);
    return e;
  }

  ExprPtr expression() {
    if (at_kw("lambda")) return lambdef();
    auto body = disjunction();
    if (!at_kw("if")) return body;
    auto e = make_from(ExprKind::kIfExp, *body);
    take();
    e->kids.push_back(std::move(body));
    e->kids.push_back(disjunction());
    expect_kw("else");
    e->kids.push_back(expression());
    close(*e);
    return e;
  }

  ExprPtr lambdef() {
    auto e = make(ExprKind::kLambda, take());
    parse_params(":", false, e->params, e->kids);
    expect_op(":");
    e->kids.push_back(expression());
    close(*e);
    return e;
  }

  template <class Next>
  ExprPtr bool_chain(std::string_view kw, Next next) {
    auto left = (this->*next)();
    if (!at_kw(kw)) return left;
    auto e = make_from(ExprKind::kBoolOp, *left);
    e->kids.push_back(std::move(left));
    while (at_kw(kw)) {
      take();
      e->kids.push_back((this->*next)());
    }
    close(*e);
    return e;
  }

  ExprPtr disjunction() { return bool_chain("or", &Parser::conjunction); }
  ExprPtr conjunction() { return bool_chain("and", &Parser::inversion); }

  ExprPtr inversion() {
    if (at_kw("not")) {
      auto e = make(ExprKind::kUnaryOp, take());
      e->kids.push_back(inversion());
      close(*e);
      return e;
    }
    return comparison();
  }

  bool take_compare_op() {
    if (peek().kind == TokenKind::kOp) {
      auto t = peek().text;
      if (t == "==" || t == "!=" || t == "<" || t == "<=" || t == ">" || t == ">=") {
        take();
        return true;
      }
      return false;
    }
    if (at_kw("in")) {
      take();
      return true;
    }
    if (at_kw("not") && at_kw("in", 1)) {
      take();
      take();
      return true;
    }
    if (at_kw("is")) {
      take();
      if (at_kw("not")) take();
      return true;
    }
    return false;
  }

  ExprPtr comparison() {
    auto left = bitwise_or();
    ExprPtr e;
    while (take_compare_op()) {
      if (!e) {
        e = make_from(ExprKind::kCompare, *left);
        e->kids.push_back(std::move(left));
      }
      e->kids.push_back(bitwise_or());
    }
    if (!e) return left;
    close(*e);
    return e;
  }

  template <class Next>
  ExprPtr binary_chain(std::initializer_list<std::string_view> ops, Next next) {
    auto left = (this->*next)();
    auto matches = [&] {
      if (peek().kind != TokenKind::kOp) return false;
      return std::find(ops.begin(), ops.end(), peek().text) != ops.end();
    };
    while (matches()) {
      take();
      auto e = make_from(ExprKind::kBinOp, *left);
      e->kids.push_back(std::move(left));
      e->kids.push_back((this->*next)());
      close(*e);
      left = std::move(e);
    }
    return left;
  }

  ExprPtr bitwise_or() { return binary_chain({"|"}, &Parser::bitwise_xor); }
  ExprPtr bitwise_xor() { return binary_chain({"^"}, &Parser::bitwise_and); }
  ExprPtr bitwise_and() { return binary_chain({"&"}, &Parser::shift_expr); }
  ExprPtr shift_expr() { return binary_chain({"<<", ">>"}, &Parser::sum); }
  ExprPtr sum() { return binary_chain({"+", "-"}, &Parser::term); }
  ExprPtr term() { return binary_chain({"*", "/", "//", "%", "@"}, &Parser::factor); }

  ExprPtr factor() {
    if (at_op("+") || at_op("-") || at_op("~")) {
      auto e = make(ExprKind::kUnaryOp, take());
      e->kids.push_back(factor());
      close(*e);
      return e;
    }
    return power();
  }

  ExprPtr power() {
    auto base = await_primary();
    if (!at_op("**")) return base;
    take();
    auto e = make_from(ExprKind::kBinOp, *base);
    e->kids.push_back(std::move(base));
    e->kids.push_back(factor());
    close(*e);
    return e;
  }

  ExprPtr await_primary() {
    if (at_kw("await")) {
      auto e = make(ExprKind::kAwait, take());
      e->kids.push_back(primary());
      close(*e);
      return e;
    }
    return primary();
  }

  ExprPtr primary() {
    auto e = atom();
    while (true) {
      if (at_op(".")) {
        take();
        const Token& name = expect_identifier();
        auto attr = make_from(ExprKind::kAttribute, *e);
        attr->ident = name.text;
        attr->ident_begin = name.begin;
        attr->kids.push_back(std::move(e));
        close(*attr);
        e = std::move(attr);
      } else if (at_op("(")) {
        e = call_suffix(std::move(e));
      } else if (at_op("[")) {
        take();
        auto sub = make_from(ExprKind::kSubscript, *e);
        sub->kids.push_back(std::move(e));
        sub->kids.push_back(slices());
        expect_op("]");
        close(*sub);
        e = std::move(sub);
      } else {
        return e;
      }
    }
  }

  ExprPtr call_suffix(ExprPtr callee) {
    const Token& lparen = take();
    auto call = make_from(ExprKind::kCall, *callee);
    call->lparen = lparen.begin;
    call->kids.push_back(std::move(callee));
    bool seen_keyword = false;
    bool seen_double_star = false;
    bool first = true;
    std::set<std::string_view> keyword_names;
    while (!at_op(")")) {
      if (at_op("*")) {
        if (seen_double_star) {
          fail(peek(), "iterable argument unpacking follows keyword argument unpacking");
        }
        call->kids.push_back(star_expression());
      } else if (at_op("**")) {
        auto e = make(ExprKind::kDoubleStarred, take());
        e->kids.push_back(expression());
        close(*e);
        call->kids.push_back(std::move(e));
        seen_double_star = true;
      } else if (at_identifier() && at_op("=", 1)) {
        const Token& name = take();
        if (!keyword_names.insert(name.text).second) {
          fail(name, "keyword argument repeated: " + std::string(name.text));
        }
        take();
        auto e = make(ExprKind::kKeyword, name);
        e->ident = name.text;
        e->ident_begin = name.begin;
        e->kids.push_back(expression());
        close(*e);
        call->kids.push_back(std::move(e));
        seen_keyword = true;
      } else {
        auto value = named_expression();
        if (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
          auto gen = make_from(ExprKind::kComprehension, *value);
          gen->kids.push_back(std::move(value));
          comprehension_clauses(*gen);
          close(*gen);
          if (!first || !at_op(")")) {
            fail_at(*gen, "Generator expression must be parenthesized");
          }
          value = std::move(gen);
        } else if (at_op("=")) {
          fail(peek(), "expression cannot contain assignment, perhaps you meant \"==\"?");
        }
        if (seen_double_star) {
          fail_at(*value, "positional argument follows keyword argument unpacking");
        }
        if (seen_keyword) fail_at(*value, "positional argument follows keyword argument");
        call->kids.push_back(std::move(value));
      }
      first = false;
      if (!at_op(",")) break;
      take();
    }
    const Token& rparen = expect_op(")");
    call->rparen = rparen.begin;
    close(*call);
    return call;
  }

  ExprPtr slice_item() {
    ExprPtr lower;
    const Token& first = peek();
    if (!at_op(":")) lower = star_named_expression();
    if (!at_op(":")) return lower;
    auto slice = lower ? make_from(ExprKind::kSlice, *lower) : make(ExprKind::kSlice, first);
    if (lower) slice->kids.push_back(std::move(lower));
    take();
    if (!at_op(":") && !at_op("]") && !at_op(",")) slice->kids.push_back(expression());
    if (at_op(":")) {
      take();
      if (!at_op("]") && !at_op(",")) slice->kids.push_back(expression());
    }
    close(*slice);
    return slice;
  }

  ExprPtr slices() {
    auto first = slice_item();
    if (!at_op(",")) return first;
    auto tuple = make_from(ExprKind::kTuple, *first);
    tuple->kids.push_back(std::move(first));
    while (at_op(",")) {
      take();
      if (at_op("]")) break;
      tuple->kids.push_back(slice_item());
    }
    close(*tuple);
    return tuple;
  }

  void comprehension_clauses(Expr& comp) {
    while (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
      if (at_kw("async")) take();
      take();
      Generator g;
      g.target = target_list(/*allow_star=*/true);
      check_target(*g.target, TargetContext::kComprehension);
      expect_kw("in");
      g.iter = disjunction();
      while (at_kw("if")) {
        take();
        g.ifs.push_back(disjunction());
      }
      comp.generators.push_back(std::move(g));
    }
  }

  ExprPtr atom() {
    const Token& t = peek();
    switch (t.kind) {
      case TokenKind::kName: {
        if (t.text == "None" || t.text == "True" || t.text == "False") {
          auto e = make(ExprKind::kConstant, take());
          close(*e);
          return e;
        }
        if (is_keyword(t.text)) fail(t);
        auto e = make(ExprKind::kName, take());
        e->ident = t.text;
        e->ident_begin = t.begin;
        close(*e);
        return e;
      }
      case TokenKind::kNumber: {
        auto e = make(ExprKind::kConstant, take());
        close(*e);
        return e;
      }
      case TokenKind::kString: {
        auto e = make(ExprKind::kString, t);
        while (at(TokenKind::kString)) {
          const Token& s = take();
          if (s.fstring) {
            for (auto& name : fstring_names(s)) e->kids.push_back(std::move(name));
          }
        }
        close(*e);
        return e;
      }
      case TokenKind::kOp:
        if (t.text == "...") {
          auto e = make(ExprKind::kConstant, take());
          close(*e);
          return e;
        }
        if (t.text == "(") return paren_atom();
        if (t.text == "[") return list_atom();
        if (t.text == "{") return brace_atom();
        break;
      case TokenKind::kIndent:
        fail(t, "unexpected indent");
      default:
        break;
    }
    if (t.kind == TokenKind::kNewline || t.kind == TokenKind::kEnd) {
      fail(t, "invalid syntax");
    }
    fail(t);
  }

  ExprPtr paren_atom() {
    const Token& open = take();
    if (at_op(")")) {
      auto e = make(ExprKind::kTuple, open);
      take();
      close(*e);
      return e;
    }
    if (at_kw("yield")) {
      auto e = yield_expr();
      expect_op(")");
      return e;
    }
    auto first = star_named_expression();
    if (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
      if (first->kind == ExprKind::kStarred) fail_at(*first, "iterable unpacking cannot be used in comprehension");
      auto gen = make(ExprKind::kComprehension, open);
      gen->kids.push_back(std::move(first));
      comprehension_clauses(*gen);
      expect_op(")");
      close(*gen);
      return gen;
    }
    if (at_op(",")) {
      auto tuple = make(ExprKind::kTuple, open);
      tuple->kids.push_back(std::move(first));
      while (at_op(",")) {
        take();
        if (at_op(")")) break;
        tuple->kids.push_back(star_named_expression());
      }
      expect_op(")");
      close(*tuple);
      return tuple;
    }
    expect_op(")");
    if (first->kind == ExprKind::kStarred) fail_at(*first, "cannot use starred expression here");
    return first;
  }

  ExprPtr list_atom() {
    const Token& open = take();
    auto list = make(ExprKind::kList, open);
    if (at_op("]")) {
      take();
      close(*list);
      return list;
    }
    auto first = star_named_expression();
    if (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
      auto comp = make(ExprKind::kComprehension, open);
      comp->kids.push_back(std::move(first));
      comprehension_clauses(*comp);
      expect_op("]");
      close(*comp);
      return comp;
    }
    list->kids.push_back(std::move(first));
    while (at_op(",")) {
      take();
      if (at_op("]")) break;
      list->kids.push_back(star_named_expression());
    }
    expect_op("]");
    close(*list);
    return list;
  }

  ExprPtr brace_atom() {
    const Token& open = take();
    if (at_op("}")) {
      auto e = make(ExprKind::kDict, open);
      take();
      close(*e);
      return e;
    }
    auto dict_entry = [&](Expr& dict) {
      if (at_op("**")) {
        auto e = make(ExprKind::kDoubleStarred, take());
        e->kids.push_back(bitwise_or());
        close(*e);
        dict.kids.push_back(std::move(e));
        return;
      }
      dict.kids.push_back(expression());
      expect_op(":");
      dict.kids.push_back(expression());
    };
    if (at_op("**")) {
      auto dict = make(ExprKind::kDict, open);
      dict_entry(*dict);
      while (at_op(",")) {
        take();
        if (at_op("}")) break;
        dict_entry(*dict);
      }
      expect_op("}");
      close(*dict);
      return dict;
    }
    auto first = star_named_expression();
    if (at_op(":") && first->kind != ExprKind::kStarred) {
      take();
      auto value = expression();
      if (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
        auto comp = make(ExprKind::kComprehension, open);
        comp->kids.push_back(std::move(first));
        comp->kids.push_back(std::move(value));
        comprehension_clauses(*comp);
        expect_op("}");
        close(*comp);
        return comp;
      }
      auto dict = make(ExprKind::kDict, open);
      dict->kids.push_back(std::move(first));
      dict->kids.push_back(std::move(value));
      while (at_op(",")) {
        take();
        if (at_op("}")) break;
        dict_entry(*dict);
      }
      expect_op("}");
      close(*dict);
      return dict;
    }
    if (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
      auto comp = make(ExprKind::kComprehension, open);
      comp->kids.push_back(std::move(first));
      comprehension_clauses(*comp);
      expect_op("}");
      close(*comp);
      return comp;
    }
    auto set = make(ExprKind::kSet, open);
    set->kids.push_back(std::move(first));
    while (at_op(",")) {
      take();
      if (at_op("}")) break;
      set->kids.push_back(star_named_expression());
    }
    expect_op("}");
    close(*set);
    return set;
  }

  std::string_view src_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

// Splits a replacement field at its top-level conversion or format spec.
std::size_t field_expression_end(std::string_view field) {
  int depth = 0;
  char quote = 0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    char c = field[i];
    if (quote) {
      if (c == quote) quote = 0;
      continue;
    }
    if (c == '\'' || c == '"') {
      quote = c;
    } else if (c == '(' || c == '[' || c == '{') {
      ++depth;
    } else if (c == ')' || c == ']' || c == '}') {
      --depth;
    } else if (depth == 0 && c == '!' && (i + 1 >= field.size() || field[i + 1] != '=')) {
      return i;
    } else if (depth == 0 && c == ':') {
      return i;
    }
  }
  return field.size();
}

void scan_fields(std::string_view content, std::size_t base, int line, std::vector<ExprPtr>& out) {
  std::size_t i = 0;
  while (i < content.size()) {
    if (content[i] == '{') {
      if (i + 1 < content.size() && content[i + 1] == '{') {
        i += 2;
        continue;
      }
      int depth = 1;
      std::size_t j = i + 1;
      char quote = 0;
      while (j < content.size() && depth > 0) {
        char c = content[j];
        if (quote) {
          if (c == quote) quote = 0;
        } else if (c == '\'' || c == '"') {
          quote = c;
        } else if (c == '{') {
          ++depth;
        } else if (c == '}') {
          --depth;
        }
        if (depth > 0) ++j;
      }
      std::string_view field = content.substr(i + 1, j - i - 1);
      std::size_t expr_end = field_expression_end(field);
      std::string_view expr_text = field.substr(0, expr_end);
      try {
        auto tokens = tokenize(expr_text);
        for (std::size_t k = 0; k < tokens.size(); ++k) {
          const Token& t = tokens[k];
          if (t.kind != TokenKind::kName || is_keyword(t.text)) continue;
          if (k > 0 && tokens[k - 1].kind == TokenKind::kOp && tokens[k - 1].text == ".") continue;
          auto e = std::make_unique<Expr>(ExprKind::kName);
          e->ident = t.text;
          e->begin = base + i + 1 + t.begin;
          e->end = base + i + 1 + t.end;
          e->ident_begin = e->begin;
          e->line = e->end_line = line;
          out.push_back(std::move(e));
        }
      } catch (const ParseError&) {
        // Malformed fields are treated as opaque text.
      }
      if (expr_end < field.size()) {
        scan_fields(field.substr(expr_end), base + i + 1 + expr_end, line, out);
      }
      i = j + 1;
    } else {
      ++i;
    }
  }
}

}  // namespace

std::vector<ExprPtr> fstring_names(const Token& token) {
  std::vector<ExprPtr> out;
  std::string_view text = token.text;
  std::size_t q = text.find_first_of("'\"");
  if (q == std::string_view::npos) return out;
  char quote = text[q];
  std::size_t width = (text.size() >= q + 6 && text[q + 1] == quote && text[q + 2] == quote) ? 3 : 1;
  if (text.size() < q + 2 * width) return out;
  std::string_view content = text.substr(q + width, text.size() - q - 2 * width);
  scan_fields(content, token.begin + q + width, token.line, out);
  return out;
}

Module parse_module(std::string_view source) {
  Parser parser(source, tokenize(source));
  return parser.run();
}

}  // namespace evofuzz::pyast::detail

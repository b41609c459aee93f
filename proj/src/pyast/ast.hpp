#pragma once

#include <cstddef>
#include <memory>
#include <string_view>
#include <vector>

#include "pyast/lexer.hpp"

namespace evofuzz::pyast::detail {

enum class ExprKind {
  kName,
  kConstant,  // numbers, True/False/None, ...
  kString,    // one or more adjacent literals; f-string field names in kids
  kAttribute,
  kSubscript,
  kCall,
  kKeyword,       // name=value inside a call; ident = name
  kDoubleStarred, // **mapping inside a call or dict display
  kBinOp,
  kUnaryOp,
  kBoolOp,
  kCompare,
  kIfExp,
  kLambda,
  kTuple,
  kList,
  kSet,
  kDict,  // kids alternate key, value (key null for **)
  kComprehension,
  kStarred,
  kSlice,
  kNamedExpr,
  kAwait,
  kYield,
};

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Generator {
  ExprPtr target;
  ExprPtr iter;
  std::vector<ExprPtr> ifs;
};

struct Expr {
  ExprKind kind;
  std::size_t begin = 0;
  std::size_t end = 0;
  int line = 0;
  int end_line = 0;
  // kName: identifier. kAttribute: attribute name. kKeyword: argument name.
  // kNamedExpr: bound name.
  std::string_view ident;
  std::size_t ident_begin = 0;
  // kCall: kids[0] is the callee, then arguments in source order.
  // kComprehension: kids hold the element (or key and value).
  std::vector<ExprPtr> kids;
  std::vector<Generator> generators;
  std::size_t lparen = 0;  // kCall: offset of '('
  std::size_t rparen = 0;  // kCall: offset of ')'
  std::vector<std::string_view> params;  // kLambda parameter names

  explicit Expr(ExprKind k) : kind(k) {}
};

enum class StmtKind {
  kExpr,
  kAssign,
  kAugAssign,
  kAnnAssign,
  kPass,
  kBreak,
  kContinue,
  kReturn,
  kRaise,
  kGlobal,
  kNonlocal,
  kDel,
  kAssert,
  kImport,
  kImportFrom,
  kIf,
  kWhile,
  kFor,
  kTry,
  kWith,
  kFunctionDef,
  kClassDef,
};

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;
using Block = std::vector<StmtPtr>;

struct Handler {
  ExprPtr type;  // may be null
  std::string_view name;
};

struct Stmt {
  StmtKind kind;
  std::size_t begin = 0;
  std::size_t end = 0;
  int first_line = 0;
  int last_line = 0;
  int indent = 0;
  // Assign: one entry per `=`-separated target. AugAssign/AnnAssign: the
  // target. For/With: loop target / `as` targets (null when absent).
  // Del: deleted targets.
  std::vector<ExprPtr> targets;
  // Assign/AugAssign/AnnAssign/Expr/Return value, For iterable.
  ExprPtr value;
  // Other evaluated expressions in evaluation order: if/while tests, raise
  // and assert operands, with-item contexts (parallel to targets),
  // decorators, parameter defaults, class bases.
  std::vector<ExprPtr> exprs;
  // Names bound by imports, def/class names, global/nonlocal names.
  std::vector<std::string_view> bound_names;
  std::vector<std::string_view> params;  // def parameters
  // Compound bodies in source order. If: body, then one per elif/else.
  // Try: body, handlers..., else, finally.
  std::vector<Block> bodies;
  std::vector<Handler> handlers;  // Try: parallel to bodies[1..handlers.size()]

  explicit Stmt(StmtKind k) : kind(k) {}
};

struct Module {
  Block body;
  std::vector<Token> tokens;
};

// Parses a module. Throws ParseError.
Module parse_module(std::string_view source);

// Finds the names read inside f-string replacement fields. Offsets are
// absolute within the source the token came from.
std::vector<ExprPtr> fstring_names(const Token& token);

}  // namespace evofuzz::pyast::detail

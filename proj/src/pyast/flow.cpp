#include "pyast/flow.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace evofuzz::pyast {

ParseError::ParseError(SyntaxError error)
    : std::runtime_error(fmt::format("line {}:{}: {}", error.line, error.column, error.message)),
      error_(std::move(error)) {}

bool has_dotted_prefix(std::string_view name, std::string_view prefix) {
  if (prefix.empty() || !name.starts_with(prefix)) return false;
  return name.size() == prefix.size() || name[prefix.size()] == '.';
}

std::string canonical_tokens(std::string_view fragment) {
  std::string wrapped;
  wrapped.reserve(fragment.size() + 2);
  wrapped.push_back('(');
  wrapped.append(fragment);
  wrapped.push_back(')');
  std::string out;
  try {
    auto tokens = detail::tokenize(wrapped);
    bool prev_word = false;
    // Skip the synthetic parentheses and the trailing NEWLINE/END tokens.
    for (std::size_t i = 1; i + 1 < tokens.size(); ++i) {
      const auto& t = tokens[i];
      if (t.kind == detail::TokenKind::kNewline || t.kind == detail::TokenKind::kIndent ||
          t.kind == detail::TokenKind::kDedent || t.kind == detail::TokenKind::kEnd) {
        continue;
      }
      if (t.begin == wrapped.size() - 1) break;  // closing ')'
      bool word = t.kind == detail::TokenKind::kName || t.kind == detail::TokenKind::kNumber ||
                  t.kind == detail::TokenKind::kString;
      if (word && prev_word) out.push_back(' ');
      out.append(t.text);
      prev_word = word;
    }
    return out;
  } catch (const ParseError&) {
    // Not tokenizable on its own: collapse whitespace runs instead.
    bool in_space = false;
    for (char c : fragment) {
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        in_space = true;
        continue;
      }
      if (in_space && !out.empty()) out.push_back(' ');
      in_space = false;
      out.push_back(c);
    }
    return out;
  }
}

namespace detail {
namespace {

void merge(Frontier& into, const Frontier& from) {
  if (from.empty()) return;
  Frontier out;
  out.reserve(into.size() + from.size());
  std::set_union(into.begin(), into.end(), from.begin(), from.end(), std::back_inserter(out));
  into = std::move(out);
}

const Expr* root_of(const Expr& e) {
  const Expr* cur = &e;
  while (cur->kind == ExprKind::kAttribute || cur->kind == ExprKind::kSubscript) {
    cur = cur->kids[0].get();
  }
  return cur->kind == ExprKind::kName ? cur : nullptr;
}

}  // namespace

std::string dotted_name(const Expr& e) {
  if (e.kind == ExprKind::kName) return std::string(e.ident);
  if (e.kind == ExprKind::kAttribute) {
    auto base = dotted_name(*e.kids[0]);
    if (base.empty()) return {};
    base.push_back('.');
    base.append(e.ident);
    return base;
  }
  return {};
}

int longest_path(std::size_t node_count,
                 std::span<const std::pair<std::size_t, std::size_t>> edges) {
  std::vector<std::pair<std::size_t, std::size_t>> sorted(edges.begin(), edges.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });
  std::vector<int> best(node_count, 0);
  int depth = 0;
  // Edges point from lower to higher ids; sorting by consumer finalizes every
  // producer before it is read.
  for (const auto& [from, to] : sorted) {
    best[to] = std::max(best[to], best[from] + 1);
    depth = std::max(depth, best[to]);
  }
  return depth;
}

bool FlowWalker::is_library_name(std::string_view dotted) const {
  return std::any_of(prefixes_.begin(), prefixes_.end(),
                     [&](const std::string& p) { return has_dotted_prefix(dotted, p); });
}

void FlowWalker::run(const Block& module) {
  for (std::size_t i = 0; i < module.size(); ++i) {
    top_index_ = i;
    exec(*module[i]);
  }
}

void FlowWalker::exec_block(const Block& block) {
  for (const auto& s : block) exec(*s);
}

void FlowWalker::exec(const Stmt& s) {
  const StmtContext mine{{s.begin, s.end}, s.first_line, s.last_line, s.indent};
  ctx_ = mine;
  switch (s.kind) {
    case StmtKind::kExpr:
    case StmtKind::kReturn:
      if (s.value) eval(*s.value);
      break;
    case StmtKind::kAssign: {
      Frontier v = eval(*s.value);
      for (const auto& t : s.targets) bind(*t, v);
      break;
    }
    case StmtKind::kAugAssign: {
      Frontier v = eval(*s.value);
      const Expr& target = *s.targets[0];
      if (target.kind == ExprKind::kName) {
        merge(env_[target.ident], v);
      } else {
        bind(target, v);
      }
      break;
    }
    case StmtKind::kAnnAssign:
      if (s.value) bind(*s.targets[0], eval(*s.value));
      break;
    case StmtKind::kRaise:
    case StmtKind::kAssert:
      for (const auto& e : s.exprs) eval(*e);
      break;
    case StmtKind::kDel:
      for (const auto& t : s.targets) kill(*t);
      break;
    case StmtKind::kImport:
    case StmtKind::kImportFrom:
      for (auto name : s.bound_names) env_[name].clear();
      break;
    case StmtKind::kIf:
    case StmtKind::kWhile:
      for (std::size_t i = 0; i < s.bodies.size(); ++i) {
        if (i < s.exprs.size()) {
          ctx_ = mine;
          eval(*s.exprs[i]);
        }
        exec_block(s.bodies[i]);
      }
      break;
    case StmtKind::kFor: {
      Frontier it = eval(*s.value);
      bind(*s.targets[0], it);
      for (const auto& body : s.bodies) exec_block(body);
      break;
    }
    case StmtKind::kTry:
      for (std::size_t i = 0; i < s.bodies.size(); ++i) {
        if (i >= 1 && i - 1 < s.handlers.size()) {
          const Handler& h = s.handlers[i - 1];
          ctx_ = mine;
          if (h.type) eval(*h.type);
          if (!h.name.empty()) env_[h.name].clear();
        }
        exec_block(s.bodies[i]);
      }
      break;
    case StmtKind::kWith:
      for (std::size_t i = 0; i < s.exprs.size(); ++i) {
        Frontier v = eval(*s.exprs[i]);
        if (i < s.targets.size() && s.targets[i]) bind(*s.targets[i], v);
      }
      exec_block(s.bodies[0]);
      break;
    case StmtKind::kFunctionDef:
    case StmtKind::kClassDef: {
      for (const auto& e : s.exprs) eval(*e);
      auto saved = env_;
      for (auto p : s.params) env_[p].clear();
      exec_block(s.bodies[0]);
      env_ = std::move(saved);
      env_[s.bound_names[0]].clear();
      break;
    }
    case StmtKind::kPass:
    case StmtKind::kBreak:
    case StmtKind::kContinue:
    case StmtKind::kGlobal:
    case StmtKind::kNonlocal:
      break;
  }
}

void FlowWalker::bind(const Expr& target, const Frontier& value) {
  switch (target.kind) {
    case ExprKind::kName:
      env_[target.ident] = value;
      break;
    case ExprKind::kTuple:
    case ExprKind::kList:
      // Unpacking is not tracked: every element loses its definition.
      for (const auto& kid : target.kids) kill(*kid);
      break;
    case ExprKind::kStarred:
      kill(*target.kids[0]);
      break;
    case ExprKind::kAttribute:
    case ExprKind::kSubscript:
      merge_into_root(target, value);
      break;
    default:
      break;
  }
}

void FlowWalker::kill(const Expr& target) {
  switch (target.kind) {
    case ExprKind::kName:
      env_[target.ident].clear();
      break;
    case ExprKind::kTuple:
    case ExprKind::kList:
      for (const auto& kid : target.kids) kill(*kid);
      break;
    case ExprKind::kStarred:
      kill(*target.kids[0]);
      break;
    case ExprKind::kAttribute:
    case ExprKind::kSubscript:
      merge_into_root(target, {});
      break;
    default:
      break;
  }
}

void FlowWalker::merge_into_root(const Expr& target, const Frontier& value) {
  // Evaluate the object and index expressions for the calls they contain.
  for (const auto& kid : target.kids) eval(*kid);
  if (const Expr* root = root_of(target)) merge(env_[root->ident], value);
}

Frontier FlowWalker::eval(const Expr& e) {
  switch (e.kind) {
    case ExprKind::kName: {
      auto it = env_.find(e.ident);
      return it == env_.end() ? Frontier{} : it->second;
    }
    case ExprKind::kConstant:
      return {};
    case ExprKind::kCall:
      return eval_call(e);
    case ExprKind::kNamedExpr: {
      Frontier v = eval(*e.kids[0]);
      env_[e.ident] = v;
      return v;
    }
    case ExprKind::kLambda: {
      for (std::size_t i = 0; i + 1 < e.kids.size(); ++i) eval(*e.kids[i]);
      auto saved = env_;
      for (auto p : e.params) env_[p].clear();
      eval(*e.kids.back());
      env_ = std::move(saved);
      return {};
    }
    case ExprKind::kComprehension: {
      auto saved = env_;
      for (const auto& g : e.generators) {
        Frontier it = eval(*g.iter);
        if (g.target->kind == ExprKind::kName) {
          env_[g.target->ident] = it;
        } else {
          kill(*g.target);
        }
        for (const auto& cond : g.ifs) eval(*cond);
      }
      Frontier out;
      for (const auto& kid : e.kids) merge(out, eval(*kid));
      env_ = std::move(saved);
      return out;
    }
    default: {
      Frontier out;
      for (const auto& kid : e.kids) {
        if (kid) merge(out, eval(*kid));
      }
      return out;
    }
  }
}

Frontier FlowWalker::eval_call(const Expr& call) {
  const Expr& callee = *call.kids[0];
  std::string dotted = dotted_name(callee);
  bool library = false;
  bool is_method = false;
  std::string name;
  ByteRange name_span{callee.end, callee.end};
  Frontier inputs;

  if (!dotted.empty() && is_library_name(dotted)) {
    library = true;
    name = std::move(dotted);
    // Mask everything after the library root: find the attribute applied
    // directly to the root name.
    const Expr* cur = &callee;
    while (cur->kind == ExprKind::kAttribute && cur->kids[0]->kind != ExprKind::kName) {
      cur = cur->kids[0].get();
    }
    if (cur->kind == ExprKind::kAttribute) name_span = {cur->ident_begin, callee.end};
  } else if (callee.kind == ExprKind::kAttribute) {
    Frontier receiver = eval(*callee.kids[0]);
    if (!receiver.empty()) {
      library = true;
      is_method = true;
      std::string_view producer = nodes_[receiver.front()].callee;
      name = std::string(producer.substr(0, producer.find('.')));
      name.push_back('.');
      name.append(kMethodMarker);
      name.append(callee.ident);
      name_span = {callee.ident_begin, callee.end};
    }
    merge(inputs, receiver);
  } else {
    merge(inputs, eval(callee));
  }

  std::size_t last_arg_end = call.lparen + 1;
  for (std::size_t i = 1; i < call.kids.size(); ++i) {
    merge(inputs, eval(*call.kids[i]));
    last_arg_end = call.kids[i]->end;
  }
  if (!library) return inputs;

  CallSite site;
  site.callee = std::move(name);
  site.callee_span = {callee.begin, callee.end};
  site.arg_span = {call.lparen + 1, call.rparen};
  site.call_span = {call.begin, call.rparen + 1};
  site.name_span = name_span;
  site.first_line = call.line;
  site.last_line = call.end_line;
  site.normalized_args = canonical_tokens(site.arg_span.slice(src_));
  site.is_method = is_method;
  site.last_arg_end = last_arg_end;
  site.statement_span = ctx_.span;
  site.statement_first_line = ctx_.first_line;
  site.statement_last_line = ctx_.last_line;
  site.statement_indent = ctx_.indent;
  site.top_level_index = top_index_;

  std::size_t id = nodes_.size();
  nodes_.push_back(std::move(site));
  for (std::size_t producer : inputs) edges_.emplace_back(producer, id);
  return {id};
}

}  // namespace detail

std::vector<CallSite> find_calls(std::string_view source, std::span<const std::string> prefixes) {
  auto module = detail::parse_module(source);
  detail::FlowWalker walker(source, prefixes);
  walker.run(module.body);
  return std::move(walker.nodes());
}

DataflowGraph build_dataflow(std::string_view source, std::span<const std::string> prefixes) {
  auto module = detail::parse_module(source);
  detail::FlowWalker walker(source, prefixes);
  walker.run(module.body);
  DataflowGraph graph;
  graph.nodes = std::move(walker.nodes());
  graph.edges = std::move(walker.edges());
  std::sort(graph.edges.begin(), graph.edges.end());
  graph.edges.erase(std::unique(graph.edges.begin(), graph.edges.end()), graph.edges.end());
  graph.depth = detail::longest_path(graph.nodes.size(), graph.edges);
  return graph;
}

}  // namespace evofuzz::pyast

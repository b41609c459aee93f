#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "evofuzz/pyast.hpp"
#include "pyast/ast.hpp"

namespace evofuzz::pyast::detail {

// Producer node ids a value depends on; sorted, unique.
using Frontier = std::vector<std::size_t>;

// Straight-line def-use walk over a module. Library call sites become nodes
// in evaluation order; an edge (a, b) records that a value produced by call a
// reaches call b. Node ids increase along every edge, so the graph is a DAG.
class FlowWalker {
 public:
  FlowWalker(std::string_view source, std::span<const std::string> prefixes)
      : src_(source), prefixes_(prefixes) {}

  void run(const Block& module);

  std::vector<CallSite>& nodes() { return nodes_; }
  std::vector<std::pair<std::size_t, std::size_t>>& edges() { return edges_; }

 private:
  struct StmtContext {
    ByteRange span;
    int first_line = 0;
    int last_line = 0;
    int indent = 0;
  };

  void exec(const Stmt& s);
  void exec_block(const Block& block);
  Frontier eval(const Expr& e);
  Frontier eval_call(const Expr& call);
  void bind(const Expr& target, const Frontier& value);
  void kill(const Expr& target);
  void merge_into_root(const Expr& target, const Frontier& value);
  bool is_library_name(std::string_view dotted) const;

  std::string_view src_;
  std::span<const std::string> prefixes_;
  std::vector<CallSite> nodes_;
  std::vector<std::pair<std::size_t, std::size_t>> edges_;
  std::unordered_map<std::string_view, Frontier> env_;
  StmtContext ctx_;
  std::size_t top_index_ = 0;
};

// "a.b.c" for Name/Attribute chains; empty otherwise.
std::string dotted_name(const Expr& e);

int longest_path(std::size_t node_count, std::span<const std::pair<std::size_t, std::size_t>> edges);

}  // namespace evofuzz::pyast::detail

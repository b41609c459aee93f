#pragma once

// Random straight-line Python programs together with the ground truth the
// static analyses should recover. The generator tracks definitions itself,
// so the expected graph never comes from the parser under test.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace evofuzz::testkit {

struct ModelProgram {
  std::string source;
  std::size_t statements = 0;
  std::size_t call_count = 0;
  std::set<std::pair<std::size_t, std::size_t>> edges;  // (producer, consumer)
  std::vector<std::string> callees;                     // in evaluation order
  std::vector<std::string> census_keys;                 // callee + canonical args
};

// Longest path, in edges, by exhaustive depth-first search from every node.
inline int brute_force_longest_path(std::size_t nodes,
                                    const std::set<std::pair<std::size_t, std::size_t>>& edges) {
  std::vector<std::vector<std::size_t>> out(nodes);
  for (const auto& [a, b] : edges) out[a].push_back(b);
  std::function<int(std::size_t)> dfs = [&](std::size_t n) {
    int best = 0;
    for (std::size_t m : out[n]) best = std::max(best, 1 + dfs(m));
    return best;
  };
  int best = 0;
  for (std::size_t n = 0; n < nodes; ++n) best = std::max(best, dfs(n));
  return best;
}

inline int census_unique(const ModelProgram& p) {
  return static_cast<int>(std::set<std::string>(p.callees.begin(), p.callees.end()).size());
}

inline int census_repeats(const ModelProgram& p) {
  std::set<std::string> seen;
  int repeats = 0;
  for (const auto& k : p.census_keys) repeats += !seen.insert(k).second;
  return repeats;
}

class ProgramGenerator {
 public:
  explicit ProgramGenerator(unsigned seed) : rng_(seed) {}

  ModelProgram generate(std::size_t max_statements) {
    ModelProgram p;
    producers_.clear();
    model_ = &p;
    std::size_t n = pick(1, max_statements);
    for (std::size_t i = 0; i < n; ++i) statement();
    p.statements = n;
    p.call_count = p.callees.size();
    model_ = nullptr;
    return p;
  }

 private:
  struct Value {
    std::string text;
    std::set<std::size_t> producers;
  };

  std::size_t pick(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }

  bool chance(double p) { return std::uniform_real_distribution<double>(0, 1)(rng_) < p; }

  std::vector<std::string> defined() const {
    std::vector<std::string> names;
    for (const auto& [name, _] : producers_) names.push_back(name);
    return names;
  }

  std::vector<std::string> library_valued() const {
    std::vector<std::string> names;
    for (const auto& [name, prods] : producers_) {
      if (!prods.empty()) names.push_back(name);
    }
    return names;
  }

  std::size_t add_node(std::string callee, const std::string& args,
                       const std::set<std::size_t>& inputs) {
    std::size_t id = model_->callees.size();
    model_->census_keys.push_back(callee + "|" + args);
    model_->callees.push_back(std::move(callee));
    for (std::size_t producer : inputs) model_->edges.emplace(producer, id);
    return id;
  }

  Value argument(int depth) {
    auto names = defined();
    double r = std::uniform_real_distribution<double>(0, 1)(rng_);
    if (depth < 1 && r < 0.2) return call(depth + 1);
    if (!names.empty() && r < 0.75) {
      const auto& name = names[pick(0, names.size() - 1)];
      return {name, producers_.at(name)};
    }
    return {std::to_string(pick(1, 4)), {}};
  }

  // A library call; arguments are evaluated (and numbered) first.
  Value call(int depth) {
    static const std::vector<std::string> kCallees = {"torch.rand", "torch.log", "torch.abs",
                                                      "torch.exp",  "torch.mm",  "torch.sum"};
    auto receivers = library_valued();
    if (!receivers.empty() && chance(0.15)) {
      static const std::vector<std::string> kMethods = {"sum", "t", "abs"};
      const auto& recv = receivers[pick(0, receivers.size() - 1)];
      const auto& method = kMethods[pick(0, kMethods.size() - 1)];
      std::size_t id = add_node("torch.·" + method, "", producers_.at(recv));
      return {recv + "." + method + "()", {id}};
    }
    const auto& callee = kCallees[pick(0, kCallees.size() - 1)];
    std::size_t argc = pick(1, 2);
    std::vector<Value> args;
    for (std::size_t i = 0; i < argc; ++i) args.push_back(argument(depth));
    std::string spaced, canonical;
    std::set<std::size_t> inputs;
    for (std::size_t i = 0; i < args.size(); ++i) {
      spaced += (i ? ", " : "") + args[i].text;
      canonical += (i ? "," : "") + canonical_text(args[i].text);
      inputs.insert(args[i].producers.begin(), args[i].producers.end());
    }
    std::size_t id = add_node(callee, canonical, inputs);
    return {callee + "(" + spaced + ")", {id}};
  }

  static std::string canonical_text(const std::string& text) {
    std::string out;
    for (char c : text) {
      if (c != ' ') out.push_back(c);
    }
    return out;
  }

  void statement() {
    static const std::vector<std::string> kNames = {"a", "b", "c", "x", "y"};
    const auto& target = kNames[pick(0, kNames.size() - 1)];
    auto names = defined();
    double r = std::uniform_real_distribution<double>(0, 1)(rng_);
    std::string line;
    if (r < 0.65) {
      auto v = call(0);
      line = target + " = " + v.text;
      producers_[target] = v.producers;
    } else if (r < 0.8 && !names.empty()) {
      const auto& src = names[pick(0, names.size() - 1)];
      line = target + " = " + src + " + 1";
      producers_[target] = producers_.at(src);
    } else if (r < 0.9) {
      line = target + " = " + std::to_string(pick(0, 9));
      producers_[target] = {};
    } else {
      line = call(0).text;
    }
    model_->source += line + "\n";
  }

  std::mt19937 rng_;
  std::map<std::string, std::set<std::size_t>> producers_;
  ModelProgram* model_ = nullptr;
};

}  // namespace evofuzz::testkit

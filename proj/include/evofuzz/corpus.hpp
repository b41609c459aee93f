#pragma once

// Program records, normalization and the fitness-indexed seed bank.

#include <cstdint>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "evofuzz/api_target.hpp"
#include "evofuzz/operator_id.hpp"
#include "evofuzz/rng.hpp"

namespace evofuzz {

enum class Validity { kUnknown, kParseError, kRuntimeError, kValidNoTargetCall, kValid };

std::string_view to_string(Validity validity);
Validity validity_from_string(std::string_view text);

// Fitness of a program: D + U - R over its library calls.
struct FitnessScore {
  int depth = 0;         // D: longest dataflow path, in edges
  int unique_calls = 0;  // U: distinct library callees
  int repeats = 0;       // R: call sites repeating an earlier (callee, args) pair
  int total = 0;         // D + U - R

  static FitnessScore make(int depth, int unique_calls, int repeats) {
    return {depth, unique_calls, repeats, depth + unique_calls - repeats};
  }
  bool operator==(const FitnessScore&) const = default;
};

struct Provenance {
  enum class Kind { kSeed, kMutant };

  Kind kind = Kind::kSeed;
  OperatorId op = OperatorId::kArgument;  // meaningful for mutants only
  std::string parent_hash;                // empty for seeds

  static Provenance seed() { return {}; }
  static Provenance mutant(OperatorId op, std::string parent_hash) {
    return {Kind::kMutant, op, std::move(parent_hash)};
  }
  bool is_seed() const { return kind == Kind::kSeed; }
  bool operator==(const Provenance&) const = default;
};

struct TestProgram {
  std::string source;
  ApiTarget target;
  std::string norm_hash;
  FitnessScore fitness;
  Validity validity = Validity::kUnknown;
  Provenance provenance;

  // Builds a record with norm_hash computed from the source.
  static TestProgram make(std::string source, ApiTarget target,
                          Provenance provenance = Provenance::seed());
};

namespace corpus {

// Strips comments, trailing whitespace and blank lines outside string
// literals; lines are joined with '\n' and no trailing newline is kept.
std::string normalize(std::string_view source);

// Hex SHA-256 of normalize(source).
std::string norm_hash(std::string_view source);

inline constexpr std::size_t kDefaultTopN = 10;

class EmptyBankError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SeedBank {
 public:
  // Adds the program unless its norm_hash is already present. Valid programs
  // join the fitness index. Returns true iff the program was new.
  bool insert(TestProgram program);

  bool contains(std::string_view hash) const;
  const TestProgram* find(std::string_view hash) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t valid_count() const { return index_.size(); }

  // All entries in insertion order.
  const std::vector<TestProgram>& entries() const { return entries_; }

  // Valid entries ordered by fitness total descending, newest first on ties.
  std::vector<const TestProgram*> fitness_order() const;

  // The first `n` entries of fitness_order().
  std::vector<const TestProgram*> top(std::size_t n) const;

  // Samples one of the top_n valid entries with probability proportional to
  // exp(fitness.total). Throws EmptyBankError when no entry is valid.
  const TestProgram& select_seed(std::size_t top_n, Rng& rng) const;

 private:
  struct IndexKey {
    int total;
    std::size_t sequence;
    // Highest total first; for equal totals the most recent insertion first.
    bool operator<(const IndexKey& other) const {
      if (total != other.total) return total > other.total;
      return sequence > other.sequence;
    }
  };

  std::vector<TestProgram> entries_;
  std::unordered_map<std::string, std::size_t> by_hash_;
  std::set<IndexKey> index_;
};

// Softmax weights (temperature 1) over the given fitness totals.
std::vector<double> softmax(const std::vector<int>& totals);

// Writes <dir>/<hash>.py per entry and <dir>/manifest.jsonl in insertion
// order. Creates the directory if needed.
void save_bank(const SeedBank& bank, const std::filesystem::path& dir);

// Reads a directory written by save_bank. Throws std::runtime_error on a
// malformed manifest or missing program file.
SeedBank load_bank(const std::filesystem::path& dir, const ApiTarget& target);

}  // namespace corpus
}  // namespace evofuzz

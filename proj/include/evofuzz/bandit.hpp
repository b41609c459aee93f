#pragma once

// Beta-Bernoulli Thompson sampling over mutation operators.

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "evofuzz/operator_id.hpp"
#include "evofuzz/rng.hpp"

namespace evofuzz::bandit {

// Beta(S, F) posterior of one arm plus bookkeeping for reports.
struct ArmStats {
  std::uint64_t successes = 1;  // S = 1 + observed successes
  std::uint64_t failures = 1;   // F = 1 + observed failures
  std::uint64_t pulls = 0;      // times the arm was selected

  double mean() const {
    return static_cast<double>(successes) / static_cast<double>(successes + failures);
  }
  bool operator==(const ArmStats&) const = default;
};

// Thompson sampling over an arbitrary number of Bernoulli arms.
class BetaBernoulliBandit {
 public:
  explicit BetaBernoulliBandit(std::size_t arms) : arms_(arms) {}

  std::size_t size() const { return arms_.size(); }
  const ArmStats& arm(std::size_t i) const { return arms_.at(i); }

  // Draws theta_i ~ Beta(S_i, F_i) from `beta(S, F)` for every arm and
  // returns the first index of the largest draw. Does not count a pull.
  template <typename BetaSource>
  std::size_t sample_argmax(BetaSource&& beta) const {
    std::size_t best = 0;
    double best_theta = -1.0;
    for (std::size_t i = 0; i < arms_.size(); ++i) {
      double theta = beta(static_cast<double>(arms_[i].successes),
                          static_cast<double>(arms_[i].failures));
      if (theta > best_theta) {
        best_theta = theta;
        best = i;
      }
    }
    return best;
  }

  // sample_argmax with the rng, counting a pull on the chosen arm.
  std::size_t select(Rng& rng);

  void record_pull(std::size_t arm) { ++arms_.at(arm).pulls; }
  void update(std::size_t arm, std::uint64_t successes, std::uint64_t failures);

 private:
  std::vector<ArmStats> arms_;
};

// Per-operator posterior state of one campaign.
class OperatorStats {
 public:
  // Every operator at Beta(1, 1).
  OperatorStats() = default;

  const ArmStats& operator[](OperatorId op) const { return arms_[index(op)]; }

  void record_pull(OperatorId op) { ++arms_[index(op)].pulls; }
  void update(OperatorId op, std::uint64_t num_valid, std::uint64_t num_invalid);

  template <typename BetaSource>
  OperatorId sample_argmax(BetaSource&& beta) const {
    OperatorId best = kAllOperators[0];
    double best_theta = -1.0;
    for (auto op : kAllOperators) {
      const auto& a = arms_[index(op)];
      double theta = beta(static_cast<double>(a.successes), static_cast<double>(a.failures));
      if (theta > best_theta) {
        best_theta = theta;
        best = op;
      }
    }
    return best;
  }

  bool operator==(const OperatorStats&) const = default;

 private:
  static std::size_t index(OperatorId op) { return static_cast<std::size_t>(to_code(op)); }
  std::array<ArmStats, kOperatorCount> arms_{};
};

OperatorStats init_prior();

// Draws theta_m ~ Beta(S_m, F_m) per operator from the rng and returns the
// argmax. Deterministic given the rng state.
OperatorId select_operator(const OperatorStats& stats, Rng& rng);

// Returns a copy of `stats` with S += num_valid and F += num_invalid on `op`.
OperatorStats update_posterior(OperatorStats stats, OperatorId op, std::uint64_t num_valid,
                               std::uint64_t num_invalid);

}  // namespace evofuzz::bandit

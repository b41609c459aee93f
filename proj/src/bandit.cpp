#include "evofuzz/bandit.hpp"

namespace evofuzz::bandit {

std::size_t BetaBernoulliBandit::select(Rng& rng) {
  auto arm = sample_argmax([&](double a, double b) { return rng.beta(a, b); });
  record_pull(arm);
  return arm;
}

void BetaBernoulliBandit::update(std::size_t arm, std::uint64_t successes,
                                 std::uint64_t failures) {
  auto& a = arms_.at(arm);
  a.successes += successes;
  a.failures += failures;
}

void OperatorStats::update(OperatorId op, std::uint64_t num_valid, std::uint64_t num_invalid) {
  auto& a = arms_[index(op)];
  a.successes += num_valid;
  a.failures += num_invalid;
}

OperatorStats init_prior() { return OperatorStats{}; }

OperatorId select_operator(const OperatorStats& stats, Rng& rng) {
  return stats.sample_argmax([&](double a, double b) { return rng.beta(a, b); });
}

OperatorStats update_posterior(OperatorStats stats, OperatorId op, std::uint64_t num_valid,
                               std::uint64_t num_invalid) {
  stats.update(op, num_valid, num_invalid);
  return stats;
}

}  // namespace evofuzz::bandit

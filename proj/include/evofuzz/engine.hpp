#pragma once

// The evolutionary fuzzing loop and multi-API orchestration.

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "evofuzz/api_target.hpp"
#include "evofuzz/bandit.hpp"
#include "evofuzz/corpus.hpp"
#include "evofuzz/executor.hpp"
#include "evofuzz/genbackend.hpp"
#include "evofuzz/oracle.hpp"
#include "evofuzz/seedgen.hpp"
#include "json.hpp"

namespace evofuzz::engine {

enum class Mode { kFull, kSeedOnly, kStaticOnly };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view text);

struct CampaignConfig {
  std::chrono::milliseconds budget_per_api{60000};
  // Optional cap on loop iterations; with it, runs are reproducible
  // regardless of machine speed.
  std::optional<std::uint64_t> max_iterations;
  std::size_t top_n = corpus::kDefaultTopN;
  genbackend::SamplingParams seed_params = genbackend::SamplingParams::seed_defaults();
  genbackend::SamplingParams mutant_params = genbackend::SamplingParams::infill_defaults();
  std::chrono::milliseconds exec_timeout{10000};
  oracle::ToleranceSpec tolerance;
  oracle::Allowlist allowlist;
  std::uint64_t rng_seed = 0;
  Mode mode = Mode::kFull;
  // Count a valid sample as a success only when it is also new.
  bool dedup_aware_reward = true;
  std::size_t snapshot_cap = oracle::kDefaultSnapshotCap;
  // Where programs are written for execution; defaults to a temp directory.
  std::filesystem::path scratch_dir;

  // Throws std::invalid_argument on non-positive durations, top_n == 0 or
  // invalid sampling parameters / tolerances.
  void validate() const;
};

// Per-operator outcome counts; successes and failures mirror the posterior.
struct OperatorTally {
  std::uint64_t pulls = 0;
  std::uint64_t inapplicable = 0;
  std::uint64_t successes = 0;
  std::uint64_t failures = 0;
  std::uint64_t valid_new = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t invalid = 0;
};

struct CampaignCounts {
  std::uint64_t seed_completions = 0;
  std::uint64_t seeds_kept = 0;  // seeds inserted into the bank as valid
  std::uint64_t seeds_invalid = 0;
  std::uint64_t iterations = 0;
  std::uint64_t samples_generated = 0;
  std::uint64_t valid_unique = 0;
  std::uint64_t invalid = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t inapplicable = 0;
  std::uint64_t backend_errors = 0;
  std::uint64_t exec_errors = 0;
  std::uint64_t oracle_runs = 0;
  std::uint64_t inconclusive = 0;
};

struct Timing {
  double backend_ms = 0.0;
  double exec_ms = 0.0;
  double analysis_ms = 0.0;
  double total_ms = 0.0;
};

struct BugFinding {
  std::string program_hash;
  oracle::DiffVerdict verdict;
};

struct CampaignReport {
  ApiTarget target;
  Mode mode = Mode::kFull;
  CampaignCounts counts;
  bandit::OperatorStats operator_stats;
  std::array<OperatorTally, kOperatorCount> tallies{};
  std::vector<BugFinding> findings;
  std::vector<std::string> notes;
  std::optional<std::string> error;
  Timing timing;
  oracle::ToleranceSpec tolerance;
  corpus::SeedBank bank;

  std::size_t bug_count() const;
};

// Seeds from the backend (or `seeds` when given), then the evolutionary
// loop until the budget or the iteration cap is reached. `executor` is
// required in full mode and optional otherwise. Backend and executor
// failures are counted and never abort the campaign.
CampaignReport run_campaign(const ApiTarget& target, const CampaignConfig& config,
                            genbackend::Backend& backend, Executor* executor,
                            std::optional<std::vector<TestProgram>> seeds = std::nullopt);

struct SuiteReport {
  std::vector<CampaignReport> campaigns;  // sorted by API name
  std::vector<std::string> warnings;

  std::size_t bug_count() const;
};

// Independent campaigns with at most `parallelism` running at once.
// Duplicate API names are dropped with a warning.
SuiteReport run_suite(std::vector<ApiTarget> targets, const CampaignConfig& config,
                      std::size_t parallelism, genbackend::Backend& backend, Executor* executor);

// Report JSON; timing figures sit under the "timing" key.
nlohmann::ordered_json to_json(const CampaignReport& report);

// Writes <out>/<api>/ (corpus, manifest.jsonl, report.json),
// <out>/reports.jsonl and <out>/summary.txt.
void write_outputs(const SuiteReport& suite, const std::filesystem::path& out);

std::string render_summary(const SuiteReport& suite);

// Process exit code for a finished suite: 2 when bugs were found, else 0.
int exit_code(const SuiteReport& suite);

// Re-runs the differential check on every valid program in a saved corpus.
std::vector<BugFinding> recheck_corpus(const corpus::SeedBank& bank, const CampaignConfig& config,
                                       Executor& executor, CampaignCounts& counts);

}  // namespace evofuzz::engine

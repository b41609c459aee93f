#include <fstream>
#include <map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>
#include <unistd.h>

#include "evofuzz/digest.hpp"
#include "evofuzz/engine.hpp"
#include "evofuzz/fitness.hpp"
#include "evofuzz/mutator.hpp"
#include "evofuzz/pyast.hpp"

namespace evofuzz::engine {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

class Campaign {
 public:
  Campaign(const ApiTarget& target, const CampaignConfig& config, genbackend::Backend& backend,
           Executor* executor)
      : target_(target),
        config_(config),
        backend_(backend),
        executor_(executor),
        prefixes_(library_prefixes(target)),
        rng_(Rng::derive_seed(config.rng_seed, fnv1a64(target.qualified_name))) {
    report_.target = target;
    report_.mode = config.mode;
    report_.tolerance = config.tolerance;
    scratch_ = config.scratch_dir.empty()
                   ? std::filesystem::temp_directory_path() / fmt::format("evofuzz-{}", getpid())
                   : config.scratch_dir;
  }

  CampaignReport run(std::optional<std::vector<TestProgram>> seeds) {
    auto start = Clock::now();
    deadline_ = start + config_.budget_per_api;
    if (!seeds) seeds = generate();
    admit_seeds(std::move(*seeds));
    if (config_.mode != Mode::kSeedOnly) loop();
    if (config_.mode == Mode::kFull && executor_) differential();
    report_.timing.total_ms = ms_since(start);
    return std::move(report_);
  }

 private:
  bool uses_execution() const {
    return executor_ != nullptr && config_.mode != Mode::kStaticOnly;
  }

  std::vector<TestProgram> generate() {
    auto t = Clock::now();
    auto result = seedgen::generate_seeds(target_, backend_, config_.seed_params);
    report_.timing.backend_ms += ms_since(t);
    report_.counts.seed_completions = result.stats.completions;
    if (result.error) {
      ++report_.counts.backend_errors;
      report_.notes.push_back("seed generation failed: " + *result.error);
    }
    return std::move(result.seeds);
  }

  // Executes on the cpu backend and maps the outcome to a validity.
  Validity execute_validity(const TestProgram& p) {
    auto t = Clock::now();
    auto report = execute(p, "cpu");
    report_.timing.exec_ms += ms_since(t);
    if (report.status == oracle::Status::kInfraError) ++report_.counts.exec_errors;
    if (report.status != oracle::Status::kOk) return Validity::kRuntimeError;
    cpu_reports_[p.norm_hash] = report;
    return report.target_invoked ? Validity::kValid : Validity::kValidNoTargetCall;
  }

  oracle::ExecutionReport execute(const TestProgram& p, const std::string& backend) {
    std::filesystem::create_directories(scratch_);
    auto path = scratch_ / (p.norm_hash + ".py");
    {
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      out << p.source;
    }
    ExecRequest req;
    req.program = path;
    req.backend = backend;
    req.target_api = target_.qualified_name;
    req.rng_seed = config_.rng_seed;
    req.snapshot_cap = config_.snapshot_cap;
    req.timeout = config_.exec_timeout;
    auto report = executor_->execute(req);
    std::error_code ec;
    std::filesystem::remove(path, ec);
    return report;
  }

  // Static checks passed; decide validity and compute fitness.
  void finish(TestProgram& p) {
    if (uses_execution()) {
      p.validity = execute_validity(p);
    } else {
      p.validity = Validity::kValid;
    }
    if (p.validity == Validity::kValid) {
      auto t = Clock::now();
      p.fitness = fitness::score(p.source, prefixes_);
      report_.timing.analysis_ms += ms_since(t);
    }
  }

  void admit_seeds(std::vector<TestProgram> seeds) {
    for (auto& s : seeds) {
      s.target = target_;
      s.provenance = Provenance::seed();
      if (s.norm_hash.empty()) s.norm_hash = corpus::norm_hash(s.source);
      if (report_.bank.contains(s.norm_hash)) continue;
      auto t = Clock::now();
      bool parses = !pyast::parse_check(s.source);
      report_.timing.analysis_ms += ms_since(t);
      if (!parses) {
        s.validity = Validity::kParseError;
      } else {
        finish(s);
      }
      bool valid = s.validity == Validity::kValid;
      if (report_.bank.insert(std::move(s))) {
        ++(valid ? report_.counts.seeds_kept : report_.counts.seeds_invalid);
      }
    }
    if (report_.counts.seeds_kept == 0) report_.notes.push_back("no-seeds");
  }

  bool budget_left() const {
    if (config_.max_iterations && report_.counts.iterations >= *config_.max_iterations) return false;
    return Clock::now() <= deadline_;
  }

  void loop() {
    while (budget_left()) {
      if (report_.bank.valid_count() == 0) break;
      // Copy: inserting below may reallocate the bank's storage.
      TestProgram parent = report_.bank.select_seed(config_.top_n, rng_);
      OperatorId op = bandit::select_operator(report_.operator_stats, rng_);
      report_.operator_stats.record_pull(op);
      auto& tally = report_.tallies[static_cast<std::size_t>(to_code(op))];
      ++tally.pulls;
      ++report_.counts.iterations;

      auto t = Clock::now();
      std::optional<mutator::MaskedProgram> masked;
      try {
        masked = mutator::apply_operator(op, parent, rng_);
      } catch (const mutator::MaskError& e) {
        spdlog::debug("{}: {} not applicable: {}", target_.qualified_name, to_string(op), e.what());
      }
      report_.timing.analysis_ms += ms_since(t);
      if (!masked) {
        ++tally.inapplicable;
        ++report_.counts.inapplicable;
        continue;
      }

      genbackend::InfillRequest request{masked->segments(), config_.mutant_params};
      std::vector<std::vector<std::string>> samples;
      t = Clock::now();
      try {
        samples = backend_.infill(request);
      } catch (const genbackend::BackendError& e) {
        report_.timing.backend_ms += ms_since(t);
        ++report_.counts.backend_errors;
        spdlog::warn("{}: infill failed: {}", target_.qualified_name, e.what());
        continue;
      }
      report_.timing.backend_ms += ms_since(t);

      std::uint64_t successes = 0;
      std::uint64_t failures = 0;
      for (const auto& fills : samples) {
        ++report_.counts.samples_generated;
        auto outcome = evaluate(*masked, fills, parent.norm_hash, op);
        switch (outcome) {
          case Outcome::kValidNew:
            ++successes;
            ++tally.valid_new;
            ++report_.counts.valid_unique;
            break;
          case Outcome::kDuplicate:
            ++(config_.dedup_aware_reward ? failures : successes);
            ++tally.duplicates;
            ++report_.counts.duplicates;
            break;
          case Outcome::kInvalid:
            ++failures;
            ++tally.invalid;
            ++report_.counts.invalid;
            break;
        }
      }
      report_.operator_stats.update(op, successes, failures);
      tally.successes += successes;
      tally.failures += failures;
    }
  }

  enum class Outcome { kValidNew, kDuplicate, kInvalid };

  Outcome evaluate(const mutator::MaskedProgram& masked, const std::vector<std::string>& fills,
                   const std::string& parent_hash, OperatorId op) {
    auto t = Clock::now();
    std::string filled = masked.fill(fills);
    auto pp = genbackend::postprocess(filled, genbackend::PostprocessMode::kMutant, target_);
    report_.timing.analysis_ms += ms_since(t);
    auto provenance = Provenance::mutant(op, parent_hash);
    if (!pp.accepted()) {
      auto p = TestProgram::make(std::move(filled), target_, provenance);
      p.validity = *pp.reason == genbackend::RejectReason::kNoTargetCall ? Validity::kValidNoTargetCall
                                                                         : Validity::kParseError;
      report_.bank.insert(std::move(p));
      return Outcome::kInvalid;
    }
    auto p = TestProgram::make(std::move(*pp.source), target_, provenance);
    if (const auto* existing = report_.bank.find(p.norm_hash)) {
      return existing->validity == Validity::kValid ? Outcome::kDuplicate : Outcome::kInvalid;
    }
    finish(p);
    bool valid = p.validity == Validity::kValid;
    report_.bank.insert(std::move(p));
    return valid ? Outcome::kValidNew : Outcome::kInvalid;
  }

  void differential() {
    for (const auto& p : report_.bank.entries()) {
      if (p.validity != Validity::kValid) continue;
      auto t = Clock::now();
      auto cpu_it = cpu_reports_.find(p.norm_hash);
      auto cpu = cpu_it != cpu_reports_.end() ? cpu_it->second : execute(p, "cpu");
      auto accel = execute(p, "accelerator");
      report_.timing.exec_ms += ms_since(t);
      ++report_.counts.oracle_runs;
      auto verdict = config_.allowlist.apply(oracle::compare(cpu, accel, config_.tolerance),
                                             target_.qualified_name);
      if (verdict.kind == oracle::VerdictKind::kInconclusive) {
        ++report_.counts.inconclusive;
        continue;
      }
      if (verdict.kind != oracle::VerdictKind::kConsistent) {
        report_.findings.push_back({p.norm_hash, std::move(verdict)});
      }
    }
  }

  const ApiTarget& target_;
  const CampaignConfig& config_;
  genbackend::Backend& backend_;
  Executor* executor_;
  std::vector<std::string> prefixes_;
  Rng rng_;
  std::filesystem::path scratch_;
  Clock::time_point deadline_;
  std::map<std::string, oracle::ExecutionReport> cpu_reports_;
  CampaignReport report_;
};

}  // namespace

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::kFull:
      return "full";
    case Mode::kSeedOnly:
      return "seed-only";
    case Mode::kStaticOnly:
      return "static-only";
  }
  return "full";
}

Mode mode_from_string(std::string_view text) {
  for (auto m : {Mode::kFull, Mode::kSeedOnly, Mode::kStaticOnly}) {
    if (to_string(m) == text) return m;
  }
  throw std::invalid_argument(fmt::format("unknown mode '{}'", text));
}

void CampaignConfig::validate() const {
  if (budget_per_api.count() <= 0) throw std::invalid_argument("budget per API must be positive");
  if (exec_timeout.count() <= 0) throw std::invalid_argument("execution timeout must be positive");
  if (top_n < 1) throw std::invalid_argument("top-n must be at least 1");
  seed_params.validate();
  mutant_params.validate();
  tolerance.validate();
}

std::size_t CampaignReport::bug_count() const {
  std::size_t n = 0;
  for (const auto& f : findings) n += f.verdict.is_bug();
  return n;
}

CampaignReport run_campaign(const ApiTarget& target, const CampaignConfig& config,
                            genbackend::Backend& backend, Executor* executor,
                            std::optional<std::vector<TestProgram>> seeds) {
  config.validate();
  if (config.mode == Mode::kFull && executor == nullptr) {
    throw std::invalid_argument("full mode needs an executor");
  }
  Campaign campaign(target, config, backend, executor);
  return campaign.run(std::move(seeds));
}

std::vector<BugFinding> recheck_corpus(const corpus::SeedBank& bank, const CampaignConfig& config,
                                       Executor& executor, CampaignCounts& counts) {
  std::vector<BugFinding> findings;
  auto scratch = config.scratch_dir.empty()
                     ? std::filesystem::temp_directory_path() / fmt::format("evofuzz-{}", getpid())
                     : config.scratch_dir;
  std::filesystem::create_directories(scratch);
  for (const auto& p : bank.entries()) {
    if (p.validity != Validity::kValid) continue;
    auto path = scratch / (p.norm_hash + ".py");
    {
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      out << p.source;
    }
    ExecRequest req;
    req.program = path;
    req.target_api = p.target.qualified_name;
    req.rng_seed = config.rng_seed;
    req.snapshot_cap = config.snapshot_cap;
    req.timeout = config.exec_timeout;
    req.backend = "cpu";
    auto cpu = executor.execute(req);
    req.backend = "accelerator";
    auto accel = executor.execute(req);
    std::error_code ec;
    std::filesystem::remove(path, ec);
    ++counts.oracle_runs;
    auto verdict = config.allowlist.apply(oracle::compare(cpu, accel, config.tolerance),
                                          p.target.qualified_name);
    if (verdict.kind == oracle::VerdictKind::kInconclusive) {
      ++counts.inconclusive;
    } else if (verdict.kind != oracle::VerdictKind::kConsistent) {
      findings.push_back({p.norm_hash, std::move(verdict)});
    }
  }
  return findings;
}

}  // namespace evofuzz::engine

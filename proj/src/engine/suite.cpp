#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "evofuzz/engine.hpp"

namespace evofuzz::engine {
namespace {

nlohmann::ordered_json number_or_string(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

}  // namespace

std::size_t SuiteReport::bug_count() const {
  std::size_t n = 0;
  for (const auto& c : campaigns) n += c.bug_count();
  return n;
}

SuiteReport run_suite(std::vector<ApiTarget> targets, const CampaignConfig& config,
                      std::size_t parallelism, genbackend::Backend& backend, Executor* executor) {
  if (parallelism < 1) throw std::invalid_argument("parallelism must be at least 1");
  config.validate();
  SuiteReport suite;
  std::vector<ApiTarget> unique;
  std::set<std::string> seen;
  for (auto& t : targets) {
    if (!seen.insert(t.qualified_name).second) {
      auto msg = fmt::format("duplicate API '{}' ignored", t.qualified_name);
      spdlog::warn("{}", msg);
      suite.warnings.push_back(std::move(msg));
      continue;
    }
    unique.push_back(std::move(t));
  }
  std::sort(unique.begin(), unique.end(),
            [](const ApiTarget& a, const ApiTarget& b) { return a.qualified_name < b.qualified_name; });

  std::vector<std::optional<CampaignReport>> results(unique.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < unique.size(); i = next.fetch_add(1)) {
      try {
        results[i] = run_campaign(unique[i], config, backend, executor);
      } catch (const std::exception& e) {
        CampaignReport failed;
        failed.target = unique[i];
        failed.mode = config.mode;
        failed.tolerance = config.tolerance;
        failed.error = e.what();
        spdlog::error("campaign for {} failed: {}", unique[i].qualified_name, e.what());
        results[i] = std::move(failed);
      }
    }
  };
  std::size_t workers = std::min(parallelism, std::max<std::size_t>(unique.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& r : results) suite.campaigns.push_back(std::move(*r));
  return suite;
}

nlohmann::ordered_json to_json(const CampaignReport& r) {
  nlohmann::ordered_json j;
  j["api"] = r.target.qualified_name;
  j["library"] = to_string(r.target.library);
  j["mode"] = to_string(r.mode);
  const auto& c = r.counts;
  j["counts"] = {
      {"seed_completions", c.seed_completions}, {"seeds_kept", c.seeds_kept},
      {"seeds_invalid", c.seeds_invalid},       {"iterations", c.iterations},
      {"samples_generated", c.samples_generated}, {"valid_unique", c.valid_unique},
      {"invalid", c.invalid},                   {"duplicates", c.duplicates},
      {"inapplicable", c.inapplicable},         {"backend_errors", c.backend_errors},
      {"exec_errors", c.exec_errors},           {"oracle_runs", c.oracle_runs},
      {"inconclusive", c.inconclusive},         {"bank_size", r.bank.size()},
      {"bank_valid", r.bank.valid_count()}};
  auto ops = nlohmann::ordered_json::array();
  for (auto op : kAllOperators) {
    const auto& arm = r.operator_stats[op];
    const auto& t = r.tallies[static_cast<std::size_t>(to_code(op))];
    ops.push_back({{"operator", to_string(op)},
                   {"code", to_code(op)},
                   {"S", arm.successes},
                   {"F", arm.failures},
                   {"pulls", t.pulls},
                   {"inapplicable", t.inapplicable},
                   {"valid_new", t.valid_new},
                   {"duplicates", t.duplicates},
                   {"invalid", t.invalid}});
  }
  j["operators"] = std::move(ops);
  auto findings = nlohmann::ordered_json::array();
  for (const auto& f : r.findings) {
    findings.push_back({{"program", f.program_hash}, {"verdict", oracle::to_json(f.verdict)}});
  }
  j["findings"] = std::move(findings);
  j["bugs"] = r.bug_count();
  j["tolerance"] = {{"rtol", r.tolerance.rtol}, {"atol", r.tolerance.atol}};
  j["notes"] = r.notes;
  j["error"] = r.error ? nlohmann::ordered_json(*r.error) : nlohmann::ordered_json(nullptr);
  j["timing"] = {{"backend_ms", number_or_string(r.timing.backend_ms)},
                 {"exec_ms", number_or_string(r.timing.exec_ms)},
                 {"analysis_ms", number_or_string(r.timing.analysis_ms)},
                 {"total_ms", number_or_string(r.timing.total_ms)}};
  return j;
}

std::string render_summary(const SuiteReport& suite) {
  std::string out = fmt::format("{:<32} {:>6} {:>6} {:>8} {:>8} {:>8} {:>5}\n", "api", "seeds",
                                "iters", "samples", "unique", "invalid", "bugs");
  for (const auto& c : suite.campaigns) {
    out += fmt::format("{:<32} {:>6} {:>6} {:>8} {:>8} {:>8} {:>5}\n", c.target.qualified_name,
                       c.counts.seeds_kept, c.counts.iterations, c.counts.samples_generated,
                       c.counts.valid_unique, c.counts.invalid, c.bug_count());
    if (c.error) out += fmt::format("  error: {}\n", *c.error);
    for (const auto& f : c.findings) {
      out += fmt::format("  {} {}{} in {}\n", oracle::to_string(f.verdict.kind),
                         f.verdict.var.empty() ? f.verdict.detail : f.verdict.var,
                         f.verdict.informational ? " (informational)" : "", f.program_hash);
    }
  }
  for (const auto& w : suite.warnings) out += "warning: " + w + "\n";
  std::size_t covered = std::count_if(suite.campaigns.begin(), suite.campaigns.end(),
                                      [](const CampaignReport& c) { return c.bank.valid_count() > 0; });
  out += fmt::format("APIs covered: {}/{}; bugs: {}\n", covered, suite.campaigns.size(), suite.bug_count());
  return out;
}

void write_outputs(const SuiteReport& suite, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  std::ofstream agg(out / "reports.jsonl", std::ios::binary | std::ios::trunc);
  if (!agg) throw std::runtime_error("cannot write " + (out / "reports.jsonl").string());
  for (const auto& c : suite.campaigns) {
    auto dir = out / c.target.qualified_name;
    corpus::save_bank(c.bank, dir);
    auto j = to_json(c);
    std::ofstream rep(dir / "report.json", std::ios::binary | std::ios::trunc);
    rep << j.dump(2) << '\n';
    agg << j.dump() << '\n';
  }
  std::ofstream summary(out / "summary.txt", std::ios::binary | std::ios::trunc);
  summary << render_summary(suite);
}

int exit_code(const SuiteReport& suite) { return suite.bug_count() > 0 ? 2 : 0; }

}  // namespace evofuzz::engine

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "evofuzz/engine.hpp"
#include "evofuzz/seedgen.hpp"

namespace {

using namespace evofuzz;

constexpr int kConfigError = 1;

struct Options {
  std::string api_catalog;
  std::string apis;
  double budget_per_api = 60.0;
  std::uint64_t max_iterations = 0;
  int seeds_per_api = 25;
  std::size_t top_n = corpus::kDefaultTopN;
  int infill_samples = 5;
  std::string backend = "mock";
  std::string endpoint;
  std::string auth_token;
  std::string completion_model;
  std::string infill_model;
  double request_timeout = 60.0;
  std::string mock_fixtures;
  bool mock_synthesize = false;
  std::string mode = "full";
  std::uint64_t rng_seed = 0;
  std::string out = "evofuzz-out";
  std::size_t parallelism = 1;
  double exec_timeout = 10.0;
  double rtol = 1e-3;
  double atol = 1e-6;
  std::string allowlist;
  std::string shim;
  bool no_dedup_reward = false;
  bool dump_request = false;
  std::string log_level = "warn";
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    auto b = item.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    auto e = item.find_last_not_of(" \t\r");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::chrono::milliseconds seconds(double s, const char* what) {
  if (!(s > 0)) throw ConfigError(fmt::format("{} must be positive", what));
  return std::chrono::milliseconds(static_cast<long long>(s * 1000.0 + 0.5));
}

std::vector<ApiTarget> resolve_targets(const Options& o) {
  std::map<std::string, ApiTarget> catalog;
  std::vector<ApiTarget> catalog_order;
  if (!o.api_catalog.empty()) {
    for (auto& t : seedgen::load_catalog(o.api_catalog)) {
      catalog.emplace(t.qualified_name, t);
      catalog_order.push_back(t);
    }
  }
  if (o.apis.empty()) {
    if (catalog_order.empty()) throw ConfigError("no APIs given: use --apis or --api-catalog");
    return catalog_order;
  }
  std::vector<std::string> names;
  if (std::filesystem::is_regular_file(o.apis)) {
    std::ifstream in(o.apis);
    std::string line;
    while (std::getline(in, line)) {
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      for (auto& n : split(line, ',')) names.push_back(n);
    }
  } else {
    names = split(o.apis, ',');
  }
  std::vector<ApiTarget> out;
  for (const auto& n : names) {
    auto it = catalog.find(n);
    out.push_back(it != catalog.end() ? it->second : ApiTarget::make(n));
  }
  return out;
}

engine::CampaignConfig make_config(const Options& o) {
  engine::CampaignConfig c;
  c.budget_per_api = seconds(o.budget_per_api, "--budget-per-api");
  if (o.max_iterations > 0) c.max_iterations = o.max_iterations;
  c.top_n = o.top_n;
  c.seed_params.num_samples = o.seeds_per_api;
  c.mutant_params.num_samples = o.infill_samples;
  c.exec_timeout = seconds(o.exec_timeout, "--exec-timeout");
  c.tolerance = {o.rtol, o.atol};
  c.rng_seed = o.rng_seed;
  c.mode = engine::mode_from_string(o.mode);
  c.dedup_aware_reward = !o.no_dedup_reward;
  if (!o.allowlist.empty()) c.allowlist = oracle::Allowlist::load(o.allowlist);
  c.scratch_dir = std::filesystem::path(o.out) / ".scratch";
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

std::unique_ptr<genbackend::Backend> make_backend(const Options& o) {
  if (o.backend == "mock") {
    genbackend::MockOptions mo;
    mo.synthesize = o.mock_synthesize;
    if (o.mock_fixtures.empty()) return std::make_unique<genbackend::MockBackend>(mo);
    return std::make_unique<genbackend::MockBackend>(
        genbackend::MockBackend::from_directory(o.mock_fixtures, mo));
  }
  if (o.backend == "http") {
    if (o.endpoint.empty()) throw ConfigError("--backend http needs --endpoint");
    genbackend::HttpOptions ho;
    ho.endpoint = o.endpoint;
    ho.auth_token = o.auth_token;
    if (ho.auth_token.empty()) {
      if (const char* env = std::getenv("EVOFUZZ_AUTH_TOKEN")) ho.auth_token = env;
    }
    ho.completion_model = o.completion_model;
    ho.infill_model = o.infill_model;
    ho.timeout = seconds(o.request_timeout, "--request-timeout");
    try {
      return std::make_unique<genbackend::HttpBackend>(ho);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  throw ConfigError(fmt::format("unknown backend '{}' (expected mock or http)", o.backend));
}

std::unique_ptr<Executor> make_executor(const Options& o) {
  if (o.shim.empty()) return nullptr;
  return std::make_unique<SubprocessExecutor>(split(o.shim, ' '),
                                              std::filesystem::path(o.out) / ".scratch");
}

int run_fuzz(const Options& o, bool seed_only) {
  auto config = make_config(o);
  if (seed_only) config.mode = engine::Mode::kSeedOnly;
  auto targets = resolve_targets(o);
  auto backend = make_backend(o);
  if (o.dump_request) {
    for (const auto& t : targets) {
      std::cout << genbackend::to_json(seedgen::seed_request(t, config.seed_params)).dump() << '\n';
    }
    return 0;
  }
  auto executor = make_executor(o);
  if (config.mode == engine::Mode::kFull && !executor) {
    throw ConfigError("--mode full needs --shim (or use --mode static-only)");
  }
  auto suite = engine::run_suite(std::move(targets), config, o.parallelism, *backend, executor.get());
  engine::write_outputs(suite, o.out);
  std::error_code ec;
  std::filesystem::remove_all(config.scratch_dir, ec);
  std::cout << engine::render_summary(suite);
  return engine::exit_code(suite);
}

int run_oracle(const Options& o) {
  auto config = make_config(o);
  auto executor = make_executor(o);
  if (!executor) throw ConfigError("the oracle command needs --shim");
  std::ofstream results(std::filesystem::path(o.out) / "oracle.jsonl", std::ios::trunc);
  std::size_t bugs = 0;
  std::vector<std::filesystem::path> dirs;
  for (const auto& entry : std::filesystem::directory_iterator(o.out)) {
    if (entry.is_directory() && std::filesystem::exists(entry.path() / "manifest.jsonl")) {
      dirs.push_back(entry.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& dir : dirs) {
    auto target = ApiTarget::make(dir.filename().string());
    auto bank = corpus::load_bank(dir, target);
    engine::CampaignCounts counts;
    auto findings = engine::recheck_corpus(bank, config, *executor, counts);
    for (const auto& f : findings) {
      bugs += f.verdict.is_bug();
      nlohmann::ordered_json j;
      j["api"] = target.qualified_name;
      j["program"] = f.program_hash;
      j["verdict"] = oracle::to_json(f.verdict);
      results << j.dump() << '\n';
      std::cout << j.dump() << '\n';
    }
    std::cout << fmt::format("{}: {} programs checked, {} findings, {} inconclusive\n",
                             target.qualified_name, counts.oracle_runs, findings.size(),
                             counts.inconclusive);
  }
  std::error_code ec;
  std::filesystem::remove_all(config.scratch_dir, ec);
  return bugs > 0 ? 2 : 0;
}

int run_report(const Options& o) {
  auto path = std::filesystem::path(o.out) / "reports.jsonl";
  std::ifstream in(path);
  if (!in) throw ConfigError("no reports found at " + path.string());
  std::string line;
  std::size_t bugs = 0;
  std::cout << fmt::format("{:<32} {:>6} {:>6} {:>8} {:>8} {:>8} {:>5}\n", "api", "seeds", "iters",
                           "samples", "unique", "invalid", "bugs");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    const auto& c = j.at("counts");
    bugs += j.at("bugs").get<std::size_t>();
    std::cout << fmt::format("{:<32} {:>6} {:>6} {:>8} {:>8} {:>8} {:>5}\n",
                             j.at("api").get<std::string>(), c.at("seeds_kept").get<std::uint64_t>(),
                             c.at("iterations").get<std::uint64_t>(),
                             c.at("samples_generated").get<std::uint64_t>(),
                             c.at("valid_unique").get<std::uint64_t>(),
                             c.at("invalid").get<std::uint64_t>(), j.at("bugs").get<std::size_t>());
  }
  return bugs > 0 ? 2 : 0;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--api-catalog", o.api_catalog, "JSONL catalog of API names and signatures");
  cmd->add_option("--apis", o.apis, "File with API names, or a comma-separated list");
  cmd->add_option("--budget-per-api", o.budget_per_api, "Wall-clock budget per API in seconds");
  cmd->add_option("--max-iterations", o.max_iterations, "Iteration cap per API (0 = none)");
  cmd->add_option("--seeds-per-api", o.seeds_per_api, "Completions sampled per API");
  cmd->add_option("--top-n", o.top_n, "Seed-selection pool size");
  cmd->add_option("--infill-samples", o.infill_samples, "Infill samples per iteration");
  cmd->add_option("--backend", o.backend, "Generation backend: mock or http");
  cmd->add_option("--endpoint", o.endpoint, "HTTP backend URL");
  cmd->add_option("--auth-token", o.auth_token, "Bearer token (default: $EVOFUZZ_AUTH_TOKEN)");
  cmd->add_option("--completion-model", o.completion_model, "Model id for seed completion");
  cmd->add_option("--infill-model", o.infill_model, "Model id for infilling");
  cmd->add_option("--request-timeout", o.request_timeout, "Per-request timeout in seconds");
  cmd->add_option("--mock-fixtures", o.mock_fixtures, "Fixture directory for the mock backend");
  cmd->add_flag("--mock-synthesize", o.mock_synthesize, "Mock invents varied fills when no fixture matches");
  cmd->add_option("--mode", o.mode, "full, seed-only or static-only");
  cmd->add_option("--rng-seed", o.rng_seed, "Random seed");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--parallelism", o.parallelism, "Concurrent campaigns");
  cmd->add_option("--exec-timeout", o.exec_timeout, "Per-program execution timeout in seconds");
  cmd->add_option("--rtol", o.rtol, "Relative tolerance for the differential oracle");
  cmd->add_option("--atol", o.atol, "Absolute tolerance for the differential oracle");
  cmd->add_option("--allowlist", o.allowlist, "APIs whose divergences are informational");
  cmd->add_option("--shim", o.shim, "Executor command, e.g. \"python3 -m evofuzz_shim\"");
  cmd->add_flag("--no-dedup-reward", o.no_dedup_reward, "Reward valid duplicates too");
  cmd->add_option("--log-level", o.log_level, "trace, debug, info, warn, error or off");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evolutionary, model-guided fuzzer for Python library APIs"};
  app.require_subcommand(1);
  Options o;
  auto* seed = app.add_subcommand("seed", "Generate seed programs only");
  auto* fuzz = app.add_subcommand("fuzz", "Run the full fuzzing loop");
  auto* orc = app.add_subcommand("oracle", "Re-run differential checks on a saved corpus");
  auto* rep = app.add_subcommand("report", "Summarize the reports in an output directory");
  for (auto* cmd : {seed, fuzz, orc}) add_common(cmd, o);
  seed->add_flag("--dump-request", o.dump_request, "Print the completion requests and exit");
  rep->add_option("--out", o.out, "Output directory");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }
  try {
    spdlog::set_level(spdlog::level::from_str(o.log_level));
    if (seed->parsed()) return run_fuzz(o, true);
    if (fuzz->parsed()) return run_fuzz(o, false);
    if (orc->parsed()) return run_oracle(o);
    return run_report(o);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InvalidTarget& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
}

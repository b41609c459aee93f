#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "evofuzz/digest.hpp"
#include "evofuzz/genbackend.hpp"
#include "evofuzz/rng.hpp"

namespace evofuzz::genbackend {
namespace {

bool is_keyword(std::string_view w) {
  static const std::set<std::string_view> kw = {
      "False", "None",   "True",  "and",    "as",     "assert", "async",    "await",
      "break", "class",  "continue", "def", "del",    "elif",   "else",     "except",
      "finally", "for",  "from",  "global", "if",     "import", "in",       "is",
      "lambda", "nonlocal", "not", "or",    "pass",   "raise",  "return",   "try",
      "while", "with",   "yield"};
  return kw.count(w) > 0;
}

// Identifiers, call names, numbers and statement lines found in the literal
// parts of a masked program.
struct Context {
  std::vector<std::string> names;
  std::vector<std::string> callees;
  std::vector<std::string> numbers;
  std::vector<std::string> lines;
};

Context scan_context(const std::vector<Segment>& segments) {
  std::set<std::string> names, callees, numbers, lines;
  for (const auto& s : segments) {
    if (s.is_placeholder()) continue;
    const std::string& t = s.text;
    std::size_t i = 0;
    while (i < t.size()) {
      unsigned char c = static_cast<unsigned char>(t[i]);
      if (std::isalpha(c) || c == '_') {
        std::size_t j = i;
        while (j < t.size() && (std::isalnum(static_cast<unsigned char>(t[j])) || t[j] == '_')) ++j;
        std::string w = t.substr(i, j - i);
        bool after_dot = i > 0 && t[i - 1] == '.';
        bool before_call = j < t.size() && t[j] == '(';
        if (!is_keyword(w)) {
          if (before_call && after_dot) {
            callees.insert(w);
          } else if (!after_dot) {
            names.insert(w);
          }
        }
        i = j;
      } else if (std::isdigit(c)) {
        std::size_t j = i;
        while (j < t.size() && (std::isalnum(static_cast<unsigned char>(t[j])) || t[j] == '.')) ++j;
        numbers.insert(t.substr(i, j - i));
        i = j;
      } else {
        ++i;
      }
    }
    std::size_t start = 0;
    while (start < t.size()) {
      auto nl = t.find('\n', start);
      std::string line = t.substr(start, nl == std::string::npos ? std::string::npos : nl - start);
      start = nl == std::string::npos ? t.size() : nl + 1;
      auto b = line.find_first_not_of(" \t");
      if (b == std::string::npos) continue;
      line = line.substr(b);
      if (line.find('=') != std::string::npos && line.back() != ':' && line.back() != '(' &&
          line.back() != ',' && line.back() != '\\') {
        lines.insert(line);
      }
    }
  }
  if (numbers.empty()) numbers = {"1", "2", "3"};
  return {{names.begin(), names.end()},
          {callees.begin(), callees.end()},
          {numbers.begin(), numbers.end()},
          {lines.begin(), lines.end()}};
}

const std::string& pick(const std::vector<std::string>& pool, Rng& rng) {
  return pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))];
}

// True when only indentation separates the placeholder from a line start.
bool starts_line(std::string_view before) {
  auto nl = before.rfind('\n');
  auto tail = nl == std::string_view::npos ? before : before.substr(nl + 1);
  return tail.find_first_not_of(" \t") == std::string_view::npos;
}

}  // namespace

MockBackend::MockBackend(MockOptions options) : options_(std::move(options)) {}

MockBackend MockBackend::from_directory(const std::filesystem::path& dir, MockOptions options) {
  MockBackend backend(std::move(options));
  if (!std::filesystem::is_directory(dir)) {
    throw std::runtime_error("mock fixture directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    std::ifstream in(path);
    // Ordered parsing keeps the key order the digest was computed over.
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(fmt::format("{}: {}", path.string(), e.what()));
    }
    if (!j.contains("samples") || !j["samples"].is_array()) {
      throw std::runtime_error(path.string() + ": fixture has no \"samples\" array");
    }
    std::string digest = path.stem().string();
    if (j.contains("request")) {
      digest = request_digest(j["request"]);
    }
    backend.add_fixture(digest, nlohmann::json(j["samples"]));
  }
  return backend;
}

void MockBackend::add_fixture(const std::string& digest, nlohmann::json samples) {
  fixtures_[digest] = std::move(samples);
}

std::vector<std::string> MockBackend::complete(const CompletionRequest& request) {
  validate(request);
  auto digest = request_digest(request);
  auto it = fixtures_.find(digest);
  if (it == fixtures_.end()) {
    spdlog::debug("mock: no completion fixture for {}", digest);
    return {options_.default_fill};
  }
  std::vector<std::string> out;
  for (const auto& s : it->second) {
    if (out.size() >= static_cast<std::size_t>(request.params.num_samples)) break;
    out.push_back(s.get<std::string>());
  }
  return out;
}

std::vector<std::vector<std::string>> MockBackend::infill(const InfillRequest& request) {
  validate(request);
  auto digest = request_digest(request);
  auto expected = request.placeholder_count();
  auto it = fixtures_.find(digest);
  if (it != fixtures_.end()) {
    std::vector<std::vector<std::string>> samples;
    for (const auto& s : it->second) {
      if (samples.size() >= static_cast<std::size_t>(request.params.num_samples)) break;
      if (s.is_string()) {
        samples.push_back({s.get<std::string>()});
      } else {
        samples.push_back(s.get<std::vector<std::string>>());
      }
    }
    return keep_well_formed(std::move(samples), expected);
  }
  if (options_.synthesize) return synthesize(request, digest);
  std::vector<std::vector<std::string>> samples(
      static_cast<std::size_t>(request.params.num_samples),
      std::vector<std::string>(expected, options_.default_fill));
  return samples;
}

std::vector<std::vector<std::string>> MockBackend::synthesize(const InfillRequest& request,
                                                              const std::string& digest) const {
  auto ctx = scan_context(request.segments);
  const auto& segs = request.segments;
  std::vector<std::vector<std::string>> samples;
  for (int n = 0; n < request.params.num_samples; ++n) {
    Rng rng(Rng::derive_seed(fnv1a64(digest), static_cast<std::uint64_t>(n)));
    std::vector<std::string> fills(request.placeholder_count());
    for (std::size_t k = 0; k < segs.size(); ++k) {
      if (!segs[k].is_placeholder()) continue;
      std::string_view before = k > 0 && !segs[k - 1].is_placeholder() ? std::string_view(segs[k - 1].text) : "";
      std::string_view after =
          k + 1 < segs.size() && !segs[k + 1].is_placeholder() ? std::string_view(segs[k + 1].text) : "";
      bool next_is_placeholder = k + 1 < segs.size() && segs[k + 1].is_placeholder();
      std::string fill;
      if (!before.empty() && before.back() == '.') {
        fill = ctx.callees.empty() ? "abs" : pick(ctx.callees, rng);
      } else if (!before.empty() && before.back() == '=') {
        double r = rng.uniform();
        fill = r < 0.5 ? pick(ctx.numbers, rng) : (r < 0.75 || ctx.names.empty() ? "True" : pick(ctx.names, rng));
      } else if (after.starts_with("=") || next_is_placeholder) {
        static const std::vector<std::string> kNames = {"dim", "axis", "keepdim", "dtype", "alpha", "out"};
        fill = pick(kNames, rng);
      } else if (starts_line(before)) {
        fill = ctx.lines.empty() ? "pass" : pick(ctx.lines, rng);
      } else {
        auto count = rng.uniform_int(0, 3);
        std::vector<std::string> args;
        for (std::int64_t a = 0; a < count; ++a) {
          bool use_name = !ctx.names.empty() && rng.uniform() < 0.6;
          args.push_back(use_name ? pick(ctx.names, rng) : pick(ctx.numbers, rng));
        }
        fill = fmt::format("{}", fmt::join(args, ", "));
      }
      fills[segs[k].index] = std::move(fill);
    }
    samples.push_back(std::move(fills));
  }
  return samples;
}

}  // namespace evofuzz::genbackend

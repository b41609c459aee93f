#include "evofuzz/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "evofuzz/digest.hpp"
#include "json.hpp"

namespace evofuzz {

OperatorId operator_from_code(int code) {
  if (code < 0 || code >= static_cast<int>(kOperatorCount)) {
    throw std::out_of_range(fmt::format("operator code {} out of range", code));
  }
  return static_cast<OperatorId>(code);
}

std::string_view to_string(OperatorId op) {
  switch (op) {
    case OperatorId::kArgument:
      return "argument";
    case OperatorId::kKeyword:
      return "keyword";
    case OperatorId::kPrefix:
      return "prefix";
    case OperatorId::kSuffix:
      return "suffix";
    case OperatorId::kPrefixArgument:
      return "prefix-argument";
    case OperatorId::kSuffixArgument:
      return "suffix-argument";
    case OperatorId::kMethod:
      return "method";
  }
  return "argument";
}

OperatorId operator_from_string(std::string_view name) {
  for (auto op : kAllOperators) {
    if (to_string(op) == name) return op;
  }
  throw std::invalid_argument(fmt::format("unknown operator '{}'", name));
}

std::string_view to_string(Validity validity) {
  switch (validity) {
    case Validity::kUnknown:
      return "unknown";
    case Validity::kParseError:
      return "parse-error";
    case Validity::kRuntimeError:
      return "runtime-error";
    case Validity::kValidNoTargetCall:
      return "valid-no-target-call";
    case Validity::kValid:
      return "valid";
  }
  return "unknown";
}

Validity validity_from_string(std::string_view text) {
  for (auto v : {Validity::kUnknown, Validity::kParseError, Validity::kRuntimeError,
                 Validity::kValidNoTargetCall, Validity::kValid}) {
    if (to_string(v) == text) return v;
  }
  throw std::invalid_argument(fmt::format("unknown validity '{}'", text));
}

TestProgram TestProgram::make(std::string source, ApiTarget target, Provenance provenance) {
  TestProgram p;
  p.norm_hash = corpus::norm_hash(source);
  p.source = std::move(source);
  p.target = std::move(target);
  p.provenance = std::move(provenance);
  return p;
}

namespace corpus {
namespace {

// Scanner state carried across physical lines.
struct StringState {
  char quote = 0;       // 0 when outside a literal
  bool triple = false;
};

std::string_view rstrip(std::string_view s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' ||
                        s.back() == '\f' || s.back() == '\v')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

std::string normalize(std::string_view source) {
  std::vector<std::string> out;
  StringState st;
  std::size_t i = 0;
  const std::size_t n = source.size();
  while (i <= n) {
    bool started_in_string = st.quote != 0;
    std::string line;
    bool at_eof = true;
    while (i < n) {
      char c = source[i];
      if (st.quote) {
        if (c == '\\' && i + 1 < n) {
          line.push_back(c);
          if (source[i + 1] == '\n') {
            i += 2;
            at_eof = false;
            break;
          }
          line.push_back(source[i + 1]);
          i += 2;
          continue;
        }
        if (c == '\n') {
          if (!st.triple) st.quote = 0;  // unterminated single-line literal
          at_eof = false;
          ++i;
          break;
        }
        if (c == st.quote) {
          if (!st.triple) {
            st.quote = 0;
            line.push_back(c);
            ++i;
            continue;
          }
          if (i + 2 < n && source[i + 1] == c && source[i + 2] == c) {
            st.quote = 0;
            line.append(3, c);
            i += 3;
            continue;
          }
        }
        line.push_back(c);
        ++i;
        continue;
      }
      if (c == '\n') {
        at_eof = false;
        ++i;
        break;
      }
      if (c == '#') {
        while (i < n && source[i] != '\n') ++i;
        continue;
      }
      if (c == '\'' || c == '"') {
        st.quote = c;
        st.triple = i + 2 < n && source[i + 1] == c && source[i + 2] == c;
        std::size_t len = st.triple ? 3 : 1;
        line.append(source.substr(i, len));
        i += len;
        continue;
      }
      line.push_back(c);
      ++i;
    }
    bool ends_in_string = st.quote != 0;
    if (started_in_string || ends_in_string) {
      // Part of a multi-line literal: only the code after it may be trimmed.
      out.push_back(ends_in_string ? line : std::string(rstrip(line)));
    } else {
      auto trimmed = rstrip(line);
      bool blank = std::all_of(trimmed.begin(), trimmed.end(),
                               [](char c) { return c == ' ' || c == '\t' || c == '\f'; });
      if (!blank) out.emplace_back(trimmed);
    }
    if (at_eof) break;
  }
  std::string result;
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (k) result.push_back('\n');
    result += out[k];
  }
  return result;
}

std::string norm_hash(std::string_view source) { return sha256_hex(normalize(source)); }

bool SeedBank::insert(TestProgram program) {
  if (program.norm_hash.empty()) program.norm_hash = norm_hash(program.source);
  if (by_hash_.count(program.norm_hash)) return false;
  std::size_t seq = entries_.size();
  by_hash_.emplace(program.norm_hash, seq);
  if (program.validity == Validity::kValid) index_.insert({program.fitness.total, seq});
  entries_.push_back(std::move(program));
  return true;
}

bool SeedBank::contains(std::string_view hash) const {
  return by_hash_.count(std::string(hash)) > 0;
}

const TestProgram* SeedBank::find(std::string_view hash) const {
  auto it = by_hash_.find(std::string(hash));
  return it == by_hash_.end() ? nullptr : &entries_[it->second];
}

std::vector<const TestProgram*> SeedBank::fitness_order() const { return top(index_.size()); }

std::vector<const TestProgram*> SeedBank::top(std::size_t n) const {
  std::vector<const TestProgram*> out;
  for (auto it = index_.begin(); it != index_.end() && out.size() < n; ++it) {
    out.push_back(&entries_[it->sequence]);
  }
  return out;
}

std::vector<double> softmax(const std::vector<int>& totals) {
  if (totals.empty()) return {};
  int best = *std::max_element(totals.begin(), totals.end());
  std::vector<double> w;
  w.reserve(totals.size());
  double sum = 0.0;
  for (int t : totals) {
    w.push_back(std::exp(static_cast<double>(t - best)));
    sum += w.back();
  }
  for (auto& x : w) x /= sum;
  return w;
}

const TestProgram& SeedBank::select_seed(std::size_t top_n, Rng& rng) const {
  if (index_.empty()) throw EmptyBankError("seed bank has no valid entries");
  auto candidates = top(std::max<std::size_t>(top_n, 1));
  std::vector<int> totals;
  for (const auto* c : candidates) totals.push_back(c->fitness.total);
  auto weights = softmax(totals);
  double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    acc += weights[k];
    if (u < acc) return *candidates[k];
  }
  return *candidates.back();
}

void save_bank(const SeedBank& bank, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.jsonl", std::ios::binary | std::ios::trunc);
  if (!manifest) throw std::runtime_error("cannot write " + (dir / "manifest.jsonl").string());
  for (const auto& p : bank.entries()) {
    std::ofstream file(dir / (p.norm_hash + ".py"), std::ios::binary | std::ios::trunc);
    file << p.source;
    nlohmann::ordered_json rec;
    rec["hash"] = p.norm_hash;
    rec["validity"] = to_string(p.validity);
    rec["D"] = p.fitness.depth;
    rec["U"] = p.fitness.unique_calls;
    rec["R"] = p.fitness.repeats;
    rec["total"] = p.fitness.total;
    rec["provenance"] = p.provenance.is_seed() ? "seed" : "mutant";
    if (p.provenance.is_seed()) {
      rec["parent"] = nullptr;
      rec["operator"] = nullptr;
    } else {
      rec["parent"] = p.provenance.parent_hash;
      rec["operator"] = to_code(p.provenance.op);
    }
    manifest << rec.dump() << '\n';
  }
}

SeedBank load_bank(const std::filesystem::path& dir, const ApiTarget& target) {
  std::ifstream manifest(dir / "manifest.jsonl", std::ios::binary);
  if (!manifest) throw std::runtime_error("cannot read " + (dir / "manifest.jsonl").string());
  SeedBank bank;
  std::string line;
  int lineno = 0;
  while (std::getline(manifest, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      auto rec = nlohmann::json::parse(line);
      TestProgram p;
      p.norm_hash = rec.at("hash").get<std::string>();
      std::ifstream file(dir / (p.norm_hash + ".py"), std::ios::binary);
      if (!file) throw std::runtime_error("missing program file for " + p.norm_hash);
      std::ostringstream buf;
      buf << file.rdbuf();
      p.source = buf.str();
      p.target = target;
      p.validity = validity_from_string(rec.at("validity").get<std::string>());
      p.fitness = FitnessScore::make(rec.at("D").get<int>(), rec.at("U").get<int>(),
                                     rec.at("R").get<int>());
      if (rec.at("provenance").get<std::string>() == "mutant") {
        p.provenance = Provenance::mutant(operator_from_code(rec.at("operator").get<int>()),
                                          rec.at("parent").get<std::string>());
      }
      bank.insert(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(fmt::format("{}:{}: {}", (dir / "manifest.jsonl").string(),
                                           lineno, e.what()));
    }
  }
  return bank;
}

}  // namespace corpus
}  // namespace evofuzz

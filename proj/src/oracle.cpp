#include "evofuzz/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <csignal>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace evofuzz::oracle {
namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

json encode_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double decode_number(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_boolean()) return j.get<bool>() ? 1.0 : 0.0;
  if (j.is_string()) {
    auto s = j.get<std::string>();
    if (s == "nan" || s == "NaN") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf" || s == "Infinity") return std::numeric_limits<double>::infinity();
    if (s == "-inf" || s == "-Infinity") return -std::numeric_limits<double>::infinity();
  }
  throw std::runtime_error("not a number: " + j.dump());
}

struct ElementDiff {
  bool mismatch = false;
  bool nan_mismatch = false;
  double max_abs = 0.0;
  double max_rel = 0.0;
};

void accumulate(ElementDiff& d, double x, double y, const ToleranceSpec& tol) {
  if (values_close(x, y, tol)) return;
  d.mismatch = true;
  if (std::isnan(x) != std::isnan(y)) {
    d.nan_mismatch = true;
    return;
  }
  double abs = std::fabs(x - y);
  double scale = std::max(std::fabs(x), std::fabs(y));
  double rel = scale > 0 ? abs / scale : abs;
  if (std::isnan(abs)) abs = std::numeric_limits<double>::infinity();
  if (std::isnan(rel)) rel = std::numeric_limits<double>::infinity();
  d.max_abs = std::max(d.max_abs, abs);
  d.max_rel = std::max(d.max_rel, rel);
}

std::string status_text(const ExecutionReport& r) {
  std::string s(to_string(r.status));
  if (!r.exc_type.empty()) s += "(" + r.exc_type + ")";
  return s;
}

DiffVerdict wrong(const ValueSnapshot& s, std::string detail) {
  DiffVerdict v;
  v.kind = VerdictKind::kWrongComputation;
  v.var = s.var;
  v.stmt = s.stmt;
  v.detail = std::move(detail);
  return v;
}

std::optional<DiffVerdict> compare_snapshot(const ValueSnapshot& a, const ValueSnapshot& b,
                                            const ToleranceSpec& tol) {
  if (a.kind != b.kind) {
    return wrong(a, fmt::format("kind {} vs {}", to_string(a.kind), to_string(b.kind)));
  }
  if (a.dtype != b.dtype) return wrong(a, fmt::format("dtype {} vs {}", a.dtype, b.dtype));
  if (a.shape != b.shape) {
    return wrong(a, fmt::format("shape [{}] vs [{}]", fmt::join(a.shape, ","),
                                fmt::join(b.shape, ",")));
  }
  if (a.kind == ValueKind::kOpaque) return std::nullopt;
  if (a.kind == ValueKind::kString) {
    if (a.text != b.text) return wrong(a, "string payload differs");
    return std::nullopt;
  }
  ElementDiff d;
  if (a.values && b.values) {
    if (a.values->size() != b.values->size()) {
      return wrong(a, fmt::format("{} vs {} elements", a.values->size(), b.values->size()));
    }
    for (std::size_t i = 0; i < a.values->size(); ++i) {
      accumulate(d, (*a.values)[i], (*b.values)[i], tol);
    }
  } else {
    // Either side may carry summary statistics; compare at that level.
    auto sa = a.stats ? *a.stats : SummaryStats::of(a.values.value_or(std::vector<double>{}));
    auto sb = b.stats ? *b.stats : SummaryStats::of(b.values.value_or(std::vector<double>{}));
    if (sa.count != sb.count || sa.inf_count != sb.inf_count) {
      return wrong(a, "summary counts differ");
    }
    if (sa.nan_count != sb.nan_count) {
      auto v = wrong(a, "NaN counts differ");
      v.nan_mismatch = true;
      return v;
    }
    accumulate(d, sa.min, sb.min, tol);
    accumulate(d, sa.max, sb.max, tol);
    accumulate(d, sa.mean, sb.mean, tol);
  }
  if (!d.mismatch) return std::nullopt;
  auto v = wrong(a, d.nan_mismatch ? "NaN pattern differs" : "values differ beyond tolerance");
  v.max_abs_diff = d.max_abs;
  v.max_rel_diff = d.max_rel;
  v.nan_mismatch = d.nan_mismatch;
  return v;
}

}  // namespace

std::string_view to_string(ValueKind kind) {
  switch (kind) {
    case ValueKind::kTensor:
      return "tensor";
    case ValueKind::kScalar:
      return "scalar";
    case ValueKind::kBool:
      return "bool";
    case ValueKind::kString:
      return "string";
    case ValueKind::kOpaque:
      return "opaque";
  }
  return "opaque";
}

ValueKind value_kind_from_string(std::string_view text) {
  for (auto k : {ValueKind::kTensor, ValueKind::kScalar, ValueKind::kBool, ValueKind::kString,
                 ValueKind::kOpaque}) {
    if (to_string(k) == text) return k;
  }
  throw std::runtime_error(fmt::format("unknown value kind '{}'", text));
}

std::string_view to_string(Status status) {
  switch (status) {
    case Status::kOk:
      return "ok";
    case Status::kPythonException:
      return "exception";
    case Status::kCrash:
      return "crash";
    case Status::kTimeout:
      return "timeout";
    case Status::kInfraError:
      return "infra-error";
  }
  return "ok";
}

Status status_from_string(std::string_view text) {
  for (auto s : {Status::kOk, Status::kPythonException, Status::kCrash, Status::kTimeout,
                 Status::kInfraError}) {
    if (to_string(s) == text) return s;
  }
  throw std::runtime_error(fmt::format("unknown status '{}'", text));
}

std::string_view to_string(VerdictKind kind) {
  switch (kind) {
    case VerdictKind::kConsistent:
      return "consistent";
    case VerdictKind::kWrongComputation:
      return "wrong-computation";
    case VerdictKind::kCrash:
      return "crash";
    case VerdictKind::kStatusDivergence:
      return "status-divergence";
    case VerdictKind::kInconclusive:
      return "inconclusive";
  }
  return "consistent";
}

std::string_view to_string(CrashKind kind) {
  switch (kind) {
    case CrashKind::kSegfault:
      return "segfault";
    case CrashKind::kAbort:
      return "abort";
    case CrashKind::kIllegalInstruction:
      return "illegal-instruction";
    case CrashKind::kBusError:
      return "bus-error";
    case CrashKind::kFloatingPoint:
      return "floating-point-exception";
    case CrashKind::kSignal:
      return "signal";
    case CrashKind::kAssert:
      return "assert";
  }
  return "signal";
}

SummaryStats SummaryStats::of(const std::vector<double>& values) {
  SummaryStats s;
  s.count = values.size();
  double sum = 0.0;
  std::uint64_t finite = 0;
  bool any = false;
  for (double v : values) {
    if (std::isnan(v)) {
      ++s.nan_count;
      continue;
    }
    if (std::isinf(v)) {
      ++s.inf_count;
    } else {
      sum += v;
      ++finite;
    }
    if (!any) {
      s.min = s.max = v;
      any = true;
    } else {
      s.min = std::min(s.min, v);
      s.max = std::max(s.max, v);
    }
  }
  s.mean = finite ? sum / static_cast<double>(finite) : 0.0;
  return s;
}

void ToleranceSpec::validate() const {
  if (!(rtol >= 0.0) || !(atol >= 0.0)) {
    throw std::invalid_argument(fmt::format("tolerances must be non-negative (rtol={}, atol={})",
                                            rtol, atol));
  }
}

bool values_close(double x, double y, const ToleranceSpec& tol) {
  bool xn = std::isnan(x);
  bool yn = std::isnan(y);
  if (xn || yn) return xn && yn;
  if (std::isinf(x) || std::isinf(y)) return x == y;
  return std::fabs(x - y) <= tol.atol + tol.rtol * std::max(std::fabs(x), std::fabs(y));
}

DiffVerdict compare(const ExecutionReport& a, const ExecutionReport& b, const ToleranceSpec& tol) {
  DiffVerdict v;
  v.status_a = status_text(a);
  v.status_b = status_text(b);
  for (const auto* r : {&a, &b}) {
    if (r->status == Status::kCrash) {
      v.kind = VerdictKind::kCrash;
      v.backend = r->backend;
      v.detail = r->exc_type.empty() ? r->message : r->exc_type;
      return v;
    }
  }
  for (const auto* r : {&a, &b}) {
    if (r->status == Status::kInfraError) {
      v.kind = VerdictKind::kInconclusive;
      v.backend = r->backend;
      v.detail = "infrastructure error: " + r->message;
      return v;
    }
  }
  if (a.status != b.status) {
    v.kind = VerdictKind::kStatusDivergence;
    return v;
  }
  if (a.status == Status::kPythonException) {
    if (a.exc_type != b.exc_type) v.kind = VerdictKind::kStatusDivergence;
    return v;
  }
  if (a.status != Status::kOk) return v;

  using Key = std::pair<std::string, int>;
  std::map<Key, const ValueSnapshot*> in_b;
  for (const auto& s : b.snapshots) in_b.emplace(Key{s.var, s.stmt}, &s);
  std::map<Key, const ValueSnapshot*> in_a;
  for (const auto& s : a.snapshots) in_a.emplace(Key{s.var, s.stmt}, &s);
  if (in_a.size() != in_b.size() ||
      !std::equal(in_a.begin(), in_a.end(), in_b.begin(),
                  [](const auto& x, const auto& y) { return x.first == y.first; })) {
    // Name the first key present on one side only.
    Key missing;
    for (const auto& [k, s] : in_a) {
      if (!in_b.count(k)) {
        missing = k;
        break;
      }
    }
    if (missing.first.empty()) {
      for (const auto& [k, s] : in_b) {
        if (!in_a.count(k)) {
          missing = k;
          break;
        }
      }
    }
    v.kind = VerdictKind::kWrongComputation;
    v.var = missing.first;
    v.stmt = missing.second;
    v.detail = "variable set divergence";
    return v;
  }
  for (const auto& s : a.snapshots) {
    const auto* other = in_b.at(Key{s.var, s.stmt});
    if (auto w = compare_snapshot(s, *other, tol)) {
      w->status_a = v.status_a;
      w->status_b = v.status_b;
      return *w;
    }
  }
  return v;
}

std::optional<CrashDetail> classify_crash(const ProcessOutcome& outcome) {
  auto by_signal = [](int sig) -> CrashDetail {
    switch (sig) {
      case SIGSEGV:
        return {CrashKind::kSegfault, "SIGSEGV"};
      case SIGABRT:
        return {CrashKind::kAbort, "SIGABRT"};
      case SIGILL:
        return {CrashKind::kIllegalInstruction, "SIGILL"};
      case SIGBUS:
        return {CrashKind::kBusError, "SIGBUS"};
      case SIGFPE:
        return {CrashKind::kFloatingPoint, "SIGFPE"};
      default:
        return {CrashKind::kSignal, fmt::format("signal {}", sig)};
    }
  };
  if (outcome.timed_out) return std::nullopt;
  if (outcome.signal) return by_signal(*outcome.signal);
  // Shells report a signal death as exit status 128 + signal.
  if (outcome.exit_code && *outcome.exit_code > 128 && *outcome.exit_code < 128 + 32) {
    int sig = *outcome.exit_code - 128;
    if (sig == SIGSEGV || sig == SIGABRT || sig == SIGILL || sig == SIGBUS || sig == SIGFPE) {
      return by_signal(sig);
    }
  }
  for (std::string_view marker : {"INTERNAL_ASSERT_FAILED", "Check failed"}) {
    auto pos = outcome.output.find(marker);
    if (pos != std::string::npos) {
      auto eol = outcome.output.find('\n', pos);
      return CrashDetail{CrashKind::kAssert, outcome.output.substr(pos, eol - pos)};
    }
  }
  return std::nullopt;
}

std::string write_report(const ExecutionReport& report) {
  std::string out;
  for (const auto& s : report.snapshots) {
    ojson rec;
    rec["var"] = s.var;
    rec["stmt"] = s.stmt;
    rec["kind"] = to_string(s.kind);
    rec["dtype"] = s.dtype;
    rec["shape"] = s.shape;
    if (s.values) {
      json arr = json::array();
      for (double x : *s.values) arr.push_back(encode_number(x));
      rec["payload"] = std::move(arr);
    } else if (s.stats) {
      rec["stats"] = {{"count", s.stats->count},
                      {"nan_count", s.stats->nan_count},
                      {"inf_count", s.stats->inf_count},
                      {"min", encode_number(s.stats->min)},
                      {"max", encode_number(s.stats->max)},
                      {"mean", encode_number(s.stats->mean)}};
    } else if (s.text) {
      rec["payload"] = *s.text;
    }
    out += rec.dump();
    out += '\n';
  }
  ojson fin;
  fin["status"] = to_string(report.status);
  fin["exc_type"] = report.exc_type;
  fin["message"] = report.message;
  fin["target_invoked"] = report.target_invoked;
  fin["duration_ms"] = report.duration_ms;
  out += fin.dump();
  out += '\n';
  return out;
}

ExecutionReport parse_report(std::string_view jsonl, std::string backend) {
  ExecutionReport r;
  r.backend = std::move(backend);
  bool have_status = false;
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start < jsonl.size()) {
    auto nl = jsonl.find('\n', start);
    auto line = jsonl.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    start = nl == std::string_view::npos ? jsonl.size() : nl + 1;
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      auto rec = json::parse(line);
      if (rec.contains("status")) {
        r.status = status_from_string(rec.at("status").get<std::string>());
        r.exc_type = rec.value("exc_type", std::string{});
        r.message = rec.value("message", std::string{});
        r.target_invoked = rec.value("target_invoked", false);
        r.duration_ms = rec.contains("duration_ms") ? decode_number(rec["duration_ms"]) : 0.0;
        have_status = true;
        continue;
      }
      if (have_status) throw std::runtime_error("snapshot after the status record");
      ValueSnapshot s;
      s.var = rec.at("var").get<std::string>();
      s.stmt = rec.at("stmt").get<int>();
      s.kind = value_kind_from_string(rec.value("kind", std::string("tensor")));
      s.dtype = rec.value("dtype", std::string{});
      if (rec.contains("shape")) s.shape = rec["shape"].get<std::vector<std::int64_t>>();
      if (rec.contains("payload")) {
        const auto& p = rec["payload"];
        if (p.is_array()) {
          std::vector<double> vals;
          vals.reserve(p.size());
          for (const auto& x : p) vals.push_back(decode_number(x));
          s.values = std::move(vals);
        } else if (p.is_string() && (s.kind == ValueKind::kString || s.kind == ValueKind::kOpaque)) {
          s.text = p.get<std::string>();
        } else {
          s.values = std::vector<double>{decode_number(p)};
        }
      } else if (rec.contains("stats")) {
        const auto& st = rec["stats"];
        SummaryStats ss;
        ss.count = st.at("count").get<std::uint64_t>();
        ss.nan_count = st.value("nan_count", std::uint64_t{0});
        ss.inf_count = st.value("inf_count", std::uint64_t{0});
        ss.min = decode_number(st.at("min"));
        ss.max = decode_number(st.at("max"));
        ss.mean = decode_number(st.at("mean"));
        s.stats = ss;
      }
      r.snapshots.push_back(std::move(s));
    } catch (const std::exception& e) {
      throw std::runtime_error(fmt::format("report line {}: {}", lineno, e.what()));
    }
  }
  if (!have_status) throw std::runtime_error("report has no status record");
  return r;
}

ojson to_json(const DiffVerdict& v) {
  ojson j;
  j["kind"] = to_string(v.kind);
  if (v.kind == VerdictKind::kWrongComputation) {
    j["var"] = v.var;
    j["stmt"] = v.stmt;
    j["max_abs_diff"] = encode_number(v.max_abs_diff);
    j["max_rel_diff"] = encode_number(v.max_rel_diff);
    j["nan_mismatch"] = v.nan_mismatch;
  }
  if (!v.backend.empty()) j["backend"] = v.backend;
  j["status_a"] = v.status_a;
  j["status_b"] = v.status_b;
  if (!v.detail.empty()) j["detail"] = v.detail;
  j["informational"] = v.informational;
  return j;
}

Allowlist Allowlist::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read allowlist " + path.string());
  std::set<std::string, std::less<>> names;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    auto e = line.find_last_not_of(" \t\r");
    names.insert(line.substr(b, e - b + 1));
  }
  return Allowlist(std::move(names));
}

DiffVerdict Allowlist::apply(DiffVerdict verdict, std::string_view api) const {
  if (verdict.is_bug() && contains(api)) verdict.informational = true;
  return verdict;
}

}  // namespace evofuzz::oracle

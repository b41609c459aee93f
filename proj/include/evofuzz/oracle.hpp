#pragma once

// Differential-testing verdicts over execution reports from two backends.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace evofuzz::oracle {

enum class ValueKind { kTensor, kScalar, kBool, kString, kOpaque };

std::string_view to_string(ValueKind kind);
ValueKind value_kind_from_string(std::string_view text);

// min and max range over every non-NaN element, so the sign of an infinity
// is kept; mean averages the finite elements only.
struct SummaryStats {
  std::uint64_t count = 0;
  std::uint64_t nan_count = 0;
  std::uint64_t inf_count = 0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;

  static SummaryStats of(const std::vector<double>& values);
  bool operator==(const SummaryStats&) const = default;
};

// Default element cap above which a snapshot carries summary statistics
// instead of its values.
inline constexpr std::size_t kDefaultSnapshotCap = 4096;

struct ValueSnapshot {
  std::string var;
  int stmt = 0;  // 0-based index of the top-level statement after which it was taken
  ValueKind kind = ValueKind::kScalar;
  std::string dtype;
  std::vector<std::int64_t> shape;
  std::optional<std::vector<double>> values;  // numeric payload, flattened
  std::optional<SummaryStats> stats;          // numeric payload beyond the cap
  std::optional<std::string> text;            // string payload or opaque repr
};

enum class Status { kOk, kPythonException, kCrash, kTimeout, kInfraError };

std::string_view to_string(Status status);
Status status_from_string(std::string_view text);

struct ExecutionReport {
  std::string backend = "cpu";  // "cpu" or "accelerator"
  Status status = Status::kOk;
  std::string exc_type;  // exception type, or crash kind for crashes
  std::string message;
  bool target_invoked = false;
  std::vector<ValueSnapshot> snapshots;
  double duration_ms = 0.0;
};

struct ToleranceSpec {
  double rtol = 1e-3;
  double atol = 1e-6;

  // Throws std::invalid_argument when either value is negative or NaN.
  void validate() const;
};

enum class VerdictKind { kConsistent, kWrongComputation, kCrash, kStatusDivergence, kInconclusive };

std::string_view to_string(VerdictKind kind);

struct DiffVerdict {
  VerdictKind kind = VerdictKind::kConsistent;
  // Wrong computation: first offending snapshot.
  std::string var;
  int stmt = -1;
  double max_abs_diff = 0.0;
  double max_rel_diff = 0.0;
  bool nan_mismatch = false;
  // Crash: the crashing backend. Status divergence: both statuses.
  std::string backend;
  std::string status_a;
  std::string status_b;
  std::string detail;
  // Set when the API is on the allowlist of tolerated divergences.
  bool informational = false;

  bool is_bug() const {
    return !informational &&
           (kind == VerdictKind::kWrongComputation || kind == VerdictKind::kCrash ||
            kind == VerdictKind::kStatusDivergence);
  }
};

// Element check |x - y| <= atol + rtol * max(|x|, |y|), with NaN == NaN and
// infinities equal only to infinities of the same sign.
bool values_close(double x, double y, const ToleranceSpec& tol);

DiffVerdict compare(const ExecutionReport& a, const ExecutionReport& b, const ToleranceSpec& tol);

// How a child process ended.
struct ProcessOutcome {
  std::optional<int> exit_code;  // set when the process exited normally
  std::optional<int> signal;     // set when it was killed by a signal
  bool timed_out = false;        // killed by the executor's deadline
  std::string output;            // captured stdout and stderr
};

enum class CrashKind { kSegfault, kAbort, kIllegalInstruction, kBusError, kFloatingPoint, kSignal, kAssert };

std::string_view to_string(CrashKind kind);

struct CrashDetail {
  CrashKind kind;
  std::string detail;
};

// Signal deaths and internal-assertion markers are crashes; ordinary
// exceptions and timeouts are not.
std::optional<CrashDetail> classify_crash(const ProcessOutcome& outcome);

// Line-delimited report wire format: one record per snapshot
// {"var","stmt","kind","dtype","shape","payload"|"stats"} and a final
// {"status","exc_type","message","target_invoked","duration_ms"} record.
// Non-finite numbers are written as "nan", "inf" and "-inf".
std::string write_report(const ExecutionReport& report);

// Throws std::runtime_error on malformed input or a missing status record.
ExecutionReport parse_report(std::string_view jsonl, std::string backend);

nlohmann::ordered_json to_json(const DiffVerdict& verdict);

// API names whose divergences are known and tolerated.
class Allowlist {
 public:
  Allowlist() = default;
  explicit Allowlist(std::set<std::string, std::less<>> names) : names_(std::move(names)) {}

  // One API name per line; '#' starts a comment.
  static Allowlist load(const std::filesystem::path& path);

  bool contains(std::string_view api) const { return names_.count(api) > 0; }
  std::size_t size() const { return names_.size(); }

  // Marks bug verdicts for allowlisted APIs as informational.
  DiffVerdict apply(DiffVerdict verdict, std::string_view api) const;

 private:
  std::set<std::string, std::less<>> names_;
};

}  // namespace evofuzz::oracle

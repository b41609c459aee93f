#pragma once

// Snapshot builders and a random generator of paired execution reports with
// NaN, infinities and small perturbations.

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "evofuzz/oracle.hpp"

namespace evofuzz::testkit {

using oracle::ExecutionReport;
using oracle::Status;
using oracle::ToleranceSpec;
using oracle::ValueKind;
using oracle::ValueSnapshot;

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline ValueSnapshot tensor(const std::string& var, int stmt, std::vector<double> values) {
  ValueSnapshot s;
  s.var = var;
  s.stmt = stmt;
  s.kind = ValueKind::kTensor;
  s.dtype = "float32";
  s.shape = {static_cast<std::int64_t>(values.size())};
  s.values = std::move(values);
  return s;
}

inline ExecutionReport ok_report(std::string backend, std::vector<ValueSnapshot> snaps) {
  ExecutionReport r;
  r.backend = std::move(backend);
  r.status = Status::kOk;
  r.target_invoked = true;
  r.snapshots = std::move(snaps);
  return r;
}

class PairGenerator {
 public:
  explicit PairGenerator(unsigned seed) : rng_(seed) {}

  double value() {
    double r = unit();
    if (r < 0.05) return kNaN;
    if (r < 0.08) return kInf;
    if (r < 0.11) return -kInf;
    return std::normal_distribution<double>(0, std::pow(10.0, static_cast<int>(unit() * 6) - 2))(rng_);
  }

  double perturb(double x) {
    double r = unit();
    if (r < 0.04) return kNaN;
    if (r < 0.06) return -x;
    if (r < 0.5 || !std::isfinite(x)) return x;
    double scale = std::pow(10.0, -1 - unit() * 9);
    return x + (unit() - 0.5) * scale * (1 + std::fabs(x));
  }

  std::pair<ExecutionReport, ExecutionReport> pair() {
    std::size_t vars = 1 + static_cast<std::size_t>(unit() * 3);
    std::vector<ValueSnapshot> a, b;
    for (std::size_t v = 0; v < vars; ++v) {
      std::size_t n = 1 + static_cast<std::size_t>(unit() * 6);
      std::vector<double> xs(n), ys(n);
      for (std::size_t i = 0; i < n; ++i) {
        xs[i] = value();
        ys[i] = perturb(xs[i]);
      }
      a.push_back(tensor("v" + std::to_string(v), static_cast<int>(v), xs));
      b.push_back(tensor("v" + std::to_string(v), static_cast<int>(v), ys));
    }
    return {ok_report("cpu", a), ok_report("accelerator", b)};
  }

  ToleranceSpec tolerance() { return {std::pow(10.0, -1 - unit() * 7), std::pow(10.0, -1 - unit() * 9)}; }

  double unit() { return std::uniform_real_distribution<double>(0, 1)(rng_); }

 private:
  std::mt19937_64 rng_;
};

}  // namespace evofuzz::testkit

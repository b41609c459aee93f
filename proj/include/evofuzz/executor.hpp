#pragma once

// Out-of-process execution of generated programs through an instrumented
// shim that writes the oracle report format.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "evofuzz/oracle.hpp"

namespace evofuzz {

struct ExecRequest {
  std::filesystem::path program;
  std::string backend = "cpu";  // "cpu" or "accelerator"
  std::string target_api;
  std::uint64_t rng_seed = 0;
  std::size_t snapshot_cap = oracle::kDefaultSnapshotCap;
  std::chrono::milliseconds timeout{10000};
};

class Executor {
 public:
  virtual ~Executor() = default;
  // Never throws for program failures; those are reported in the status.
  virtual oracle::ExecutionReport execute(const ExecRequest& request) = 0;
};

// Shim exit codes.
inline constexpr int kShimOk = 0;
inline constexpr int kShimProgramException = 1;
inline constexpr int kShimInfraError = 3;

// Arguments passed to the shim after its command prefix:
// --program P --backend B --seed N --target API --report R --cap C
std::vector<std::string> shim_arguments(const ExecRequest& request,
                                        const std::filesystem::path& report_path);

// Maps a finished shim process and its report text to an ExecutionReport.
// Signal deaths and assertion markers become crashes, exit code 3 an
// infrastructure error, a missing or unreadable report an infrastructure
// error unless the process crashed or timed out.
oracle::ExecutionReport interpret_outcome(const oracle::ProcessOutcome& outcome,
                                          const std::string& report_text,
                                          const std::string& backend, double duration_ms);

// Runs `command` (for example {"python3", "-m", "evofuzz_shim"}) followed
// by shim_arguments(). Output is captured for crash classification; the
// process is killed with SIGKILL when the timeout expires.
class SubprocessExecutor : public Executor {
 public:
  SubprocessExecutor(std::vector<std::string> command, std::filesystem::path scratch_dir);

  oracle::ExecutionReport execute(const ExecRequest& request) override;

 private:
  std::vector<std::string> command_;
  std::filesystem::path scratch_dir_;
};

// Runs argv with a deadline, capturing stdout and stderr together.
oracle::ProcessOutcome run_process(const std::vector<std::string>& argv,
                                   std::chrono::milliseconds timeout);

}  // namespace evofuzz

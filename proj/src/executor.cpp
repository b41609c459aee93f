#include "evofuzz/executor.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

namespace evofuzz {

std::vector<std::string> shim_arguments(const ExecRequest& request,
                                        const std::filesystem::path& report_path) {
  return {"--program", request.program.string(),
          "--backend", request.backend,
          "--seed",    std::to_string(request.rng_seed),
          "--target",  request.target_api,
          "--report",  report_path.string(),
          "--cap",     std::to_string(request.snapshot_cap)};
}

oracle::ExecutionReport interpret_outcome(const oracle::ProcessOutcome& outcome,
                                          const std::string& report_text,
                                          const std::string& backend, double duration_ms) {
  using oracle::Status;
  oracle::ExecutionReport report;
  bool parsed = false;
  if (!report_text.empty()) {
    try {
      report = oracle::parse_report(report_text, backend);
      parsed = true;
    } catch (const std::exception& e) {
      report.message = e.what();
    }
  }
  report.backend = backend;
  report.duration_ms = duration_ms;
  if (outcome.timed_out) {
    report.status = Status::kTimeout;
    report.exc_type.clear();
    report.message = "execution exceeded its deadline";
    return report;
  }
  if (auto crash = oracle::classify_crash(outcome)) {
    report.status = Status::kCrash;
    report.exc_type = std::string(oracle::to_string(crash->kind));
    report.message = crash->detail;
    return report;
  }
  int code = outcome.exit_code.value_or(-1);
  if (code == kShimInfraError) {
    report.status = Status::kInfraError;
    if (report.message.empty()) report.message = outcome.output.substr(0, 2000);
    return report;
  }
  if (!parsed) {
    report.status = Status::kInfraError;
    report.message = fmt::format("shim exited with {} without a readable report: {}", code,
                                 report.message);
    return report;
  }
  if (code == kShimProgramException && report.status == Status::kOk) {
    report.status = Status::kPythonException;
  } else if (code != kShimOk && code != kShimProgramException) {
    report.status = Status::kInfraError;
    report.message = fmt::format("unexpected shim exit code {}", code);
  }
  return report;
}

oracle::ProcessOutcome run_process(const std::vector<std::string>& argv,
                                   std::chrono::milliseconds timeout) {
  if (argv.empty()) throw std::invalid_argument("empty command");
  int pipe_fds[2];
  if (pipe2(pipe_fds, O_CLOEXEC) != 0) {
    throw std::runtime_error(fmt::format("pipe failed: {}", std::strerror(errno)));
  }
  std::vector<char*> cargs;
  for (const auto& a : argv) cargs.push_back(const_cast<char*>(a.c_str()));
  cargs.push_back(nullptr);

  pid_t pid = fork();
  if (pid < 0) {
    close(pipe_fds[0]);
    close(pipe_fds[1]);
    throw std::runtime_error(fmt::format("fork failed: {}", std::strerror(errno)));
  }
  if (pid == 0) {
    setpgid(0, 0);
    dup2(pipe_fds[1], STDOUT_FILENO);
    dup2(pipe_fds[1], STDERR_FILENO);
    execvp(cargs[0], cargs.data());
    _exit(127);
  }
  close(pipe_fds[1]);
  oracle::ProcessOutcome outcome;
  auto deadline = std::chrono::steady_clock::now() + timeout;
  char buf[4096];
  bool reading = true;
  while (reading) {
    auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) {
      outcome.timed_out = true;
      kill(-pid, SIGKILL);
      kill(pid, SIGKILL);
      break;
    }
    pollfd pfd{pipe_fds[0], POLLIN, 0};
    int rc = poll(&pfd, 1, static_cast<int>(std::min<long long>(remaining.count(), 100)));
    if (rc < 0 && errno != EINTR) break;
    if (rc > 0) {
      ssize_t n = read(pipe_fds[0], buf, sizeof buf);
      if (n > 0) {
        if (outcome.output.size() < (1u << 20)) outcome.output.append(buf, static_cast<std::size_t>(n));
      } else if (n == 0 || (n < 0 && errno != EINTR)) {
        reading = false;
      }
    }
  }
  close(pipe_fds[0]);
  // The output pipe is closed; wait for the exit status under the same deadline.
  int status = 0;
  while (true) {
    pid_t w = waitpid(pid, &status, WNOHANG);
    if (w == pid) break;
    if (w < 0 && errno != EINTR) break;
    if (!outcome.timed_out && std::chrono::steady_clock::now() >= deadline) {
      outcome.timed_out = true;
      kill(-pid, SIGKILL);
      kill(pid, SIGKILL);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  if (WIFEXITED(status)) {
    outcome.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    outcome.signal = WTERMSIG(status);
  }
  return outcome;
}

SubprocessExecutor::SubprocessExecutor(std::vector<std::string> command,
                                       std::filesystem::path scratch_dir)
    : command_(std::move(command)), scratch_dir_(std::move(scratch_dir)) {
  if (command_.empty()) throw std::invalid_argument("shim command is empty");
  std::filesystem::create_directories(scratch_dir_);
}

oracle::ExecutionReport SubprocessExecutor::execute(const ExecRequest& request) {
  static std::atomic<std::uint64_t> counter{0};
  auto report_path = scratch_dir_ / fmt::format("report-{}-{}-{}.jsonl", getpid(),
                                                counter.fetch_add(1), request.backend);
  std::filesystem::remove(report_path);
  auto argv = command_;
  for (auto& a : shim_arguments(request, report_path)) argv.push_back(std::move(a));
  auto start = std::chrono::steady_clock::now();
  auto outcome = run_process(argv, request.timeout);
  double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  std::string text;
  if (std::ifstream in{report_path, std::ios::binary}) {
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }
  std::error_code ec;
  std::filesystem::remove(report_path, ec);
  return interpret_outcome(outcome, text, request.backend, ms);
}

}  // namespace evofuzz

#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "json.hpp"

namespace evofuzz::testkit {

inline std::filesystem::path fixture_dir() {
  if (const char* env = std::getenv("EVOFUZZ_FIXTURES")) return env;
  return EVOFUZZ_FIXTURE_DIR;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<nlohmann::json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

// True when `out` consists of whole leading lines of `in`.
inline bool is_line_prefix(const std::string& out, const std::string& in) {
  if (out.empty()) return true;
  if (in.compare(0, out.size(), out) != 0) return false;
  return out.size() == in.size() || in[out.size()] == '\n' || in[out.size()] == '\r';
}

// Command that runs the fake execution shim under the configured interpreter.
inline std::vector<std::string> fake_shim_command() {
  return {EVOFUZZ_PYTHON, (fixture_dir() / "fake_shim.py").string()};
}

// A fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("evofuzz-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

  std::filesystem::path write(const std::string& name, const std::string& content) const {
    auto p = path_ / name;
    std::ofstream(p, std::ios::binary) << content;
    return p;
  }

 private:
  std::filesystem::path path_;
};

}  // namespace evofuzz::testkit

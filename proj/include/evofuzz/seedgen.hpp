#pragma once

// Step-by-step seed prompts and conversion of completions into seeds.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "evofuzz/api_target.hpp"
#include "evofuzz/corpus.hpp"
#include "evofuzz/genbackend.hpp"

namespace evofuzz::seedgen {

struct PromptTemplate {
  std::string library_display;  // e.g. "PyTorch"
  std::string import_line;      // e.g. "import torch"
  std::string version_note;     // optional, appended to the library line

  // Template for a target's library family.
  static PromptTemplate for_target(const ApiTarget& target);
};

// Docstring naming the library and the API signature (or the bare name when
// the signature is empty), three numbered tasks, then the import line that
// starts the completion.
std::string build_prompt(const ApiTarget& target, const PromptTemplate& tmpl);
std::string build_prompt(const ApiTarget& target);

struct SeedStats {
  std::size_t completions = 0;
  std::size_t rejected_unparseable = 0;
  std::size_t rejected_empty = 0;
  std::size_t rejected_no_target = 0;
  std::size_t duplicates = 0;
};

struct SeedResult {
  std::vector<TestProgram> seeds;  // provenance seed, validity unknown, unique by norm_hash
  SeedStats stats;
  std::optional<std::string> error;  // backend failure, if any
};

// Samples completions for the target's prompt and keeps the unique ones
// that survive postprocessing. Backend errors are captured in `error`.
SeedResult generate_seeds(const ApiTarget& target, genbackend::Backend& backend,
                          const genbackend::SamplingParams& params);

// The completion request generate_seeds sends for a target.
genbackend::CompletionRequest seed_request(const ApiTarget& target,
                                           const genbackend::SamplingParams& params);

// Signature catalog: one JSON object per line with "name", optional
// "signature" and optional "library". Throws std::runtime_error with the
// line number on malformed records.
std::vector<ApiTarget> load_catalog(const std::filesystem::path& path);

}  // namespace evofuzz::seedgen

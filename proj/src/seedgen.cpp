#include "evofuzz/seedgen.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace evofuzz::seedgen {

PromptTemplate PromptTemplate::for_target(const ApiTarget& target) {
  switch (target.library) {
    case Library::kTorchLike:
      return {"PyTorch", "import torch", {}};
    case Library::kTensorflowLike:
      return {"TensorFlow", "import tensorflow as tf", {}};
    case Library::kGeneric:
      break;
  }
  std::string root(target.root());
  return {root, "import " + root, {}};
}

std::string build_prompt(const ApiTarget& target, const PromptTemplate& tmpl) {
  if (target.qualified_name.empty()) throw InvalidTarget("API name is empty");
  const std::string& api = target.signature.empty() ? target.qualified_name : target.signature;
  std::string library = tmpl.library_display;
  if (!tmpl.version_note.empty()) library += " " + tmpl.version_note;
  return fmt::format(
      "\"\"\"\n"
      "This is a Python program that uses the {library} library.\n"
      "Target API: {api}\n"
      "Task 1: import {library}\n"
      "Task 2: generate input data\n"
      "Task 3: call the API {name}\n"
      "\"\"\"\n"
      "{import_line}\n",
      fmt::arg("library", library), fmt::arg("api", api), fmt::arg("name", target.qualified_name),
      fmt::arg("import_line", tmpl.import_line));
}

std::string build_prompt(const ApiTarget& target) {
  return build_prompt(target, PromptTemplate::for_target(target));
}

genbackend::CompletionRequest seed_request(const ApiTarget& target,
                                           const genbackend::SamplingParams& params) {
  return {build_prompt(target), params};
}

SeedResult generate_seeds(const ApiTarget& target, genbackend::Backend& backend,
                          const genbackend::SamplingParams& params) {
  SeedResult result;
  auto request = seed_request(target, params);
  auto kickoff = PromptTemplate::for_target(target).import_line;
  std::vector<std::string> completions;
  try {
    completions = backend.complete(request);
  } catch (const genbackend::BackendError& e) {
    result.error = fmt::format("{} error: {}", genbackend::to_string(e.kind()), e.what());
    spdlog::warn("seed generation for {} failed: {}", target.qualified_name, *result.error);
    return result;
  }
  result.stats.completions = completions.size();
  std::set<std::string> seen;
  for (const auto& raw : completions) {
    auto pp = genbackend::postprocess(raw, genbackend::PostprocessMode::kSeed, target,
                                      request.prompt, kickoff);
    if (!pp.accepted()) {
      switch (*pp.reason) {
        case genbackend::RejectReason::kUnparseable:
          ++result.stats.rejected_unparseable;
          break;
        case genbackend::RejectReason::kEmptyAfterTrim:
          ++result.stats.rejected_empty;
          break;
        case genbackend::RejectReason::kNoTargetCall:
          ++result.stats.rejected_no_target;
          break;
      }
      continue;
    }
    auto program = TestProgram::make(std::move(*pp.source), target, Provenance::seed());
    if (!seen.insert(program.norm_hash).second) {
      ++result.stats.duplicates;
      continue;
    }
    result.seeds.push_back(std::move(program));
  }
  return result;
}

std::vector<ApiTarget> load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read API catalog " + path.string());
  std::vector<ApiTarget> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto rec = nlohmann::json::parse(line);
      auto name = rec.at("name").get<std::string>();
      auto signature = rec.value("signature", std::string{});
      if (rec.contains("library") && !rec["library"].is_null()) {
        out.push_back(ApiTarget::make(library_from_string(rec["library"].get<std::string>()),
                                      std::move(name), std::move(signature)));
      } else {
        out.push_back(ApiTarget::make(std::move(name), std::move(signature)));
      }
    } catch (const std::exception& e) {
      throw std::runtime_error(fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
    }
  }
  return out;
}

}  // namespace evofuzz::seedgen

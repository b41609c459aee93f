#pragma once

// Round-trip and parseability sweep over every operator and call site of a
// fixed program corpus. Shared by the unit tests and the acceptance runner.

#include <map>
#include <string>
#include <vector>

#include "evofuzz/mutator.hpp"
#include "support/fixtures.hpp"
#include "support/program_model.hpp"

namespace evofuzz::testkit {

inline std::size_t expected_arity(OperatorId op) {
  switch (op) {
    case OperatorId::kKeyword:
    case OperatorId::kPrefixArgument:
    case OperatorId::kSuffixArgument:
      return 2;
    default:
      return 1;
  }
}

// Stand-ins for each span role, chosen independently of the mutator so that
// a parse failure points at a misplaced mask.
inline std::string stand_in(mutator::SpanRole role) {
  switch (role) {
    case mutator::SpanRole::kArgs:
    case mutator::SpanRole::kKeywordValue:
      return "None";
    case mutator::SpanRole::kKeywordName:
    case mutator::SpanRole::kMethodName:
      return "x";
    case mutator::SpanRole::kLines:
      return "pass";
  }
  return "None";
}

inline std::size_t count_markers(const std::string& s) {
  std::size_t n = 0;
  for (auto pos = s.find(mutator::kPlaceholder); pos != std::string::npos;
       pos = s.find(mutator::kPlaceholder, pos + 1)) {
    ++n;
  }
  return n;
}

// The checked-in seed fixtures topped up with generated straight-line
// programs to 75 entries.
inline std::vector<TestProgram> mutation_corpus() {
  std::vector<TestProgram> programs;
  for (const auto& j : read_jsonl(fixture_dir() / "mutator_seeds.jsonl")) {
    programs.push_back(TestProgram::make(j.at("source").get<std::string>(),
                                         ApiTarget::make(j.at("target").get<std::string>())));
  }
  ProgramGenerator gen(404);
  while (programs.size() < 75) {
    auto m = gen.generate(8);
    // Target the last plain library call so every region operator applies.
    std::string target;
    for (const auto& s : pyast::find_calls(m.source, std::vector<std::string>{"torch"})) {
      if (!s.is_method) target = s.callee;
    }
    if (target.empty()) continue;
    programs.push_back(TestProgram::make("import torch\n" + m.source, ApiTarget::make(target)));
  }
  return programs;
}

struct MutationSweep {
  std::size_t checked = 0;
  std::size_t roundtrip_failures = 0;
  std::size_t splice_failures = 0;
  std::size_t parse_failures = 0;
  std::size_t arity_failures = 0;
  std::size_t incoherent = 0;
  std::size_t unexpected_errors = 0;
  std::map<OperatorId, std::size_t> per_op;
  std::vector<std::string> messages;  // first few failures, for diagnostics

  bool clean() const {
    return roundtrip_failures == 0 && splice_failures == 0 && parse_failures == 0 && arity_failures == 0 &&
           incoherent == 0 && unexpected_errors == 0;
  }
};

inline void check_mask(const TestProgram& parent, const mutator::MaskedProgram& m, OperatorId op,
                       MutationSweep& sweep) {
  auto note = [&](const std::string& what) {
    if (sweep.messages.size() < 10) {
      sweep.messages.push_back(std::string(to_string(op)) + ": " + what + "\n" + m.masked_source);
    }
  };
  ++sweep.checked;
  ++sweep.per_op[op];
  if (m.op != op || m.placeholder_count() != expected_arity(op) ||
      count_markers(m.masked_source) != expected_arity(op)) {
    ++sweep.arity_failures;
    note("wrong placeholder count");
  }
  if (m.restore() != parent.source) {
    ++sweep.roundtrip_failures;
    note("restore differs from parent");
  }
  // Independent splice of the original texts for pure replacement masks.
  bool replacement_only = op == OperatorId::kArgument || op == OperatorId::kPrefix ||
                          op == OperatorId::kMethod || op == OperatorId::kPrefixArgument;
  if (replacement_only) {
    std::vector<std::string> originals;
    for (const auto& s : m.spans) originals.push_back(s.original);
    if (splice(m.segments(), originals) != parent.source) {
      ++sweep.splice_failures;
      note("splice of originals differs from parent");
    }
  }
  std::vector<std::string> fills;
  for (const auto& s : m.spans) fills.push_back(stand_in(s.role));
  auto substituted = splice(m.segments(), fills);
  if (auto err = pyast::parse_check(substituted)) {
    ++sweep.parse_failures;
    note("substituted source does not parse: " + err->message + "\n" + substituted);
  }
}

// Applies every operator at every eligible site of every corpus program.
inline MutationSweep run_mutation_sweep(const std::vector<TestProgram>& programs) {
  using namespace mutator;
  MutationSweep sweep;
  for (const auto& p : programs) {
    auto sites = pyast::find_calls(p.source, library_prefixes(p.target));
    std::vector<pyast::CallSite> targets;
    for (const auto& s : sites) {
      if (is_target_callee(s.callee, p.target)) targets.push_back(s);
    }
    if (targets.empty()) {
      ++sweep.unexpected_errors;
      sweep.messages.push_back("fixture without target call:\n" + p.source);
      continue;
    }
    auto attempt = [&](OperatorId op, auto&& make) {
      try {
        check_mask(p, make(), op, sweep);
      } catch (const MaskError& e) {
        if (e.kind() == MaskError::Kind::kIncoherent) {
          ++sweep.incoherent;
        } else if (e.kind() != MaskError::Kind::kNothingBeforeTarget) {
          ++sweep.unexpected_errors;
          if (sweep.messages.size() < 10) {
            sweep.messages.push_back(std::string(to_string(op)) + ": " + e.what() + "\n" + p.source);
          }
        }
      }
    };
    for (const auto& s : sites) {
      attempt(OperatorId::kArgument, [&] { return mask_argument(p, s); });
      attempt(OperatorId::kKeyword, [&] { return mask_keyword(p, s); });
      Rng rng(s.call_span.begin);
      attempt(OperatorId::kMethod, [&] { return mask_method(p, std::vector<pyast::CallSite>{s}, rng); });
    }
    for (const auto& t : targets) {
      attempt(OperatorId::kSuffix, [&] { return mask_suffix(p, t); });
      attempt(OperatorId::kSuffixArgument, [&] { return mask_suffix_argument(p, t); });
      for (std::uint64_t seed = 0; seed < 3; ++seed) {
        Rng rng(seed);
        attempt(OperatorId::kPrefix, [&] { return mask_prefix(p, t, rng); });
        attempt(OperatorId::kPrefixArgument, [&] { return mask_prefix_argument(p, t, rng); });
      }
    }
  }
  return sweep;
}

}  // namespace evofuzz::testkit

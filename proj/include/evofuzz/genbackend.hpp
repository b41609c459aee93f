#pragma once

// Language-model backends for seed completion and masked infilling.

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "evofuzz/api_target.hpp"
#include "evofuzz/segments.hpp"
#include "json.hpp"

namespace evofuzz::genbackend {

struct SamplingParams {
  double temperature = 0.4;
  double top_p = 0.95;
  int max_tokens = 256;
  int num_samples = 25;

  static SamplingParams seed_defaults() { return {0.4, 0.95, 256, 25}; }
  static SamplingParams infill_defaults() { return {1.0, 0.95, 256, 5}; }

  // Throws std::invalid_argument when a field is out of range.
  void validate() const;
  bool operator==(const SamplingParams&) const = default;
};

struct CompletionRequest {
  std::string prompt;
  SamplingParams params = SamplingParams::seed_defaults();
};

struct InfillRequest {
  std::vector<Segment> segments;
  SamplingParams params = SamplingParams::infill_defaults();

  std::size_t placeholder_count() const { return evofuzz::placeholder_count(segments); }
};

// Wire form: {"kind", "prompt" | "segments", "temperature", "top_p",
// "max_tokens", "n"}; segments are {"text": ...} or {"placeholder": i}.
nlohmann::ordered_json to_json(const CompletionRequest& request);
nlohmann::ordered_json to_json(const InfillRequest& request);

// Hex SHA-256 of the compact wire JSON; keys mock fixtures.
std::string request_digest(const CompletionRequest& request);
std::string request_digest(const InfillRequest& request);
std::string request_digest(const nlohmann::ordered_json& wire);

class BackendError : public std::runtime_error {
 public:
  enum class Kind { kTransport, kRejected, kTimeout, kInvalidRequest };

  BackendError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }
  bool retryable() const noexcept { return kind_ == Kind::kTransport; }

 private:
  Kind kind_;
};

std::string_view to_string(BackendError::Kind kind);

class Backend {
 public:
  virtual ~Backend() = default;

  // Up to params.num_samples completions of the prompt, in a stable order.
  virtual std::vector<std::string> complete(const CompletionRequest& request) = 0;

  // Per sample, one fill per placeholder. Samples with the wrong number of
  // fills are dropped with a warning.
  virtual std::vector<std::vector<std::string>> infill(const InfillRequest& request) = 0;

  virtual std::string name() const = 0;
};

// Checks a request before it is sent. Throws BackendError(kInvalidRequest).
void validate(const CompletionRequest& request);
void validate(const InfillRequest& request);

// Keeps samples carrying exactly `expected` fills, logging the others.
std::vector<std::vector<std::string>> keep_well_formed(std::vector<std::vector<std::string>> samples,
                                                       std::size_t expected);

struct MockOptions {
  // Fill used for every placeholder of an infill request without a fixture.
  std::string default_fill = "None";
  // Instead of the default fill, derive varied fills from the request
  // digest and the identifiers and numbers in its literal text.
  bool synthesize = false;
};

// Deterministic offline backend answering from fixtures keyed by request
// digest. Immutable after construction.
class MockBackend : public Backend {
 public:
  explicit MockBackend(MockOptions options = {});

  // Loads every *.json file of the directory. A fixture holds "samples" and
  // optionally the "request" it answers; without a request the file stem
  // is taken as the digest. Throws std::runtime_error on malformed files.
  static MockBackend from_directory(const std::filesystem::path& dir, MockOptions options = {});

  void add_fixture(const std::string& digest, nlohmann::json samples);

  std::vector<std::string> complete(const CompletionRequest& request) override;
  std::vector<std::vector<std::string>> infill(const InfillRequest& request) override;
  std::string name() const override { return "mock"; }

  std::size_t fixture_count() const { return fixtures_.size(); }

 private:
  std::vector<std::vector<std::string>> synthesize(const InfillRequest& request,
                                                   const std::string& digest) const;

  MockOptions options_;
  std::map<std::string, nlohmann::json> fixtures_;
};

struct HttpOptions {
  std::string endpoint;  // e.g. "http://127.0.0.1:8080/v1/generate"
  std::string auth_token;
  std::string completion_model;
  std::string infill_model;
  std::chrono::milliseconds timeout{60000};
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
};

// JSON-over-HTTP backend. Transport failures and 5xx responses are retried
// with exponential backoff; 4xx responses are rejections.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpOptions options);

  std::vector<std::string> complete(const CompletionRequest& request) override;
  std::vector<std::vector<std::string>> infill(const InfillRequest& request) override;
  std::string name() const override { return "http"; }

 private:
  nlohmann::json post(nlohmann::ordered_json body);

  HttpOptions options_;
  std::string scheme_host_port_;
  std::string path_;
};

enum class PostprocessMode { kSeed, kMutant };

enum class RejectReason { kUnparseable, kEmptyAfterTrim, kNoTargetCall };

std::string_view to_string(RejectReason reason);

struct PostprocessResult {
  std::optional<std::string> source;  // set when accepted
  std::optional<RejectReason> reason;  // set when rejected

  bool accepted() const { return source.has_value(); }
};

// Seed mode first removes an echoed prompt and re-attaches the kick-off
// line (`kickoff`, typically the import that ends the prompt) when the
// completion starts after it. Then: trim to the longest parsing line
// prefix, drop print statements, eliminate dead code, and require a static
// call to the target.
PostprocessResult postprocess(std::string_view raw, PostprocessMode mode, const ApiTarget& target,
                              std::string_view prompt = {}, std::string_view kickoff = {});

}  // namespace evofuzz::genbackend

#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "evofuzz/digest.hpp"
#include "evofuzz/genbackend.hpp"

namespace evofuzz::genbackend {
namespace {

void put_params(nlohmann::ordered_json& j, const SamplingParams& p) {
  j["temperature"] = p.temperature;
  j["top_p"] = p.top_p;
  j["max_tokens"] = p.max_tokens;
  j["n"] = p.num_samples;
}

}  // namespace

void SamplingParams::validate() const {
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
    throw std::invalid_argument(fmt::format("temperature must be >= 0 (got {})", temperature));
  }
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw std::invalid_argument(fmt::format("top_p must be in (0, 1] (got {})", top_p));
  }
  if (max_tokens < 1) throw std::invalid_argument("max_tokens must be positive");
  if (num_samples < 1) throw std::invalid_argument("the sample count must be positive");
}

nlohmann::ordered_json to_json(const CompletionRequest& request) {
  nlohmann::ordered_json j;
  j["kind"] = "complete";
  j["prompt"] = request.prompt;
  put_params(j, request.params);
  return j;
}

nlohmann::ordered_json to_json(const InfillRequest& request) {
  nlohmann::ordered_json j;
  j["kind"] = "infill";
  auto segs = nlohmann::ordered_json::array();
  for (const auto& s : request.segments) {
    nlohmann::ordered_json e;
    if (s.is_placeholder()) {
      e["placeholder"] = s.index;
    } else {
      e["text"] = s.text;
    }
    segs.push_back(std::move(e));
  }
  j["segments"] = std::move(segs);
  put_params(j, request.params);
  return j;
}

std::string request_digest(const nlohmann::ordered_json& wire) { return sha256_hex(wire.dump()); }
std::string request_digest(const CompletionRequest& request) { return request_digest(to_json(request)); }
std::string request_digest(const InfillRequest& request) { return request_digest(to_json(request)); }

std::string_view to_string(BackendError::Kind kind) {
  switch (kind) {
    case BackendError::Kind::kTransport:
      return "transport";
    case BackendError::Kind::kRejected:
      return "rejected";
    case BackendError::Kind::kTimeout:
      return "timeout";
    case BackendError::Kind::kInvalidRequest:
      return "invalid-request";
  }
  return "transport";
}

void validate(const CompletionRequest& request) {
  if (request.prompt.empty()) {
    throw BackendError(BackendError::Kind::kInvalidRequest, "completion prompt is empty");
  }
  try {
    request.params.validate();
  } catch (const std::invalid_argument& e) {
    throw BackendError(BackendError::Kind::kInvalidRequest, e.what());
  }
}

void validate(const InfillRequest& request) {
  if (request.placeholder_count() == 0) {
    throw BackendError(BackendError::Kind::kInvalidRequest, "infill request has no placeholder");
  }
  try {
    request.params.validate();
  } catch (const std::invalid_argument& e) {
    throw BackendError(BackendError::Kind::kInvalidRequest, e.what());
  }
}

std::vector<std::vector<std::string>> keep_well_formed(std::vector<std::vector<std::string>> samples,
                                                       std::size_t expected) {
  std::vector<std::vector<std::string>> kept;
  kept.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].size() != expected) {
      spdlog::warn("dropping infill sample {}: {} fills for {} placeholders", i, samples[i].size(),
                   expected);
      continue;
    }
    kept.push_back(std::move(samples[i]));
  }
  return kept;
}

}  // namespace evofuzz::genbackend

#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "evofuzz/genbackend.hpp"
#include "httplib.h"

namespace evofuzz::genbackend {
namespace {

// Splits "http://host:port/path" into ("http://host:port", "/path").
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
  auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("endpoint must start with http:// or https://: " + endpoint);
  }
  auto scheme = endpoint.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw std::invalid_argument("unsupported endpoint scheme: " + scheme);
  }
  auto path_start = endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {endpoint, "/"};
  return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

}  // namespace

HttpBackend::HttpBackend(HttpOptions options) : options_(std::move(options)) {
  if (options_.attempts < 1) throw std::invalid_argument("attempts must be positive");
  std::tie(scheme_host_port_, path_) = split_endpoint(options_.endpoint);
}

nlohmann::json HttpBackend::post(nlohmann::ordered_json body) {
  std::string payload = body.dump();
  auto backoff = options_.initial_backoff;
  std::string last_error;
  for (int attempt = 1; attempt <= options_.attempts; ++attempt) {
    httplib::Client client(scheme_host_port_);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!options_.auth_token.empty()) {
      headers.emplace("Authorization", "Bearer " + options_.auth_token);
    }
    auto res = client.Post(path_, headers, payload, "application/json");
    if (!res) {
      auto err = res.error();
      if (err == httplib::Error::Read || err == httplib::Error::Write) {
        // httplib reports an expired socket timeout as a read/write error.
        throw BackendError(BackendError::Kind::kTimeout,
                           fmt::format("{} timed out: {}", options_.endpoint, httplib::to_string(err)));
      }
      last_error = fmt::format("{}: {}", options_.endpoint, httplib::to_string(err));
    } else if (res->status >= 400 && res->status < 500) {
      throw BackendError(BackendError::Kind::kRejected,
                         fmt::format("{} rejected the request with HTTP {}: {}", options_.endpoint,
                                     res->status, res->body.substr(0, 500)));
    } else if (res->status >= 500) {
      last_error = fmt::format("{} answered HTTP {}", options_.endpoint, res->status);
    } else {
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::exception& e) {
        throw BackendError(BackendError::Kind::kRejected,
                           fmt::format("{} sent malformed JSON: {}", options_.endpoint, e.what()));
      }
    }
    if (attempt < options_.attempts) {
      spdlog::warn("backend attempt {}/{} failed ({}); retrying in {} ms", attempt,
                   options_.attempts, last_error, backoff.count());
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw BackendError(BackendError::Kind::kTransport,
                     fmt::format("giving up after {} attempts: {}", options_.attempts, last_error));
}

std::vector<std::string> HttpBackend::complete(const CompletionRequest& request) {
  validate(request);
  auto body = to_json(request);
  if (!options_.completion_model.empty()) body["model"] = options_.completion_model;
  auto res = post(std::move(body));
  std::vector<std::string> out;
  try {
    for (const auto& s : res.at("samples")) {
      if (out.size() >= static_cast<std::size_t>(request.params.num_samples)) break;
      out.push_back(s.get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(BackendError::Kind::kRejected, std::string("bad completion response: ") + e.what());
  }
  return out;
}

std::vector<std::vector<std::string>> HttpBackend::infill(const InfillRequest& request) {
  validate(request);
  auto body = to_json(request);
  if (!options_.infill_model.empty()) body["model"] = options_.infill_model;
  auto res = post(std::move(body));
  std::vector<std::vector<std::string>> samples;
  try {
    for (const auto& s : res.at("samples")) {
      if (samples.size() >= static_cast<std::size_t>(request.params.num_samples)) break;
      if (s.is_string()) {
        samples.push_back({s.get<std::string>()});
      } else if (s.is_array() && std::all_of(s.begin(), s.end(), [](const auto& x) { return x.is_string(); })) {
        samples.push_back(s.get<std::vector<std::string>>());
      } else {
        samples.emplace_back();  // dropped below as malformed
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(BackendError::Kind::kRejected, std::string("bad infill response: ") + e.what());
  }
  return keep_well_formed(std::move(samples), request.placeholder_count());
}

}  // namespace evofuzz::genbackend

#include "lac/http_backend.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <httplib.h>

namespace lac {

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* value = std::getenv(name);
  return value != nullptr && *value != '\0' ? value : fallback;
}

}  // namespace

HttpBackendConfig HttpBackendConfig::from_environment() {
  HttpBackendConfig cfg;
  cfg.base_url = env_or("LAC_BACKEND_URL", cfg.base_url);
  cfg.model = env_or("LAC_MODEL", cfg.model);
  cfg.api_key = env_or("LAC_API_KEY", cfg.api_key);
  try {
    cfg.timeout_ms = std::stoi(env_or("LAC_TIMEOUT_MS",
                                      std::to_string(cfg.timeout_ms)));
    cfg.retries = std::stoi(env_or("LAC_RETRIES", std::to_string(cfg.retries)));
  } catch (const std::exception&) {
    throw ConfigError("LAC_TIMEOUT_MS and LAC_RETRIES must be integers");
  }
  return cfg;
}

HttpBackendConfig HttpBackendConfig::from_json(const json& j) {
  HttpBackendConfig cfg = from_environment();
  cfg.base_url = j.value("base_url", cfg.base_url);
  cfg.model = j.value("model", cfg.model);
  cfg.api_key = j.value("api_key", cfg.api_key);
  cfg.timeout_ms = j.value("timeout_ms", cfg.timeout_ms);
  cfg.retries = j.value("retries", cfg.retries);
  return cfg;
}

HttpBackend::HttpBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)) {
  // Split scheme://host:port from any base path.
  std::string url = cfg_.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  const size_t scheme = url.find("://");
  const size_t path_start =
      url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path_start == std::string::npos) {
    host_ = url;
  } else {
    host_ = url.substr(0, path_start);
    path_ = url.substr(path_start);
  }
}

json HttpBackend::post_completion(const json& body) {
  httplib::Client client(host_);
  client.set_connection_timeout(cfg_.timeout_ms / 1000,
                                (cfg_.timeout_ms % 1000) * 1000);
  client.set_read_timeout(cfg_.timeout_ms / 1000, (cfg_.timeout_ms % 1000) * 1000);
  httplib::Headers headers;
  if (!cfg_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + cfg_.api_key);
  }

  const std::string payload = body.dump();
  std::string last_error;
  for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
    auto res = client.Post(path_ + "/completions", headers, payload,
                           "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "server error " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw ProtocolError("completions request failed with status " +
                          std::to_string(res->status) + ": " + res->body);
    }
    try {
      return json::parse(res->body);
    } catch (const json::exception& e) {
      throw ProtocolError(std::string("malformed completions response: ") +
                          e.what());
    }
  }
  throw BackendError("completions request failed after retries: " + last_error,
                     /*retryable=*/true);
}

GenerationResult HttpBackend::generate(const GenerationRequest& req) {
  if (req.prompt.empty()) throw ValidationError("generate: empty prompt");
  if (req.max_tokens < 1) throw ValidationError("generate: max_tokens < 1");

  json body{{"model", cfg_.model},
            {"prompt", req.prompt},
            {"max_tokens", req.max_tokens},
            {"temperature", req.temperature},
            {"logprobs", 1},
            {"echo", false}};
  if (!req.stop.empty()) body["stop"] = req.stop;

  const json reply = post_completion(body);
  GenerationResult result;
  try {
    const json& choice = reply.at("choices").at(0);
    result.text = choice.at("text").get<std::string>();
    if (choice.contains("logprobs") && !choice.at("logprobs").is_null()) {
      for (const json& lp : choice.at("logprobs").value("token_logprobs",
                                                        json::array())) {
        result.token_logprobs.push_back(lp.is_null() ? 0.0 : lp.get<double>());
      }
    }
    if (reply.contains("usage")) {
      result.total_tokens = reply.at("usage").value("total_tokens", 0);
    }
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed completions response: ") +
                        e.what());
  }
  if (result.total_tokens <
      static_cast<std::int64_t>(result.token_logprobs.size())) {
    result.total_tokens =
        static_cast<std::int64_t>(result.token_logprobs.size());
  }
  // Honor stop strings even if the server echoed one back.
  for (const std::string& stop : req.stop) {
    if (stop.empty()) continue;
    const size_t pos = result.text.find(stop);
    if (pos != std::string::npos) result.text.resize(pos);
  }
  return result;
}

double HttpBackend::score_continuation(const std::string& prompt,
                                       const std::string& continuation) {
  if (continuation.empty()) {
    throw ValidationError("score_continuation: empty continuation");
  }
  const json body{{"model", cfg_.model},
                  {"prompt", prompt + continuation},
                  {"max_tokens", 0},
                  {"temperature", 0.0},
                  {"logprobs", 1},
                  {"echo", true}};
  const json reply = post_completion(body);
  try {
    const json& logprobs = reply.at("choices").at(0).at("logprobs");
    if (logprobs.is_null()) {
      throw UnsupportedCapabilityError("backend returned no echo logprobs");
    }
    const json& tokens = logprobs.at("tokens");
    const json& token_logprobs = logprobs.at("token_logprobs");
    // Token offsets reconstructed from token text lengths.
    size_t offset = 0;
    double total = 0.0;
    for (size_t i = 0; i < tokens.size(); ++i) {
      const size_t token_len = tokens.at(i).get<std::string>().size();
      if (offset >= prompt.size()) {
        const json& lp = token_logprobs.at(i);
        total += lp.is_null() ? 0.0 : lp.get<double>();
      }
      offset += token_len;
    }
    return total;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed echo-scoring response: ") +
                        e.what());
  }
}

std::vector<TokenProb> HttpBackend::next_token_probs(const TokenQuery& query) {
  if (query.candidate_tokens.empty()) {
    throw ValidationError("next_token_probs: no candidate tokens");
  }
  const json body{{"model", cfg_.model},
                  {"prompt", query.prompt},
                  {"max_tokens", 1},
                  {"temperature", 0.0},
                  {"logprobs", cfg_.top_logprobs},
                  {"echo", false}};
  const json reply = post_completion(body);
  json top;
  try {
    const json& logprobs = reply.at("choices").at(0).at("logprobs");
    if (logprobs.is_null() || !logprobs.contains("top_logprobs") ||
        logprobs.at("top_logprobs").empty()) {
      throw UnsupportedCapabilityError("backend returned no top logprobs");
    }
    top = logprobs.at("top_logprobs").at(0);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed logprobs response: ") + e.what());
  }

  std::vector<TokenProb> out;
  out.reserve(query.candidate_tokens.size());
  for (const std::string& candidate : query.candidate_tokens) {
    const std::string key = normalize_token(candidate);
    double p = 0.0;
    for (const auto& [token, logprob] : top.items()) {
      if (normalize_token(token) == key) p += std::exp(logprob.get<double>());
    }
    out.push_back({candidate, std::max(p, kEpsilonFloor)});
  }
  return out;
}

std::vector<TokenProb> HttpBackend::top_next_tokens(const std::string& prompt,
                                                    int k) {
  const json body{{"model", cfg_.model},
                  {"prompt", prompt},
                  {"max_tokens", 1},
                  {"temperature", 0.0},
                  {"logprobs", cfg_.top_logprobs},
                  {"echo", false}};
  const json reply = post_completion(body);
  std::vector<TokenProb> out;
  try {
    const json& logprobs = reply.at("choices").at(0).at("logprobs");
    if (logprobs.is_null() || !logprobs.contains("top_logprobs") ||
        logprobs.at("top_logprobs").empty()) {
      throw UnsupportedCapabilityError("backend returned no top logprobs");
    }
    for (const auto& [token, logprob] :
         logprobs.at("top_logprobs").at(0).items()) {
      out.push_back({token, std::exp(logprob.get<double>())});
    }
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed logprobs response: ") + e.what());
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const TokenProb& a, const TokenProb& b) {
                     return a.probability > b.probability;
                   });
  if (static_cast<int>(out.size()) > k) out.resize(static_cast<size_t>(k));
  return out;
}

}  // namespace lac

#pragma once

#include <string>

#include "lac/backend.hpp"
#include "lac/types.hpp"

namespace lac {

struct HttpBackendConfig {
  std::string base_url = "http://localhost:8000";
  std::string model = "local";
  std::string api_key;
  int timeout_ms = 30000;
  int retries = 2;
  int top_logprobs = kTopLogprobs;

  // Reads base_url/model/api_key/timeout_ms/retries keys; falls back to the
  // LAC_BACKEND_URL / LAC_MODEL / LAC_API_KEY environment variables.
  static HttpBackendConfig from_json(const json& j);
  static HttpBackendConfig from_environment();
};

// OpenAI-completions-compatible client: POST {base_url}/completions with
// model, prompt, max_tokens, temperature, stop, logprobs, echo; reads
// choices[0].text and choices[0].logprobs.{tokens, token_logprobs,
// top_logprobs}.
//
// score_continuation echo-scores prompt+continuation and sums the token
// logprobs past the prompt boundary (token offsets reconstructed from token
// lengths). next_token_probs sums top-k alternatives whose text, trimmed and
// case-folded, equals the candidate; absent candidates get kEpsilonFloor.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig cfg);

  GenerationResult generate(const GenerationRequest& req) override;
  double score_continuation(const std::string& prompt,
                            const std::string& continuation) override;
  std::vector<TokenProb> next_token_probs(const TokenQuery& query) override;
  std::vector<TokenProb> top_next_tokens(const std::string& prompt,
                                         int k) override;
  std::string name() const override { return "http"; }

 private:
  json post_completion(const json& body);

  HttpBackendConfig cfg_;
  std::string host_;   // scheme://host:port
  std::string path_;   // base path prefix, usually empty or /v1
};

}  // namespace lac

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lac/error.hpp"

namespace lac {

// Floor probability for candidate tokens missing from a backend's
// distribution. Keeps the success/failure log-ratio finite.
inline constexpr double kEpsilonFloor = 1e-10;

// Number of top next-token alternatives requested from logprob-capable
// backends.
inline constexpr int kTopLogprobs = 20;

struct GenerationRequest {
  std::string prompt;
  int max_tokens = 64;        // >= 1
  double temperature = 0.0;   // 0 => deterministic
  std::vector<std::string> stop;
};

struct GenerationResult {
  std::string text;
  std::vector<double> token_logprobs;  // natural log, each <= 0
  std::int64_t total_tokens = 0;       // >= token_logprobs.size()
};

struct TokenQuery {
  std::string prompt;
  std::vector<std::string> candidate_tokens;  // distinct after normalization
};

struct TokenProb {
  std::string token;
  double probability = 0.0;
};

// Uniform token-logprob interface to language models. Implementations must
// accept concurrent in-flight requests; each request is independent.
class Backend {
 public:
  virtual ~Backend() = default;

  // Deterministic for temperature 0 and fixed backend state; honors stop
  // strings (the returned text contains no stop string).
  virtual GenerationResult generate(const GenerationRequest& req) = 0;

  // Sum of per-token natural-log probabilities of `continuation` given
  // `prompt` (the log of the token-probability product). Always <= 0.
  virtual double score_continuation(const std::string& prompt,
                                    const std::string& continuation) = 0;

  // One probability in [0, 1] per candidate token, in query order. Candidates
  // the backend cannot see receive kEpsilonFloor.
  virtual std::vector<TokenProb> next_token_probs(const TokenQuery& query) = 0;

  // Top next-token alternatives at the end of `prompt`, most probable first.
  // Used by the actor to find the first divergence point among candidate
  // actions. Optional capability.
  virtual std::vector<TokenProb> top_next_tokens(const std::string& prompt,
                                                 int k) {
    (void)prompt;
    (void)k;
    throw UnsupportedCapabilityError(name() +
                                     " backend does not expose top next-token "
                                     "alternatives");
  }

  virtual std::string name() const = 0;
};

// Whitespace-word count; the unit of token accounting for backends without a
// real tokenizer.
std::int64_t approx_token_count(const std::string& text);

}  // namespace lac

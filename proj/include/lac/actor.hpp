#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lac/backend.hpp"
#include "lac/prompt.hpp"
#include "lac/types.hpp"

namespace lac {

struct ActorConfig {
  int num_candidates = 5;        // n; >= 1
  int max_action_tokens = 16;
  int max_resample_attempts = 12;
};

struct ScoredAction {
  std::string action;
  double prior_logprob = 0.0;
};

// Prior log-probability of `action` given the history's action prompt:
// score_continuation over the action tokens.
double action_logprob(const History& history, const std::string& action,
                      const PromptTemplate& tmpl, Backend& backend,
                      bool include_reflections = true);

// Samples up to cfg.num_candidates distinct candidate actions from the prior
// policy. Diversity at temperature 0 comes from the backend's next-token
// alternatives at the first divergence point: the top-n distinct first
// tokens, each completed greedily. Result is deduplicated under
// normalize_action and sorted by descending prior log-probability. Never
// empty: falls back to the greedy action when the backend exposes no
// alternatives. Throws ActorExhaustedError when no action is producible.
std::vector<ScoredAction> sample_candidates(const History& history,
                                            const ActorConfig& cfg,
                                            const PromptTemplate& tmpl,
                                            Backend& backend,
                                            bool include_reflections = true);

}  // namespace lac

#pragma once

#include <string>
#include <utility>

#include "lac/backend.hpp"
#include "lac/prompt.hpp"
#include "lac/types.hpp"

namespace lac {

struct MarkerPair {
  std::string positive = "GOOD";
  std::string negative = "BAD";

  bool valid() const {
    return normalize_token(positive) != normalize_token(negative);
  }
};

// Raw marker masses as read from the backend's next-token distribution,
// before pair-normalization. Kept separate from OutcomeBelief because the
// log p_w critic variant ranks by the raw positive mass.
struct MarkerProbs {
  double positive = 0.0;
  double negative = 0.0;
};

// Reads both marker probabilities at the judgment position (the prompt must
// end with "This step is "), clamped to kEpsilonFloor.
MarkerProbs marker_probs(const std::string& context_prompt,
                         const MarkerPair& markers, Backend& backend);

// Marker probabilities normalized to a proper success/failure distribution.
// Normalization leaves the success/failure log-ratio unchanged.
OutcomeBelief outcome_belief(const std::string& context_prompt,
                             const MarkerPair& markers, Backend& backend);

// ln(p_success) - ln(p_failure); the inverse of the logistic link.
double q_value(const OutcomeBelief& belief);

// Context for a rollout-informed judgment: the history, the candidate action,
// and the predicted future steps, ending exactly at the judgment anchor
// "This step is ". With an empty rollout the judgment rests on (goal,
// history, action) alone.
std::string judgment_prompt(const History& history, const std::string& action,
                            const RolloutTrajectory& rollout,
                            const PromptTemplate& tmpl,
                            bool include_reflections = true);

// Rollout-informed Q estimate: belief at the final judgment position of the
// predicted trajectory, plus its log-ratio value.
std::pair<OutcomeBelief, double> q_with_rollout(const History& history,
                                                const std::string& action,
                                                const RolloutTrajectory& rollout,
                                                const MarkerPair& markers,
                                                const PromptTemplate& tmpl,
                                                Backend& backend,
                                                bool include_reflections = true);

// The simplest critic variant: ln(p_success).
double q_variant_logpw(const OutcomeBelief& belief);

// Same variant on the raw positive marker mass; this is the form whose
// candidate ranking can diverge from the log-ratio critic.
double q_variant_logpw_raw(const MarkerProbs& raw);

// Builds the prompt that asks the model to state a success probability
// directly (the direct-evaluation critic variant).
std::string direct_eval_prompt(const History& history, const std::string& action,
                               const RolloutTrajectory& rollout,
                               const PromptTemplate& tmpl,
                               bool include_reflections = true);

// Generates from the backend and parses a probability out of the text.
// Unparseable or out-of-range output falls back to p = 0.5 (q = 0). Returns
// logit(p) with p clamped to [kEpsilonFloor, 1 - kEpsilonFloor].
double q_direct_eval(const std::string& context_prompt, Backend& backend);

}  // namespace lac

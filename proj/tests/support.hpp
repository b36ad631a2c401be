#pragma once

// Shared scripted-scenario builders for the unit and acceptance suites.

#include <cmath>
#include <string>
#include <vector>

#include "lac/harness.hpp"
#include "lac/prompt.hpp"
#include "lac/scripted_backend.hpp"

namespace lac_test {

inline lac::History fixed_history() {
  lac::History h;
  h.goal.text = "reach the exit";
  h.initial_observation = "You see a hallway.";
  return h;
}

// A one-step decision scenario over single-word candidate actions with the
// given prior probabilities and q-values. Rollouts terminate at depth 1 with
// a GOOD reflection; judgment prompts carry the candidate's action line, so
// marker rules can address each candidate separately.
inline lac::ScriptedBackend decision_backend(
    const std::vector<std::string>& actions, const std::vector<double>& priors,
    const std::vector<double>& qs) {
  lac::ScriptedBackend backend;
  std::vector<lac::TokenProb> tokens;
  for (size_t i = 0; i < actions.size(); ++i) {
    tokens.push_back({actions[i], priors[i]});
  }
  backend.add_top_token_rule({"", lac::labels::kAction}, tokens);
  for (size_t i = 0; i < actions.size(); ++i) {
    const std::string action_line =
        std::string(lac::labels::kAction) + actions[i];
    backend.add_generation_rule({"", action_line}, "");
    backend.add_continuation_score({"", ""}, actions[i], std::log(priors[i]));
    const double p_good = 1.0 / (1.0 + std::exp(-qs[i]));
    backend.add_token_prob_rule({action_line + "\n", ""},
                                {{"GOOD", p_good}, {"BAD", 1.0 - p_good}});
  }
  backend.add_generation_rule({"", lac::labels::kObservation}, "OK.");
  backend.add_generation_rule({"", lac::labels::kCritic},
                              "Looks promising. This step is GOOD.");
  backend.set_default_generation("OK.");
  return backend;
}

}  // namespace lac_test

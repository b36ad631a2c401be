#pragma once

#include <string>

#include "lac/backend.hpp"
#include "lac/prompt.hpp"
#include "lac/types.hpp"

namespace lac {

struct RolloutConfig {
  int max_depth = 4;               // >= 1
  bool include_reflections = true;
  int max_text_tokens = 96;        // per generated observation/reflection line
};

// Predicts the future trajectory of one candidate action by alternately
// generating observation, reflection, and next action from the backend. The
// first predicted step corresponds to executing `action`. Stops at the first
// GOOD/BAD reflection or at max_depth (terminated_by = DEPTH_LIMIT). Never
// touches the real environment.
//
// A backend failure mid-rollout yields the partial trajectory with
// terminated_by = DEPTH_LIMIT and backend_error set.
RolloutTrajectory rollout(const History& history, const std::string& action,
                          const RolloutConfig& cfg, const PromptTemplate& tmpl,
                          Backend& backend);

}  // namespace lac

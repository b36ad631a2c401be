#pragma once

#include <string>
#include <vector>

#include "lac/backend.hpp"
#include "lac/gridworld.hpp"

namespace lac {

struct OracleConfig {
  // Probability that the prior's top action at a step is resampled uniformly
  // from the 6 primitives instead of the planner's choice. Corrupts only the
  // prior surfaces (score_continuation, top_next_tokens); generation and
  // judgments stay exact.
  double prior_noise = 0.0;
  // Probability that a judgment belief is flipped (success <-> failure).
  double critic_noise_rate = 0.0;
  // Prior's top action becomes the distance-maximizing primitive. Used to
  // produce deliberately failing trajectories.
  bool adversarial_prior = false;
  // Prior mass on the top action; the remainder is spread over the other 5.
  double top_action_mass = 0.7;
  // Judgment calibration: p_success = sigmoid(kappa * (d_prev - d) +
  // beta / (1 + d)), clamped toward the emitted GOOD/BAD label.
  double kappa = 2.0;
  double beta = 2.0;
};

// Ground-truth backend over a gridworld state mirror. Every query carries the
// full trajectory in its prompt; the oracle replays the prompt's action lines
// from the episode's initial state, so calls are pure and safe to issue
// concurrently. Prompts must use the engine's trajectory grammar; observation
// lines that contradict the replay raise OracleDesyncError.
class OracleBackend final : public Backend {
 public:
  OracleBackend(grid::GridState initial, OracleConfig cfg = {});

  GenerationResult generate(const GenerationRequest& req) override;
  double score_continuation(const std::string& prompt,
                            const std::string& continuation) override;
  std::vector<TokenProb> next_token_probs(const TokenQuery& query) override;
  std::vector<TokenProb> top_next_tokens(const std::string& prompt,
                                         int k) override;
  std::string name() const override { return "oracle"; }

  const grid::GridState& initial_state() const { return initial_; }

 private:
  struct Replay {
    grid::GridState state;        // after all complete action lines
    std::string last_observation; // outcome text of the last action
    int dist_before_last = 0;     // clamped task distance before the last action
    int dist_after_last = 0;      // and after it
    bool last_had_effect = true;
    bool last_completed_subtask = false;
    bool has_actions = false;
  };

  Replay replay_prompt(const std::string& prompt) const;
  std::vector<double> prior_distribution(const std::string& prompt,
                                         const grid::GridState& state) const;
  double judgment_success_probability(const std::string& prompt) const;

  grid::GridState initial_;
  OracleConfig cfg_;
};

}  // namespace lac

#include "lac/oracle_backend.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "lac/prompt.hpp"

namespace lac {

namespace {

// Distances fed into the calibration are clamped so unreachable sentinels do
// not blow up the sigmoid.
constexpr int kDistanceCap = 200;

std::uint64_t fnv1a(const std::string& s, std::uint64_t seed) {
  std::uint64_t h = 1469598103934665603ull ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Deterministic uniform draw in [0, 1) from a string.
double unit_hash(const std::string& s, std::uint64_t seed) {
  return static_cast<double>(fnv1a(s, seed) >> 11) * 0x1.0p-53;
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

int clamped_distance(const grid::GridState& state) {
  return std::min(state.done ? 0 : grid::task_distance(state), kDistanceCap);
}

bool same_configuration(const grid::GridState& a, const grid::GridState& b);

// The deliberately failing policy: maximize the remaining distance, and when
// nothing increases it anymore, waste the step outright.
std::string adversarial_action(const grid::GridState& state) {
  int worst = -1;
  bool worst_wasted = false;
  std::string pick;
  for (const char* prim : grid::kPrimitives) {
    grid::GridState next = state;
    grid::step_state(next, prim);
    const int d = clamped_distance(next);
    const bool wasted = same_configuration(state, next);
    if (d > worst || (d == worst && wasted && !worst_wasted)) {
      worst = d;
      worst_wasted = wasted;
      pick = prim;
    }
  }
  return pick;
}

bool same_configuration(const grid::GridState& a, const grid::GridState& b) {
  if (a.agent_x != b.agent_x || a.agent_y != b.agent_y ||
      a.agent_dir != b.agent_dir || a.carried != b.carried ||
      a.task_stage != b.task_stage || a.done != b.done ||
      a.objects.size() != b.objects.size()) {
    return false;
  }
  for (size_t i = 0; i < a.objects.size(); ++i) {
    if (!(a.objects[i].what == b.objects[i].what) ||
        a.objects[i].x != b.objects[i].x || a.objects[i].y != b.objects[i].y) {
      return false;
    }
  }
  return true;
}

struct PromptLines {
  std::vector<std::string> actions;        // complete action lines, in order
  std::vector<std::string> observations;   // complete observation lines
  std::string dangling;                    // the final, unterminated line
};

PromptLines split_live_block(const std::string& prompt) {
  // The live task starts at the last goal line; earlier goal lines belong to
  // few-shot examples and are not replayed.
  size_t start = prompt.rfind(std::string("\n") + labels::kGoal);
  if (start == std::string::npos) {
    start = prompt.rfind(labels::kGoal, 0) == 0 ? 0 : std::string::npos;
  } else {
    start += 1;
  }
  if (start == std::string::npos) {
    throw OracleDesyncError("prompt has no goal line");
  }

  PromptLines out;
  size_t pos = start;
  while (true) {
    const size_t nl = prompt.find('\n', pos);
    const bool last = nl == std::string::npos;
    const std::string line =
        last ? prompt.substr(pos) : prompt.substr(pos, nl - pos);
    if (last) {
      out.dangling = line;
      break;
    }
    if (line.rfind(labels::kAction, 0) == 0) {
      out.actions.push_back(line.substr(std::string(labels::kAction).size()));
    } else if (line.rfind(labels::kObservation, 0) == 0) {
      out.observations.push_back(
          line.substr(std::string(labels::kObservation).size()));
    }
    pos = nl + 1;
  }
  return out;
}

const std::string kPositiveTokens[] = {"good", "success"};
const std::string kNegativeTokens[] = {"bad", "failure"};

bool is_positive_marker(const std::string& token) {
  const std::string key = normalize_token(token);
  return std::find(std::begin(kPositiveTokens), std::end(kPositiveTokens),
                   key) != std::end(kPositiveTokens);
}

bool is_negative_marker(const std::string& token) {
  const std::string key = normalize_token(token);
  return std::find(std::begin(kNegativeTokens), std::end(kNegativeTokens),
                   key) != std::end(kNegativeTokens);
}

}  // namespace

OracleBackend::OracleBackend(grid::GridState initial, OracleConfig cfg)
    : initial_(std::move(initial)), cfg_(cfg) {}

OracleBackend::Replay OracleBackend::replay_prompt(const std::string& prompt) const {
  const PromptLines lines = split_live_block(prompt);

  Replay r;
  r.state = initial_;
  r.last_observation = grid::render_observation(initial_);
  size_t obs_index = 0;
  // The first observation line is the reset observation.
  if (!lines.observations.empty()) {
    if (lines.observations[0] != r.last_observation) {
      throw OracleDesyncError("initial observation does not match the mirror");
    }
    obs_index = 1;
  }

  grid::GridState before_last = initial_;
  for (const std::string& action : lines.actions) {
    before_last = r.state;
    const grid::EnvStepOutcome outcome = grid::step_state(r.state, action);
    r.last_observation = outcome.observation_text;
    r.has_actions = true;
    if (obs_index < lines.observations.size()) {
      if (lines.observations[obs_index] != outcome.observation_text) {
        throw OracleDesyncError("observation line does not match the mirror "
                                "replay");
      }
      ++obs_index;
    }
  }

  // Distances are needed only around the last action; computing them per
  // replayed step would make every query quadratic in the history.
  r.dist_before_last = clamped_distance(before_last);
  r.dist_after_last = clamped_distance(r.state);
  if (r.has_actions) {
    r.last_had_effect = !same_configuration(before_last, r.state);
    r.last_completed_subtask = (!before_last.done && r.state.done) ||
                               r.state.task_stage != before_last.task_stage;
  }
  return r;
}

std::vector<double> OracleBackend::prior_distribution(
    const std::string& prompt, const grid::GridState& state) const {
  std::string top;
  if (cfg_.adversarial_prior) {
    top = adversarial_action(state);
  } else {
    top = grid::optimal_action(state);
  }
  if (cfg_.prior_noise > 0.0 && unit_hash(prompt, 0x9e3779b9) < cfg_.prior_noise) {
    const std::uint64_t pick = fnv1a(prompt, 0x7f4a7c15) % 6;
    top = grid::kPrimitives[pick];
  }

  std::vector<double> probs(grid::kPrimitives.size());
  const double rest =
      (1.0 - cfg_.top_action_mass) / static_cast<double>(probs.size() - 1);
  for (size_t i = 0; i < probs.size(); ++i) {
    probs[i] = grid::kPrimitives[i] == top ? cfg_.top_action_mass : rest;
  }
  return probs;
}

double OracleBackend::judgment_success_probability(const std::string& prompt) const {
  const Replay r = replay_prompt(prompt);
  const int delta = r.dist_before_last - r.dist_after_last;
  // A step with no effect wasted one action: score it like a one-step
  // setback so the belief still tracks the remaining distance. On a context
  // whose task is already complete nothing can be wasted anymore.
  const double effective_delta =
      (r.has_actions && !r.last_had_effect && !r.state.done)
          ? -1.0
          : static_cast<double>(delta);
  double p = stable_sigmoid(cfg_.kappa * effective_delta +
                            cfg_.beta / (1.0 + r.dist_after_last));
  if (r.state.done || (r.has_actions && r.last_had_effect &&
                       (r.last_completed_subtask || delta > 0))) {
    p = std::max(p, 0.9);  // the judgment the GOOD reflection announced
  }
  if (cfg_.critic_noise_rate > 0.0 &&
      unit_hash(prompt, 0xc2b2ae35) < cfg_.critic_noise_rate) {
    p = 1.0 - p;
  }
  return std::clamp(p, kEpsilonFloor, 1.0 - kEpsilonFloor);
}

GenerationResult OracleBackend::generate(const GenerationRequest& req) {
  if (req.prompt.empty()) throw ValidationError("generate: empty prompt");

  const PromptLines lines = split_live_block(req.prompt);
  const std::string& dangling = lines.dangling;
  GenerationResult result;

  auto finish = [&](std::string text) {
    for (const std::string& stop : req.stop) {
      if (stop.empty()) continue;
      const size_t pos = text.find(stop);
      if (pos != std::string::npos) text.resize(pos);
    }
    result.text = std::move(text);
    const std::int64_t words = approx_token_count(result.text);
    result.token_logprobs.assign(
        static_cast<size_t>(std::min<std::int64_t>(words, req.max_tokens)), 0.0);
    result.total_tokens = approx_token_count(req.prompt) + words;
    return result;
  };

  if (dangling.rfind(labels::kAction, 0) == 0) {
    const Replay r = replay_prompt(req.prompt);
    const std::string partial =
        dangling.substr(std::string(labels::kAction).size());
    if (partial.empty()) {
      // Bare next-action generation (the world model's rollouts) predicts the
      // agent's own future behavior: the planner's action normally, the
      // distance-maximizing one for the adversarial stand-in. prior_noise
      // stays out of rollouts so the critic remains exact under a corrupted
      // prior.
      if (cfg_.adversarial_prior) return finish(adversarial_action(r.state));
      return finish(grid::optimal_action(r.state));
    }
    // Partial completions serve the actor's candidate discovery and follow
    // the prior's preference among prefix-matching primitives; planner
    // lookahead breaks ties.
    const std::vector<double> probs = prior_distribution(req.prompt, r.state);
    double best_prob = -1.0;
    int best_total = grid::kUnreachable + 1;
    std::string best;
    for (size_t i = 0; i < grid::kPrimitives.size(); ++i) {
      const std::string p(grid::kPrimitives[i]);
      if (p.rfind(partial, 0) != 0) continue;
      grid::GridState next = r.state;
      grid::step_state(next, p);
      const int d = 1 + clamped_distance(next);
      if (probs[i] > best_prob || (probs[i] == best_prob && d < best_total)) {
        best_prob = probs[i];
        best_total = d;
        best = p;
      }
    }
    if (best.empty()) return finish("");
    return finish(best.substr(partial.size()));
  }

  if (dangling.rfind(trim(labels::kObservation), 0) == 0) {
    // Predict the observation of the last action line by simulating it.
    return finish(replay_prompt(req.prompt).last_observation);
  }

  if (dangling.rfind(trim(labels::kCritic), 0) == 0) {
    const Replay r = replay_prompt(req.prompt);
    const int delta = r.dist_before_last - r.dist_after_last;
    std::string text;
    if (!r.has_actions) {
      text = "There is nothing to judge yet. This step is UNKNOWN.";
    } else if (r.state.done) {
      text = "I have completed the task. This step is GOOD.";
    } else if (!r.last_had_effect) {
      text = "That action had no effect. This step is BAD.";
    } else if (r.last_completed_subtask) {
      text = "I have picked up the object I need. This step is GOOD.";
    } else if (delta > 0) {
      text = "I am getting closer to the target. This step is GOOD.";
    } else if (delta < 0) {
      text = "I am moving away from the target. This step is BAD.";
    } else {
      text = "I cannot tell if this helps. This step is UNKNOWN.";
    }
    return finish(text);
  }

  if (dangling.rfind("Probability:", 0) == 0) {
    const double p = judgment_success_probability(req.prompt);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", p);
    return finish(buf);
  }

  throw OracleDesyncError("oracle cannot answer a prompt ending with: " +
                          dangling);
}

double OracleBackend::score_continuation(const std::string& prompt,
                                         const std::string& continuation) {
  if (continuation.empty()) {
    throw ValidationError("score_continuation: empty continuation");
  }
  const PromptLines lines = split_live_block(prompt);
  if (lines.dangling.rfind(trim(labels::kAction), 0) != 0) {
    throw UnsupportedCapabilityError("oracle scores only action continuations");
  }
  const Replay r = replay_prompt(prompt);
  const std::vector<double> probs = prior_distribution(prompt, r.state);
  const std::string action = normalize_action(continuation);
  for (size_t i = 0; i < grid::kPrimitives.size(); ++i) {
    if (action == grid::kPrimitives[i]) {
      return std::log(std::max(probs[i], kEpsilonFloor));
    }
  }
  return std::log(kEpsilonFloor);
}

std::vector<TokenProb> OracleBackend::next_token_probs(const TokenQuery& query) {
  if (query.candidate_tokens.empty()) {
    throw ValidationError("next_token_probs: no candidate tokens");
  }
  const PromptLines lines = split_live_block(query.prompt);
  if (lines.dangling.find(kJudgmentAnchor) == std::string::npos) {
    throw UnsupportedCapabilityError(
        "oracle answers token queries only at judgment positions");
  }
  const double p = judgment_success_probability(query.prompt);
  std::vector<TokenProb> out;
  out.reserve(query.candidate_tokens.size());
  for (const std::string& token : query.candidate_tokens) {
    double prob = kEpsilonFloor;
    if (is_positive_marker(token)) prob = p;
    if (is_negative_marker(token)) prob = 1.0 - p;
    out.push_back({token, prob});
  }
  return out;
}

std::vector<TokenProb> OracleBackend::top_next_tokens(const std::string& prompt,
                                                      int k) {
  const PromptLines lines = split_live_block(prompt);
  if (lines.dangling.rfind(trim(labels::kAction), 0) != 0) {
    throw UnsupportedCapabilityError(
        "oracle exposes next-token alternatives only at action positions");
  }
  const Replay r = replay_prompt(prompt);
  const std::vector<double> probs = prior_distribution(prompt, r.state);

  // Aggregate primitive mass by first word ("turn" covers both turns).
  std::vector<TokenProb> words;
  for (size_t i = 0; i < grid::kPrimitives.size(); ++i) {
    const std::string prim = grid::kPrimitives[i];
    const std::string word = prim.substr(0, prim.find(' '));
    bool merged = false;
    for (TokenProb& tp : words) {
      if (tp.token == word) {
        tp.probability += probs[i];
        merged = true;
        break;
      }
    }
    if (!merged) words.push_back({word, probs[i]});
  }
  std::stable_sort(words.begin(), words.end(),
                   [](const TokenProb& a, const TokenProb& b) {
                     return a.probability > b.probability;
                   });
  if (static_cast<int>(words.size()) > k) words.resize(static_cast<size_t>(k));
  return words;
}

}  // namespace lac

#include "lac/actor.hpp"

#include <algorithm>
#include <set>

#include "lac/error.hpp"

namespace lac {

namespace {

std::string greedy_completion(Backend& backend, const std::string& prompt,
                              int max_tokens) {
  GenerationRequest req;
  req.prompt = prompt;
  req.max_tokens = max_tokens;
  req.stop = {"\n"};
  return backend.generate(req).text;
}

}  // namespace

double action_logprob(const History& history, const std::string& action,
                      const PromptTemplate& tmpl, Backend& backend,
                      bool include_reflections) {
  if (trim(action).empty()) throw ValidationError("cannot score an empty action");
  return backend.score_continuation(
      action_prompt(history, tmpl, include_reflections), action);
}

std::vector<ScoredAction> sample_candidates(const History& history,
                                            const ActorConfig& cfg,
                                            const PromptTemplate& tmpl,
                                            Backend& backend,
                                            bool include_reflections) {
  if (cfg.num_candidates < 1) {
    throw ValidationError("num_candidates must be >= 1");
  }
  const std::string prompt = action_prompt(history, tmpl, include_reflections);

  std::vector<std::string> raw_actions;
  bool have_alternatives = true;
  std::vector<TokenProb> first_tokens;
  try {
    first_tokens = backend.top_next_tokens(prompt, kTopLogprobs);
  } catch (const UnsupportedCapabilityError&) {
    have_alternatives = false;
  }

  if (have_alternatives) {
    // Top-n distinct first tokens, each greedily completed. Attempts beyond
    // n cover completions that collapse to duplicates under normalization.
    std::set<std::string> seen_tokens;
    int attempts = 0;
    for (const TokenProb& tp : first_tokens) {
      if (static_cast<int>(raw_actions.size()) >= cfg.num_candidates) break;
      if (attempts >= cfg.max_resample_attempts) break;
      const std::string token_key = normalize_token(tp.token);
      if (token_key.empty() || !seen_tokens.insert(token_key).second) continue;
      ++attempts;
      const std::string completion =
          greedy_completion(backend, prompt + tp.token,
                            cfg.max_action_tokens);
      const std::string action = normalize_action(tp.token + completion);
      if (!action.empty()) raw_actions.push_back(action);
    }
  }

  if (raw_actions.empty()) {
    const std::string greedy =
        normalize_action(greedy_completion(backend, prompt,
                                           cfg.max_action_tokens));
    if (greedy.empty()) {
      throw ActorExhaustedError("backend produced no candidate actions");
    }
    raw_actions.push_back(greedy);
  }

  std::vector<ScoredAction> scored;
  std::set<std::string> seen_actions;
  for (const std::string& action : raw_actions) {
    if (!seen_actions.insert(action).second) continue;
    scored.push_back({action, backend.score_continuation(prompt, action)});
  }

  std::stable_sort(scored.begin(), scored.end(),
                   [](const ScoredAction& a, const ScoredAction& b) {
                     return a.prior_logprob > b.prior_logprob;
                   });
  if (static_cast<int>(scored.size()) > cfg.num_candidates) {
    scored.resize(static_cast<size_t>(cfg.num_candidates));
  }
  return scored;
}

}  // namespace lac

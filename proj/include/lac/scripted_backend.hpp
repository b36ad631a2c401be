#pragma once

#include <map>
#include <string>
#include <vector>

#include "lac/backend.hpp"
#include "lac/types.hpp"

namespace lac {

// Rule-table backend for tests, demos, and offline runs. A rule matches a
// prompt when the prompt contains `contains` and ends with `suffix` (empty
// pattern = wildcard). Rules are checked in insertion order, first match
// wins. Immutable once handed to the engine; all queries are pure lookups.
class ScriptedBackend final : public Backend {
 public:
  struct Match {
    std::string contains;
    std::string suffix;
  };

  // --- rule construction ---------------------------------------------------

  void add_generation_rule(Match match, std::string text);
  void set_default_generation(std::string text);

  // Exact total logprob for a (prompt, continuation) pair; checked before the
  // per-word fallback.
  void add_continuation_score(Match match, std::string continuation,
                              double total_logprob);
  // Per-word probability used by the fallback scorer (product over words).
  void set_word_prob(std::string word, double prob);
  void set_default_word_prob(double prob);

  // Next-token distribution at prompts matching `match`.
  void add_token_prob_rule(Match match, std::map<std::string, double> probs);

  // Divergence-point alternatives for the actor.
  void add_top_token_rule(Match match, std::vector<TokenProb> tokens);

  // --- Backend -------------------------------------------------------------

  GenerationResult generate(const GenerationRequest& req) override;
  double score_continuation(const std::string& prompt,
                            const std::string& continuation) override;
  std::vector<TokenProb> next_token_probs(const TokenQuery& query) override;
  std::vector<TokenProb> top_next_tokens(const std::string& prompt,
                                         int k) override;
  std::string name() const override { return "scripted"; }

  // Loads rules from a JSON object; see README for the schema.
  static ScriptedBackend from_json_file(const std::string& path);
  static ScriptedBackend from_json(const json& spec);

 private:
  static bool matches(const Match& m, const std::string& prompt);

  struct GenerationRule {
    Match match;
    std::string text;
  };
  struct ScoreRule {
    Match match;
    std::string continuation;
    double total_logprob;
  };
  struct TokenProbRule {
    Match match;
    std::map<std::string, double> probs;
  };
  struct TopTokenRule {
    Match match;
    std::vector<TokenProb> tokens;
  };

  std::vector<GenerationRule> generation_rules_;
  std::string default_generation_;
  bool has_default_generation_ = false;
  std::vector<ScoreRule> score_rules_;
  std::map<std::string, double> word_probs_;
  double default_word_prob_ = 1.0;
  std::vector<TokenProbRule> token_prob_rules_;
  std::vector<TopTokenRule> top_token_rules_;
};

}  // namespace lac

#include "lac/scripted_backend.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "lac/types.hpp"

namespace lac {

std::int64_t approx_token_count(const std::string& text) {
  std::istringstream in(text);
  std::string word;
  std::int64_t n = 0;
  while (in >> word) ++n;
  return n;
}

bool ScriptedBackend::matches(const Match& m, const std::string& prompt) {
  if (!m.contains.empty() && prompt.find(m.contains) == std::string::npos) {
    return false;
  }
  if (!m.suffix.empty()) {
    if (prompt.size() < m.suffix.size()) return false;
    if (prompt.compare(prompt.size() - m.suffix.size(), m.suffix.size(),
                       m.suffix) != 0) {
      return false;
    }
  }
  return true;
}

void ScriptedBackend::add_generation_rule(Match match, std::string text) {
  generation_rules_.push_back({std::move(match), std::move(text)});
}

void ScriptedBackend::set_default_generation(std::string text) {
  default_generation_ = std::move(text);
  has_default_generation_ = true;
}

void ScriptedBackend::add_continuation_score(Match match, std::string continuation,
                                             double total_logprob) {
  score_rules_.push_back({std::move(match), std::move(continuation), total_logprob});
}

void ScriptedBackend::set_word_prob(std::string word, double prob) {
  word_probs_[std::move(word)] = prob;
}

void ScriptedBackend::set_default_word_prob(double prob) {
  default_word_prob_ = prob;
}

void ScriptedBackend::add_token_prob_rule(Match match,
                                          std::map<std::string, double> probs) {
  token_prob_rules_.push_back({std::move(match), std::move(probs)});
}

void ScriptedBackend::add_top_token_rule(Match match,
                                         std::vector<TokenProb> tokens) {
  top_token_rules_.push_back({std::move(match), std::move(tokens)});
}

GenerationResult ScriptedBackend::generate(const GenerationRequest& req) {
  if (req.prompt.empty()) throw ValidationError("generate: empty prompt");
  if (req.max_tokens < 1) throw ValidationError("generate: max_tokens < 1");

  std::string text;
  bool found = false;
  for (const auto& rule : generation_rules_) {
    if (matches(rule.match, req.prompt)) {
      text = rule.text;
      found = true;
      break;
    }
  }
  if (!found) {
    if (!has_default_generation_) {
      throw UnsupportedCapabilityError("scripted backend has no generation rule "
                                       "matching the prompt");
    }
    text = default_generation_;
  }

  for (const std::string& stop : req.stop) {
    if (stop.empty()) continue;
    const size_t pos = text.find(stop);
    if (pos != std::string::npos) text.resize(pos);
  }

  GenerationResult result;
  result.text = text;
  std::istringstream in(text);
  std::string word;
  int emitted = 0;
  while (in >> word && emitted < req.max_tokens) {
    const auto it = word_probs_.find(word);
    const double p = it != word_probs_.end() ? it->second : default_word_prob_;
    result.token_logprobs.push_back(std::log(p));
    ++emitted;
  }
  result.total_tokens = approx_token_count(req.prompt) +
                        static_cast<std::int64_t>(result.token_logprobs.size());
  return result;
}

double ScriptedBackend::score_continuation(const std::string& prompt,
                                           const std::string& continuation) {
  if (continuation.empty()) {
    throw ValidationError("score_continuation: empty continuation");
  }
  for (const auto& rule : score_rules_) {
    if (rule.continuation == continuation && matches(rule.match, prompt)) {
      return rule.total_logprob;
    }
  }
  double total = 0.0;
  std::istringstream in(continuation);
  std::string word;
  while (in >> word) {
    const auto it = word_probs_.find(word);
    const double p = it != word_probs_.end() ? it->second : default_word_prob_;
    total += std::log(std::max(p, kEpsilonFloor));
  }
  return total;
}

std::vector<TokenProb> ScriptedBackend::next_token_probs(const TokenQuery& query) {
  if (query.candidate_tokens.empty()) {
    throw ValidationError("next_token_probs: no candidate tokens");
  }
  const TokenProbRule* hit = nullptr;
  for (const auto& rule : token_prob_rules_) {
    if (matches(rule.match, query.prompt)) {
      hit = &rule;
      break;
    }
  }
  if (hit == nullptr) {
    throw UnsupportedCapabilityError("scripted backend has no token-probability "
                                     "rule matching the prompt");
  }
  std::vector<TokenProb> out;
  out.reserve(query.candidate_tokens.size());
  for (const std::string& cand : query.candidate_tokens) {
    const std::string key = normalize_token(cand);
    double p = kEpsilonFloor;
    for (const auto& [token, prob] : hit->probs) {
      if (normalize_token(token) == key) p = std::max(prob, kEpsilonFloor);
    }
    out.push_back({cand, p});
  }
  return out;
}

std::vector<TokenProb> ScriptedBackend::top_next_tokens(const std::string& prompt,
                                                        int k) {
  for (const auto& rule : top_token_rules_) {
    if (matches(rule.match, prompt)) {
      std::vector<TokenProb> out = rule.tokens;
      if (static_cast<int>(out.size()) > k) out.resize(static_cast<size_t>(k));
      return out;
    }
  }
  throw UnsupportedCapabilityError("scripted backend has no top-token rule "
                                   "matching the prompt");
}

ScriptedBackend ScriptedBackend::from_json(const json& spec) {
  ScriptedBackend backend;
  auto parse_match = [](const json& j) {
    Match m;
    m.contains = j.value("contains", "");
    m.suffix = j.value("suffix", "");
    return m;
  };
  for (const auto& j : spec.value("generation_rules", json::array())) {
    backend.add_generation_rule(parse_match(j), j.at("text").get<std::string>());
  }
  if (spec.contains("default_generation")) {
    backend.set_default_generation(spec.at("default_generation").get<std::string>());
  }
  for (const auto& j : spec.value("continuation_scores", json::array())) {
    backend.add_continuation_score(parse_match(j),
                                   j.at("continuation").get<std::string>(),
                                   j.at("logprob").get<double>());
  }
  const json word_probs = spec.value("word_probs", json::object());
  for (const auto& [word, prob] : word_probs.items()) {
    backend.set_word_prob(word, prob.get<double>());
  }
  if (spec.contains("default_word_prob")) {
    backend.set_default_word_prob(spec.at("default_word_prob").get<double>());
  }
  for (const auto& j : spec.value("token_prob_rules", json::array())) {
    std::map<std::string, double> probs;
    for (const auto& [token, prob] : j.at("probs").items()) {
      probs[token] = prob.get<double>();
    }
    backend.add_token_prob_rule(parse_match(j), std::move(probs));
  }
  for (const auto& j : spec.value("top_token_rules", json::array())) {
    std::vector<TokenProb> tokens;
    for (const auto& t : j.at("tokens")) {
      tokens.push_back({t.at("token").get<std::string>(),
                        t.at("probability").get<double>()});
    }
    backend.add_top_token_rule(parse_match(j), std::move(tokens));
  }
  return backend;
}

ScriptedBackend ScriptedBackend::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scripted backend rules: " + path);
  json spec;
  try {
    in >> spec;
  } catch (const json::exception& e) {
    throw ConfigError("bad scripted backend rules in " + path + ": " + e.what());
  }
  return from_json(spec);
}

}  // namespace lac

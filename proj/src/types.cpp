#include "lac/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "lac/error.hpp"

namespace lac {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

double stable_sigmoid(double q) {
  if (q >= 0.0) return 1.0 / (1.0 + std::exp(-q));
  const double e = std::exp(q);
  return e / (1.0 + e);
}

}  // namespace

std::string to_string(Judgment j) {
  switch (j) {
    case Judgment::Good: return "GOOD";
    case Judgment::Bad: return "BAD";
    case Judgment::Unknown: return "UNKNOWN";
  }
  return "UNKNOWN";
}

Judgment judgment_from_string(const std::string& s) {
  if (s == "GOOD") return Judgment::Good;
  if (s == "BAD") return Judgment::Bad;
  if (s == "UNKNOWN") return Judgment::Unknown;
  throw ValidationError("unknown judgment tag: " + s);
}

Judgment judgment_from_text(const std::string& text) {
  const std::string t = trim(text);
  if (ends_with(t, "This step is GOOD.")) return Judgment::Good;
  if (ends_with(t, "This step is BAD.")) return Judgment::Bad;
  return Judgment::Unknown;
}

Reflection Reflection::from_text(std::string text) {
  Reflection r;
  r.judgment = judgment_from_text(text);
  r.text = std::move(text);
  return r;
}

bool Goal::valid() const { return !trim(text).empty(); }

std::string to_string(RolloutTermination t) {
  switch (t) {
    case RolloutTermination::Good: return "GOOD";
    case RolloutTermination::Bad: return "BAD";
    case RolloutTermination::DepthLimit: return "DEPTH_LIMIT";
  }
  return "DEPTH_LIMIT";
}

RolloutTermination rollout_termination_from_string(const std::string& s) {
  if (s == "GOOD") return RolloutTermination::Good;
  if (s == "BAD") return RolloutTermination::Bad;
  if (s == "DEPTH_LIMIT") return RolloutTermination::DepthLimit;
  throw ValidationError("unknown rollout termination tag: " + s);
}

OutcomeBelief OutcomeBelief::from_probabilities(double success_mass,
                                                double failure_mass) {
  if (!(success_mass > 0.0) || !(failure_mass > 0.0) ||
      !std::isfinite(success_mass) || !std::isfinite(failure_mass)) {
    throw ValidationError("outcome belief masses must be finite and positive");
  }
  const double total = success_mass + failure_mass;
  return OutcomeBelief{success_mass / total, failure_mass / total};
}

OutcomeBelief OutcomeBelief::from_q(double q) {
  if (!std::isfinite(q)) throw ValidationError("q must be finite");
  return OutcomeBelief{stable_sigmoid(q), stable_sigmoid(-q)};
}

// --- serialization ---------------------------------------------------------

void to_json(json& j, const Reflection& v) {
  j = json{{"text", v.text}, {"judgment", to_string(v.judgment)}};
}

void from_json(const json& j, Reflection& v) {
  j.at("text").get_to(v.text);
  v.judgment = judgment_from_string(j.at("judgment").get<std::string>());
}

void to_json(json& j, const Goal& v) { j = json{{"text", v.text}}; }

void from_json(const json& j, Goal& v) { j.at("text").get_to(v.text); }

void to_json(json& j, const Step& v) {
  j = json{{"action", v.action}, {"observation", v.observation}};
  if (v.reflection) j["reflection"] = *v.reflection;
}

void from_json(const json& j, Step& v) {
  j.at("action").get_to(v.action);
  j.at("observation").get_to(v.observation);
  if (j.contains("reflection") && !j.at("reflection").is_null()) {
    v.reflection = j.at("reflection").get<Reflection>();
  } else {
    v.reflection.reset();
  }
}

void to_json(json& j, const History& v) {
  j = json{{"goal", v.goal},
           {"initial_observation", v.initial_observation},
           {"steps", v.steps}};
}

void from_json(const json& j, History& v) {
  j.at("goal").get_to(v.goal);
  j.at("initial_observation").get_to(v.initial_observation);
  j.at("steps").get_to(v.steps);
}

void to_json(json& j, const RolloutTrajectory& v) {
  j = json{{"steps", v.steps}, {"terminated_by", to_string(v.terminated_by)}};
  if (v.backend_error) j["backend_error"] = true;
}

void from_json(const json& j, RolloutTrajectory& v) {
  j.at("steps").get_to(v.steps);
  v.terminated_by =
      rollout_termination_from_string(j.at("terminated_by").get<std::string>());
  v.backend_error = j.value("backend_error", false);
}

void to_json(json& j, const OutcomeBelief& v) {
  j = json{{"p_success", v.p_success}, {"p_failure", v.p_failure}};
}

void from_json(const json& j, OutcomeBelief& v) {
  j.at("p_success").get_to(v.p_success);
  j.at("p_failure").get_to(v.p_failure);
}

void to_json(json& j, const CandidateEvaluation& v) {
  j = json{{"action", v.action},
           {"prior_logprob", v.prior_logprob},
           {"belief", v.belief},
           {"q_value", v.q_value}};
  if (v.rollout) j["rollout"] = *v.rollout;
}

void from_json(const json& j, CandidateEvaluation& v) {
  j.at("action").get_to(v.action);
  j.at("prior_logprob").get_to(v.prior_logprob);
  j.at("belief").get_to(v.belief);
  j.at("q_value").get_to(v.q_value);
  if (j.contains("rollout") && !j.at("rollout").is_null()) {
    v.rollout = j.at("rollout").get<RolloutTrajectory>();
  } else {
    v.rollout.reset();
  }
}

void to_json(json& j, const AlphaSetting& v) {
  if (v.critic_only) {
    j = json{{"critic_only", true}};
  } else {
    j = json{{"value", v.value}};
  }
}

void from_json(const json& j, AlphaSetting& v) {
  if (j.is_number()) {  // tolerate plain numeric alpha
    v = AlphaSetting::finite(j.get<double>());
    return;
  }
  if (j.value("critic_only", false)) {
    v = AlphaSetting::critic_only_sentinel();
  } else {
    v = AlphaSetting::finite(j.at("value").get<double>());
  }
}

void to_json(json& j, const ImprovedDistribution& v) {
  j = json{{"candidate_probs", v.candidate_probs},
           {"log_partition", v.log_partition},
           {"alpha", v.alpha},
           {"chosen_index", v.chosen_index}};
}

void from_json(const json& j, ImprovedDistribution& v) {
  j.at("candidate_probs").get_to(v.candidate_probs);
  j.at("log_partition").get_to(v.log_partition);
  j.at("alpha").get_to(v.alpha);
  j.at("chosen_index").get_to(v.chosen_index);
}

void to_json(json& j, const DecisionRecord& v) {
  j = json{{"step_index", v.step_index},
           {"candidates", v.candidates},
           {"improved", v.improved},
           {"mode", v.mode}};
}

void from_json(const json& j, DecisionRecord& v) {
  j.at("step_index").get_to(v.step_index);
  j.at("candidates").get_to(v.candidates);
  j.at("improved").get_to(v.improved);
  j.at("mode").get_to(v.mode);
}

void to_json(json& j, const EpisodeResult& v) {
  j = json{{"history", v.history},
           {"reward", v.reward},
           {"success", v.success},
           {"steps_used", v.steps_used},
           {"tokens_used", v.tokens_used},
           {"records", v.records}};
}

void from_json(const json& j, EpisodeResult& v) {
  j.at("history").get_to(v.history);
  j.at("reward").get_to(v.reward);
  j.at("success").get_to(v.success);
  j.at("steps_used").get_to(v.steps_used);
  j.at("tokens_used").get_to(v.tokens_used);
  j.at("records").get_to(v.records);
}

// --- text helpers ----------------------------------------------------------

std::string trim(const std::string& s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string normalize_action(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  bool in_space = true;  // leading whitespace dropped
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!in_space) out.push_back(' ');
      in_space = true;
    } else {
      out.push_back(c);
      in_space = false;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

std::string casefold(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

std::string normalize_token(const std::string& s) { return casefold(trim(s)); }

}  // namespace lac

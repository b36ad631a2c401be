#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace lac {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Judgments and reflections
// ---------------------------------------------------------------------------

enum class Judgment { Good, Bad, Unknown };

std::string to_string(Judgment j);
Judgment judgment_from_string(const std::string& s);

// Derives the judgment from the final sentence of a reflection. The text is
// expected to end with "This step is GOOD." / "BAD." / "UNKNOWN." (trailing
// whitespace tolerated); anything else maps to Unknown.
Judgment judgment_from_text(const std::string& text);

struct Reflection {
  std::string text;
  Judgment judgment = Judgment::Unknown;

  static Reflection from_text(std::string text);
};

// ---------------------------------------------------------------------------
// Goals, steps, histories
// ---------------------------------------------------------------------------

struct Goal {
  std::string text;  // non-empty after trimming

  bool valid() const;
};

struct Step {
  std::string action;
  std::string observation;
  std::optional<Reflection> reflection;
};

struct History {
  Goal goal;
  std::string initial_observation;
  std::vector<Step> steps;
};

// ---------------------------------------------------------------------------
// Rollouts and evaluations
// ---------------------------------------------------------------------------

enum class RolloutTermination { Good, Bad, DepthLimit };

std::string to_string(RolloutTermination t);
RolloutTermination rollout_termination_from_string(const std::string& s);

struct RolloutTrajectory {
  std::vector<Step> steps;
  RolloutTermination terminated_by = RolloutTermination::DepthLimit;
  // Set when the backend failed mid-rollout and the trajectory is partial.
  bool backend_error = false;
};

struct OutcomeBelief {
  double p_success = 0.5;
  double p_failure = 0.5;

  // Normalizes an arbitrary positive pair so the stored fields sum to 1.
  static OutcomeBelief from_probabilities(double success_mass, double failure_mass);
  // Inverse of the logistic link: p_success = sigmoid(q).
  static OutcomeBelief from_q(double q);
};

struct CandidateEvaluation {
  std::string action;
  double prior_logprob = 0.0;  // natural log, <= 0
  std::optional<RolloutTrajectory> rollout;
  OutcomeBelief belief;
  double q_value = 0.0;  // nats
};

// Alpha is either a finite nonnegative weight or the critic-only sentinel
// (the alpha -> infinity limit of the update).
struct AlphaSetting {
  double value = 1.0;
  bool critic_only = false;

  static AlphaSetting finite(double v) { return AlphaSetting{v, false}; }
  static AlphaSetting critic_only_sentinel() { return AlphaSetting{0.0, true}; }
};

struct ImprovedDistribution {
  std::vector<double> candidate_probs;  // sums to 1
  double log_partition = 0.0;
  AlphaSetting alpha;
  int chosen_index = 0;  // argmax, ties broken by lowest index
};

struct DecisionRecord {
  int step_index = 0;
  std::vector<CandidateEvaluation> candidates;
  ImprovedDistribution improved;
  std::string mode;  // ablation mode tag
};

struct EpisodeResult {
  History history;
  double reward = 0.0;
  bool success = false;
  int steps_used = 0;
  std::int64_t tokens_used = 0;
  std::vector<DecisionRecord> records;
};

// ---------------------------------------------------------------------------
// Trace serialization (JSONL: one record per line, UTF-8, LF)
// ---------------------------------------------------------------------------

void to_json(json& j, const Reflection& v);
void from_json(const json& j, Reflection& v);
void to_json(json& j, const Goal& v);
void from_json(const json& j, Goal& v);
void to_json(json& j, const Step& v);
void from_json(const json& j, Step& v);
void to_json(json& j, const History& v);
void from_json(const json& j, History& v);
void to_json(json& j, const RolloutTrajectory& v);
void from_json(const json& j, RolloutTrajectory& v);
void to_json(json& j, const OutcomeBelief& v);
void from_json(const json& j, OutcomeBelief& v);
void to_json(json& j, const CandidateEvaluation& v);
void from_json(const json& j, CandidateEvaluation& v);
void to_json(json& j, const AlphaSetting& v);
void from_json(const json& j, AlphaSetting& v);
void to_json(json& j, const ImprovedDistribution& v);
void from_json(const json& j, ImprovedDistribution& v);
void to_json(json& j, const DecisionRecord& v);
void from_json(const json& j, DecisionRecord& v);
void to_json(json& j, const EpisodeResult& v);
void from_json(const json& j, EpisodeResult& v);

// ---------------------------------------------------------------------------
// Small text helpers shared across modules
// ---------------------------------------------------------------------------

std::string trim(const std::string& s);
// trim + collapse internal whitespace runs to single spaces
std::string normalize_action(const std::string& s);
std::string casefold(const std::string& s);
// trim + casefold; the comparison key for candidate tokens
std::string normalize_token(const std::string& s);

}  // namespace lac

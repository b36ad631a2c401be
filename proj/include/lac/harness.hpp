#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "lac/actor.hpp"
#include "lac/backend.hpp"
#include "lac/critic.hpp"
#include "lac/env.hpp"
#include "lac/oracle_backend.hpp"
#include "lac/types.hpp"
#include "lac/world_model.hpp"

namespace lac {

enum class EngineMode {
  Full,
  NoCritic,
  CriticOnly,
  NoRollout,
  NoReflection,
  QVariant,
  DirectEval,
};

std::string to_string(EngineMode m);
EngineMode engine_mode_from_string(const std::string& s);

// Default horizons per benchmark profile: alfworld 40, babyai 30, webshop 15.
int profile_horizon(const std::string& profile);

struct EngineConfig {
  std::string label = "full";
  EngineMode mode = EngineMode::Full;
  AlphaSetting alpha = AlphaSetting::finite(1.0);
  int num_candidates = 5;
  RolloutConfig rollout;
  MarkerPair markers;
  int horizon = 30;
  ActorConfig actor;
  PromptTemplate prompt;
  bool parallel_candidates = true;
};

void to_json(json& j, const EngineConfig& v);
void from_json(const json& j, EngineConfig& v);

// Counts approximate token usage of every call to the wrapped backend. One
// instance per episode; the wrapped backend may be shared across episodes.
class MeteredBackend final : public Backend {
 public:
  explicit MeteredBackend(Backend& inner) : inner_(inner) {}

  GenerationResult generate(const GenerationRequest& req) override;
  double score_continuation(const std::string& prompt,
                            const std::string& continuation) override;
  std::vector<TokenProb> next_token_probs(const TokenQuery& query) override;
  std::vector<TokenProb> top_next_tokens(const std::string& prompt,
                                         int k) override;
  std::string name() const override { return inner_.name(); }

  std::int64_t tokens_used() const { return used_.load(); }

 private:
  Backend& inner_;
  std::atomic<std::int64_t> used_{0};
};

// One decision of Algorithm 1 under the configured ablation mode: sample
// candidates, evaluate them, improve the distribution, select.
std::pair<std::string, DecisionRecord> decide_step(const History& history,
                                                   const EngineConfig& cfg,
                                                   Backend& backend);

struct EpisodeOutcome {
  EpisodeResult result;
  std::string diagnostic;  // non-empty when the episode aborted on an error
};

// Runs one try-once episode: decide/step until done or the horizon, with one
// retry on retryable backend errors and abort-as-failure on anything else.
EpisodeOutcome run_episode(Environment& env, const EngineConfig& cfg,
                           Backend& backend, std::uint64_t seed,
                           const std::string& task_kind);

// --- batch evaluation -------------------------------------------------------

struct TaskEntry {
  std::string kind;
  std::vector<std::uint64_t> seeds;
};

struct BackendSpec {
  std::string type = "oracle";  // oracle | scripted | http
  OracleConfig oracle;
  std::string scripted_rules_path;
  json http;  // forwarded to the HTTP backend config parser
};

void from_json(const json& j, BackendSpec& v);
void from_json(const json& j, TaskEntry& v);

struct RunManifest {
  std::vector<TaskEntry> tasks;
  std::vector<EngineConfig> configs;
  BackendSpec backend;
  std::string env_descriptor = "gridworld";
  std::string output_dir;
  int jobs = 1;
};

void from_json(const json& j, RunManifest& v);
RunManifest load_manifest(const std::string& path);

struct ConfigSummary {
  std::string label;
  int episodes = 0;
  int successes = 0;
  double success_rate = 0.0;
  double mean_reward = 0.0;
  double mean_steps = 0.0;
  double mean_tokens = 0.0;
};

void to_json(json& j, const ConfigSummary& v);

struct BatchResult {
  std::vector<ConfigSummary> summary;  // one row per config
  std::vector<json> episode_lines;     // trace lines, in manifest order
};

// Backend factory bound to one episode's (task, seed); oracle backends mirror
// the episode's initial state.
using BackendFactory =
    std::function<std::unique_ptr<Backend>(const std::string& task_kind,
                                           std::uint64_t seed)>;
using EnvironmentFactory = std::function<std::unique_ptr<Environment>()>;

BackendFactory make_backend_factory(const BackendSpec& spec);

// Runs every (config, task, seed) episode, optionally across threads.
// Episode failures are recorded and do not stop the batch. When output_dir is
// non-empty, writes episodes.jsonl, summary.csv, and summary.json there.
BatchResult run_batch(const RunManifest& manifest);

}  // namespace lac

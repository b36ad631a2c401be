#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "support.hpp"

using namespace lac;
using lac_test::decision_backend;
using lac_test::fixed_history;

TEST_CASE("a zero-q critic chooses exactly like the prior-only mode") {
  ScriptedBackend backend = decision_backend(
      {"alpha", "bravo", "charlie"}, {0.5, 0.3, 0.2}, {0.0, 0.0, 0.0});
  EngineConfig full;
  full.mode = EngineMode::Full;
  EngineConfig no_critic;
  no_critic.mode = EngineMode::NoCritic;
  const auto [a_full, r_full] = decide_step(fixed_history(), full, backend);
  const auto [a_nc, r_nc] = decide_step(fixed_history(), no_critic, backend);
  CHECK(a_full == a_nc);
  CHECK(a_full == "alpha");
  CHECK(r_nc.candidates.size() == 3);
}

TEST_CASE("alpha zero and the no-critic mode agree on every scripted step") {
  std::mt19937 rng(314);
  std::uniform_real_distribution<double> q_dist(-3.0, 3.0);
  const std::vector<std::string> names = {"alpha", "bravo", "charlie", "delta",
                                          "echo"};
  for (int trial = 0; trial < 40; ++trial) {
    const size_t n = 2 + rng() % 4;
    std::vector<std::string> actions(names.begin(), names.begin() + n);
    std::vector<double> priors;
    std::vector<double> qs;
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
      priors.push_back(0.05 + static_cast<double>(rng() % 100));
      total += priors.back();
    }
    for (double& p : priors) p /= total;
    for (size_t i = 0; i < n; ++i) qs.push_back(q_dist(rng));

    ScriptedBackend backend = decision_backend(actions, priors, qs);
    EngineConfig zero_alpha;
    zero_alpha.mode = EngineMode::Full;
    zero_alpha.alpha = AlphaSetting::finite(0.0);
    EngineConfig no_critic;
    no_critic.mode = EngineMode::NoCritic;
    CHECK(decide_step(fixed_history(), zero_alpha, backend).first ==
          decide_step(fixed_history(), no_critic, backend).first);

    EngineConfig sentinel;
    sentinel.mode = EngineMode::Full;
    sentinel.alpha = AlphaSetting::critic_only_sentinel();
    EngineConfig critic_only;
    critic_only.mode = EngineMode::CriticOnly;
    CHECK(decide_step(fixed_history(), sentinel, backend).first ==
          decide_step(fixed_history(), critic_only, backend).first);
  }
}

TEST_CASE("each ablation mode shapes the record as specified") {
  ScriptedBackend backend =
      decision_backend({"alpha", "bravo"}, {0.6, 0.4}, {-0.5, 1.5});
  backend.add_generation_rule({"", "Probability: "}, "0.25");

  SUBCASE("full mode carries rollouts and log-ratio q values") {
    EngineConfig cfg;
    cfg.mode = EngineMode::Full;
    const auto [action, record] = decide_step(fixed_history(), cfg, backend);
    CHECK(action == "bravo");
    REQUIRE(record.candidates.size() == 2);
    for (const CandidateEvaluation& c : record.candidates) {
      REQUIRE(c.rollout.has_value());
      CHECK(c.rollout->steps.size() == 1);
      CHECK(std::abs(c.q_value -
                     (std::log(c.belief.p_success) -
                      std::log(c.belief.p_failure))) < 1e-12);
    }
    CHECK(record.candidates[0].q_value == doctest::Approx(-0.5).epsilon(1e-9));
    CHECK(record.candidates[1].q_value == doctest::Approx(1.5).epsilon(1e-9));
  }
  SUBCASE("no-rollout evaluates the bare action") {
    EngineConfig cfg;
    cfg.mode = EngineMode::NoRollout;
    const auto [action, record] = decide_step(fixed_history(), cfg, backend);
    for (const CandidateEvaluation& c : record.candidates) {
      CHECK_FALSE(c.rollout.has_value());
    }
    CHECK(record.mode == "no-rollout");
  }
  SUBCASE("no-reflection strips reflections from rollouts") {
    EngineConfig cfg;
    cfg.mode = EngineMode::NoReflection;
    const auto [action, record] = decide_step(fixed_history(), cfg, backend);
    for (const CandidateEvaluation& c : record.candidates) {
      REQUIRE(c.rollout.has_value());
      CHECK(c.rollout->steps.size() == cfg.rollout.max_depth);
      for (const Step& s : c.rollout->steps) {
        CHECK_FALSE(s.reflection.has_value());
      }
    }
  }
  SUBCASE("no-critic records no rollouts and zero q") {
    EngineConfig cfg;
    cfg.mode = EngineMode::NoCritic;
    const auto [action, record] = decide_step(fixed_history(), cfg, backend);
    CHECK(action == "alpha");
    for (const CandidateEvaluation& c : record.candidates) {
      CHECK_FALSE(c.rollout.has_value());
      CHECK(c.q_value == 0.0);
    }
  }
  SUBCASE("direct evaluation parses the generated probability") {
    EngineConfig cfg;
    cfg.mode = EngineMode::DirectEval;
    const auto [action, record] = decide_step(fixed_history(), cfg, backend);
    for (const CandidateEvaluation& c : record.candidates) {
      CHECK(c.q_value == doctest::Approx(std::log(0.25 / 0.75)).epsilon(1e-9));
    }
    // equal q everywhere: the prior decides
    CHECK(action == "alpha");
  }
}

TEST_CASE("the q-variant mode ranks by raw positive mass") {
  // Raw masses: (0.4, 0.1) vs (0.5, 0.4). The log-ratio critic prefers the
  // first candidate, the raw log p_w variant the second.
  ScriptedBackend backend =
      decision_backend({"alpha", "bravo"}, {0.5, 0.5}, {0.0, 0.0});
  ScriptedBackend variant_backend;  // rebuilt with explicit marker masses
  {
    variant_backend.add_top_token_rule({"", labels::kAction},
                                       {{"alpha", 0.5}, {"bravo", 0.5}});
    for (const std::string& name : {std::string("alpha"), std::string("bravo")}) {
      variant_backend.add_generation_rule(
          {"", std::string(labels::kAction) + name}, "");
      variant_backend.add_continuation_score({"", ""}, name, std::log(0.5));
    }
    variant_backend.add_generation_rule({"", labels::kObservation}, "OK.");
    variant_backend.add_generation_rule({"", labels::kCritic},
                                        "Hm. This step is GOOD.");
    variant_backend.add_token_prob_rule({"Action: alpha\n", ""},
                                        {{"GOOD", 0.4}, {"BAD", 0.1}});
    variant_backend.add_token_prob_rule({"Action: bravo\n", ""},
                                        {{"GOOD", 0.5}, {"BAD", 0.4}});
  }

  EngineConfig full;
  full.mode = EngineMode::Full;
  full.alpha = AlphaSetting::finite(5.0);  // let the critic dominate ties
  EngineConfig variant = full;
  variant.mode = EngineMode::QVariant;

  const auto full_choice = decide_step(fixed_history(), full, variant_backend);
  const auto variant_choice =
      decide_step(fixed_history(), variant, variant_backend);
  CHECK(full_choice.first == "alpha");
  CHECK(variant_choice.first == "bravo");
  CHECK(full_choice.first != variant_choice.first);
}

namespace {

// Environment that never finishes: every action bumps a counter.
class TreadmillEnv final : public Environment {
 public:
  ResetOutcome reset(std::uint64_t, const std::string&) override {
    steps_ = 0;
    return {Goal{"walk forever"}, "A treadmill."};
  }
  grid::EnvStepOutcome step(const std::string&) override {
    ++steps_;
    return {"Still walking.", 0.0, false};
  }
  std::string name() const override { return "treadmill"; }
  int steps() const { return steps_; }

 private:
  int steps_ = 0;
};

ScriptedBackend turn_left_backend() {
  ScriptedBackend backend;
  backend.set_default_generation("turn left");
  backend.add_generation_rule({"", labels::kObservation}, "Still walking.");
  backend.add_generation_rule({"", labels::kCritic},
                              "Unclear. This step is UNKNOWN.");
  return backend;
}

}  // namespace

TEST_CASE("an always-turn-left backend fails at exactly the horizon") {
  TreadmillEnv env;
  ScriptedBackend backend = turn_left_backend();
  EngineConfig cfg;
  cfg.mode = EngineMode::NoCritic;
  cfg.horizon = profile_horizon("babyai");
  const EpisodeOutcome out = run_episode(env, cfg, backend, 1, "treadmill");
  CHECK_FALSE(out.result.success);
  CHECK(out.result.reward == 0.0);
  CHECK(out.result.steps_used == 30);
  CHECK(env.steps() == 30);  // the episode never restarts

  cfg.horizon = profile_horizon("alfworld");
  TreadmillEnv env2;
  const EpisodeOutcome out2 = run_episode(env2, cfg, backend, 1, "treadmill");
  CHECK(out2.result.steps_used == 40);
}

TEST_CASE("episodes are byte-identical across runs") {
  auto run_once = []() {
    GridworldEnv env;
    OracleBackend oracle(grid::reset_state(21, grid::TaskKind::GoTo));
    EngineConfig cfg;
    cfg.mode = EngineMode::Full;
    const EpisodeOutcome out = run_episode(env, cfg, oracle, 21, "goto");
    return json(out.result).dump();
  };
  CHECK(run_once() == run_once());
}

TEST_CASE("episode histories stay within the horizon and carry reflections") {
  GridworldEnv env;
  OracleBackend oracle(grid::reset_state(8, grid::TaskKind::PickUp));
  EngineConfig cfg;
  cfg.mode = EngineMode::Full;
  cfg.horizon = 30;
  const EpisodeOutcome out = run_episode(env, cfg, oracle, 8, "pickup");
  CHECK(out.result.success);
  CHECK(out.result.steps_used <= 30);
  CHECK(out.result.steps_used ==
        static_cast<int>(out.result.history.steps.size()));
  CHECK(out.result.records.size() == out.result.history.steps.size());
  CHECK(out.result.tokens_used > 0);
  // every non-terminal step got a reflection
  for (size_t i = 0; i + 1 < out.result.history.steps.size(); ++i) {
    CHECK(out.result.history.steps[i].reflection.has_value());
  }
}

TEST_CASE("continuous rewards below the maximum are not successes") {
  // Environments may end an episode with a fractional reward; only the
  // maximum counts as success, but the reward itself is preserved.
  class PartialRewardEnv final : public Environment {
   public:
    ResetOutcome reset(std::uint64_t, const std::string&) override {
      return {Goal{"buy the right thing"}, "A storefront."};
    }
    grid::EnvStepOutcome step(const std::string&) override {
      return {"Purchased something close.", 0.7, true};
    }
    std::string name() const override { return "shop"; }
  };
  PartialRewardEnv env;
  ScriptedBackend backend = turn_left_backend();
  EngineConfig cfg;
  cfg.mode = EngineMode::NoCritic;
  cfg.horizon = profile_horizon("webshop");
  const EpisodeOutcome out = run_episode(env, cfg, backend, 1, "shop");
  CHECK_FALSE(out.result.success);
  CHECK(out.result.reward == doctest::Approx(0.7));
  CHECK(out.result.steps_used == 1);
}

TEST_CASE("backend failures abort the episode as a recorded failure") {
  class DeadBackend final : public Backend {
   public:
    GenerationResult generate(const GenerationRequest&) override {
      throw BackendError("boom", false);
    }
    double score_continuation(const std::string&, const std::string&) override {
      throw BackendError("boom", false);
    }
    std::vector<TokenProb> next_token_probs(const TokenQuery&) override {
      throw BackendError("boom", false);
    }
    std::string name() const override { return "dead"; }
  };
  TreadmillEnv env;
  DeadBackend backend;
  EngineConfig cfg;
  const EpisodeOutcome out = run_episode(env, cfg, backend, 1, "x");
  CHECK_FALSE(out.result.success);
  CHECK_FALSE(out.diagnostic.empty());
}

TEST_CASE("transient backend errors get exactly one retry") {
  class FlakyOnce final : public Backend {
   public:
    explicit FlakyOnce(ScriptedBackend inner) : inner_(std::move(inner)) {}
    GenerationResult generate(const GenerationRequest& req) override {
      maybe_fail();
      return inner_.generate(req);
    }
    double score_continuation(const std::string& p,
                              const std::string& c) override {
      maybe_fail();
      return inner_.score_continuation(p, c);
    }
    std::vector<TokenProb> next_token_probs(const TokenQuery& q) override {
      maybe_fail();
      return inner_.next_token_probs(q);
    }
    std::vector<TokenProb> top_next_tokens(const std::string& p,
                                           int k) override {
      maybe_fail();
      return inner_.top_next_tokens(p, k);
    }
    std::string name() const override { return "flaky-once"; }

   private:
    void maybe_fail() {
      if (!failed_) {
        failed_ = true;
        throw BackendError("transient", true);
      }
    }
    ScriptedBackend inner_;
    bool failed_ = false;
  };

  TreadmillEnv env;
  FlakyOnce backend(turn_left_backend());
  EngineConfig cfg;
  cfg.mode = EngineMode::NoCritic;
  cfg.horizon = 3;
  const EpisodeOutcome out = run_episode(env, cfg, backend, 1, "x");
  CHECK(out.diagnostic.empty());  // retry absorbed the transient error
  CHECK(out.result.steps_used == 3);
}

TEST_CASE("run_batch aggregates per config and writes trace files") {
  const std::string dir = "test_batch_out";
  std::filesystem::remove_all(dir);

  RunManifest manifest;
  manifest.tasks = {{"goto", {1, 2, 3}}};
  EngineConfig full;
  full.label = "full";
  EngineConfig no_critic;
  no_critic.mode = EngineMode::NoCritic;
  no_critic.label = "no-critic";
  manifest.configs = {full, no_critic};
  manifest.backend.type = "oracle";
  manifest.output_dir = dir;
  manifest.jobs = 2;

  const BatchResult result = run_batch(manifest);
  REQUIRE(result.summary.size() == 2);
  CHECK(result.summary[0].label == "full");
  CHECK(result.summary[0].episodes == 3);
  CHECK(result.summary[0].success_rate == doctest::Approx(1.0));
  CHECK(result.summary[1].success_rate == doctest::Approx(1.0));
  CHECK(result.episode_lines.size() == 6);

  CHECK(std::filesystem::exists(dir + "/episodes.jsonl"));
  CHECK(std::filesystem::exists(dir + "/summary.csv"));
  CHECK(std::filesystem::exists(dir + "/summary.json"));
  std::ifstream traces(dir + "/episodes.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(traces, line)) {
    const json j = json::parse(line);
    CHECK(j.contains("config"));
    CHECK(j.contains("seed"));
    ++lines;
  }
  CHECK(lines == 6);

  // determinism: the same manifest produces identical lines
  const BatchResult again = run_batch(manifest);
  for (size_t i = 0; i < result.episode_lines.size(); ++i) {
    CHECK(result.episode_lines[i] == again.episode_lines[i]);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("an empty manifest yields an empty summary") {
  RunManifest manifest;
  manifest.backend.type = "oracle";
  const BatchResult result = run_batch(manifest);
  CHECK(result.summary.empty());
  CHECK(result.episode_lines.empty());
}

TEST_CASE("manifests parse from JSON with profile horizons") {
  const json j = json::parse(R"({
    "tasks": [{"kind": "goto", "seeds": [1, 2]}],
    "configs": [
      {"mode": "full", "alpha": 1.0, "profile": "babyai"},
      {"mode": "critic-only", "alpha": "critic-only", "horizon": 12}
    ],
    "backend": {"type": "oracle", "prior_noise": 0.5},
    "output": ""
  })");
  const RunManifest manifest = j.get<RunManifest>();
  REQUIRE(manifest.configs.size() == 2);
  CHECK(manifest.configs[0].horizon == 30);
  CHECK(manifest.configs[1].horizon == 12);
  CHECK(manifest.configs[1].alpha.critic_only);
  CHECK(manifest.backend.oracle.prior_noise == 0.5);
  CHECK(manifest.tasks[0].seeds.size() == 2);

  CHECK_THROWS_AS(
      json::parse(R"({"tasks":[{"kind":"goto","seeds":[1,1]}]})")
          .get<RunManifest>(),
      ConfigError);
  CHECK_THROWS_AS(
      json::parse(R"({"tasks":[],"configs":[{"mode":"full","alpha":-1}]})")
          .get<RunManifest>(),
      ConfigError);
}

TEST_CASE("metered backends count every query") {
  ScriptedBackend inner = turn_left_backend();
  MeteredBackend metered(inner);
  CHECK(metered.tokens_used() == 0);
  GenerationRequest req;
  req.prompt = "one two three";
  metered.generate(req);
  const std::int64_t after_generate = metered.tokens_used();
  CHECK(after_generate >= 4);  // prompt words + completion
  metered.score_continuation("one two", "three four");
  CHECK(metered.tokens_used() == after_generate + 4);
}

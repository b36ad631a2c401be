#include "lac/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <mutex>
#include <thread>

#include "lac/http_backend.hpp"
#include "lac/policy.hpp"
#include "lac/scripted_backend.hpp"

namespace lac {

std::string to_string(EngineMode m) {
  switch (m) {
    case EngineMode::Full: return "full";
    case EngineMode::NoCritic: return "no-critic";
    case EngineMode::CriticOnly: return "critic-only";
    case EngineMode::NoRollout: return "no-rollout";
    case EngineMode::NoReflection: return "no-reflection";
    case EngineMode::QVariant: return "q-variant";
    case EngineMode::DirectEval: return "direct-eval";
  }
  return "full";
}

EngineMode engine_mode_from_string(const std::string& s) {
  if (s == "full") return EngineMode::Full;
  if (s == "no-critic") return EngineMode::NoCritic;
  if (s == "critic-only") return EngineMode::CriticOnly;
  if (s == "no-rollout") return EngineMode::NoRollout;
  if (s == "no-reflection") return EngineMode::NoReflection;
  if (s == "q-variant") return EngineMode::QVariant;
  if (s == "direct-eval") return EngineMode::DirectEval;
  throw ConfigError("unknown mode: " + s);
}

int profile_horizon(const std::string& profile) {
  if (profile == "alfworld") return 40;
  if (profile == "babyai") return 30;
  if (profile == "webshop") return 15;
  throw ConfigError("unknown profile: " + profile);
}

void to_json(json& j, const EngineConfig& v) {
  j = json{{"label", v.label},
           {"mode", to_string(v.mode)},
           {"alpha", v.alpha},
           {"num_candidates", v.num_candidates},
           {"max_depth", v.rollout.max_depth},
           {"horizon", v.horizon},
           {"markers", json{{"positive", v.markers.positive},
                            {"negative", v.markers.negative}}}};
}

void from_json(const json& j, EngineConfig& v) {
  v.mode = engine_mode_from_string(j.value("mode", "full"));
  v.label = j.value("label", to_string(v.mode));
  if (j.contains("alpha")) {
    const json& a = j.at("alpha");
    if (a.is_string()) {
      if (a.get<std::string>() != "critic-only") {
        throw ConfigError("alpha must be a number or \"critic-only\"");
      }
      v.alpha = AlphaSetting::critic_only_sentinel();
    } else {
      v.alpha = AlphaSetting::finite(a.get<double>());
    }
  }
  if (!v.alpha.critic_only && (v.alpha.value < 0.0 || !std::isfinite(v.alpha.value))) {
    throw ConfigError("alpha must be >= 0");
  }
  v.num_candidates = j.value("num_candidates", 5);
  v.actor.num_candidates = v.num_candidates;
  v.rollout.max_depth = j.value("max_depth", 4);
  if (j.contains("horizon")) {
    v.horizon = j.at("horizon").get<int>();
  } else {
    v.horizon = profile_horizon(j.value("profile", "babyai"));
  }
  if (v.horizon < 1) throw ConfigError("horizon must be >= 1");
  if (j.contains("markers")) {
    v.markers.positive = j.at("markers").value("positive", "GOOD");
    v.markers.negative = j.at("markers").value("negative", "BAD");
  }
  v.parallel_candidates = j.value("parallel_candidates", true);
}

// --- metered backend ---------------------------------------------------------

GenerationResult MeteredBackend::generate(const GenerationRequest& req) {
  GenerationResult r = inner_.generate(req);
  used_ += r.total_tokens > 0
               ? r.total_tokens
               : approx_token_count(req.prompt) + approx_token_count(r.text);
  return r;
}

double MeteredBackend::score_continuation(const std::string& prompt,
                                          const std::string& continuation) {
  used_ += approx_token_count(prompt) + approx_token_count(continuation);
  return inner_.score_continuation(prompt, continuation);
}

std::vector<TokenProb> MeteredBackend::next_token_probs(const TokenQuery& query) {
  used_ += approx_token_count(query.prompt) + 1;
  return inner_.next_token_probs(query);
}

std::vector<TokenProb> MeteredBackend::top_next_tokens(const std::string& prompt,
                                                       int k) {
  used_ += approx_token_count(prompt) + 1;
  return inner_.top_next_tokens(prompt, k);
}

// --- decision step -----------------------------------------------------------

namespace {

CandidateEvaluation evaluate_candidate(const History& history,
                                       const ScoredAction& candidate,
                                       const EngineConfig& cfg,
                                       Backend& backend,
                                       bool include_reflections) {
  CandidateEvaluation eval;
  eval.action = candidate.action;
  eval.prior_logprob = candidate.prior_logprob;

  RolloutTrajectory traj;
  const bool with_rollout = cfg.mode != EngineMode::NoRollout;
  if (with_rollout) {
    RolloutConfig rcfg = cfg.rollout;
    rcfg.include_reflections = include_reflections;
    traj = rollout(history, candidate.action, rcfg, cfg.prompt, backend);
    eval.rollout = traj;
  }

  switch (cfg.mode) {
    case EngineMode::DirectEval: {
      const std::string prompt = direct_eval_prompt(
          history, candidate.action, traj, cfg.prompt, include_reflections);
      eval.q_value = q_direct_eval(prompt, backend);
      eval.belief = OutcomeBelief::from_q(eval.q_value);
      break;
    }
    case EngineMode::QVariant: {
      const std::string prompt = judgment_prompt(
          history, candidate.action, traj, cfg.prompt, include_reflections);
      const MarkerProbs raw = marker_probs(prompt, cfg.markers, backend);
      eval.q_value = q_variant_logpw_raw(raw);
      eval.belief = OutcomeBelief::from_q(eval.q_value);
      break;
    }
    default: {
      const auto [belief, q] =
          q_with_rollout(history, candidate.action, traj, cfg.markers,
                         cfg.prompt, backend, include_reflections);
      eval.belief = belief;
      eval.q_value = q;
      break;
    }
  }
  return eval;
}

}  // namespace

std::pair<std::string, DecisionRecord> decide_step(const History& history,
                                                   const EngineConfig& cfg,
                                                   Backend& backend) {
  if (static_cast<int>(history.steps.size()) >= cfg.horizon) {
    throw ValidationError("history already at the horizon");
  }
  const bool include_reflections = cfg.mode != EngineMode::NoReflection;

  ActorConfig acfg = cfg.actor;
  acfg.num_candidates = cfg.num_candidates;
  const std::vector<ScoredAction> candidates =
      sample_candidates(history, acfg, cfg.prompt, backend, include_reflections);

  DecisionRecord record;
  record.step_index = static_cast<int>(history.steps.size());
  record.mode = to_string(cfg.mode);

  ImprovementInput input;
  for (const ScoredAction& c : candidates) {
    input.prior_logprobs.push_back(c.prior_logprob);
  }

  if (cfg.mode == EngineMode::NoCritic) {
    for (const ScoredAction& c : candidates) {
      CandidateEvaluation eval;
      eval.action = c.action;
      eval.prior_logprob = c.prior_logprob;
      record.candidates.push_back(std::move(eval));
      input.q_values.push_back(0.0);
    }
    input.alpha = AlphaSetting::finite(0.0);
  } else {
    record.candidates.resize(candidates.size());
    if (cfg.parallel_candidates && candidates.size() > 1) {
      std::vector<std::future<CandidateEvaluation>> futures;
      futures.reserve(candidates.size());
      for (const ScoredAction& c : candidates) {
        futures.push_back(std::async(std::launch::async, [&, c]() {
          return evaluate_candidate(history, c, cfg, backend,
                                    include_reflections);
        }));
      }
      for (size_t i = 0; i < futures.size(); ++i) {
        record.candidates[i] = futures[i].get();
      }
    } else {
      for (size_t i = 0; i < candidates.size(); ++i) {
        record.candidates[i] = evaluate_candidate(history, candidates[i], cfg,
                                                  backend, include_reflections);
      }
    }
    for (const CandidateEvaluation& eval : record.candidates) {
      input.q_values.push_back(eval.q_value);
    }
    input.alpha = cfg.mode == EngineMode::CriticOnly
                      ? AlphaSetting::critic_only_sentinel()
                      : cfg.alpha;
  }

  record.improved = improve(input);

  std::vector<std::string> actions;
  actions.reserve(candidates.size());
  for (const ScoredAction& c : candidates) actions.push_back(c.action);
  return {select_action(record.improved, actions), record};
}

// --- episode loop ------------------------------------------------------------

namespace {

std::optional<Reflection> reflect_on_step(const History& history,
                                          const Step& executed,
                                          const EngineConfig& cfg,
                                          Backend& backend) {
  History with_step = history;
  Step bare = executed;
  bare.reflection.reset();
  with_step.steps.push_back(std::move(bare));
  GenerationRequest req;
  req.prompt = history_to_prompt(with_step, cfg.prompt, true) + "\n" +
               labels::kCritic;
  req.max_tokens = cfg.rollout.max_text_tokens;
  req.stop = {"\n"};
  const std::string text = trim(backend.generate(req).text);
  if (text.empty()) return std::nullopt;
  return Reflection::from_text(text);
}

}  // namespace

EpisodeOutcome run_episode(Environment& env, const EngineConfig& cfg,
                           Backend& backend, std::uint64_t seed,
                           const std::string& task_kind) {
  EpisodeOutcome out;
  MeteredBackend metered(backend);

  EpisodeResult& result = out.result;
  try {
    const ResetOutcome start = env.reset(seed, task_kind);
    result.history.goal = start.goal;
    result.history.initial_observation = start.observation;

    bool done = false;
    for (int t = 0; t < cfg.horizon && !done; ++t) {
      std::pair<std::string, DecisionRecord> decision;
      try {
        decision = decide_step(result.history, cfg, metered);
      } catch (const BackendError& e) {
        if (!e.retryable()) throw;
        decision = decide_step(result.history, cfg, metered);  // one retry
      }
      const grid::EnvStepOutcome outcome = env.step(decision.first);
      ++result.steps_used;
      result.records.push_back(std::move(decision.second));

      Step step;
      step.action = decision.first;
      step.observation = outcome.observation_text;
      if (cfg.mode != EngineMode::NoReflection && !outcome.done) {
        step.reflection = reflect_on_step(result.history, step, cfg, metered);
      }
      result.history.steps.push_back(std::move(step));

      result.reward = outcome.reward;
      done = outcome.done;
    }
    // Unfinished episodes are failures with reward 0; the environment, not
    // the harness, is the only source of done.
    if (!done) result.reward = 0.0;
    result.success = done && result.reward >= 1.0 - 1e-9;
  } catch (const Error& e) {
    out.diagnostic = e.what();
    result.success = false;
    result.reward = 0.0;
  }
  result.tokens_used = metered.tokens_used();
  return out;
}

// --- batch -------------------------------------------------------------------

void from_json(const json& j, TaskEntry& v) {
  j.at("kind").get_to(v.kind);
  if (j.contains("seeds")) {
    j.at("seeds").get_to(v.seeds);
  } else {
    const std::uint64_t first = j.value("seed_start", 1ull);
    const int count = j.at("count").get<int>();
    for (int i = 0; i < count; ++i) v.seeds.push_back(first + static_cast<std::uint64_t>(i));
  }
  std::vector<std::uint64_t> sorted = v.seeds;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ConfigError("task seeds must be distinct");
  }
}

void from_json(const json& j, BackendSpec& v) {
  v.type = j.value("type", "oracle");
  if (v.type == "oracle") {
    v.oracle.prior_noise = j.value("prior_noise", 0.0);
    v.oracle.critic_noise_rate = j.value("critic_noise_rate", 0.0);
    v.oracle.adversarial_prior = j.value("adversarial_prior", false);
    v.oracle.top_action_mass = j.value("top_action_mass", 0.7);
  } else if (v.type == "scripted") {
    v.scripted_rules_path = j.at("rules").get<std::string>();
  } else if (v.type == "http") {
    v.http = j;
  } else {
    throw ConfigError("unknown backend type: " + v.type);
  }
}

void from_json(const json& j, RunManifest& v) {
  j.at("tasks").get_to(v.tasks);
  if (j.contains("configs")) {
    j.at("configs").get_to(v.configs);
  } else {
    v.configs.push_back(j.at("config").get<EngineConfig>());
  }
  if (j.contains("backend")) j.at("backend").get_to(v.backend);
  v.env_descriptor = j.value("env", "gridworld");
  v.output_dir = j.value("output", "");
  v.jobs = j.value("jobs", 1);
  if (v.jobs < 1) throw ConfigError("jobs must be >= 1");
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("bad manifest JSON: " + std::string(e.what()));
  }
  try {
    return j.get<RunManifest>();
  } catch (const json::exception& e) {
    throw ConfigError("bad manifest: " + std::string(e.what()));
  }
}

void to_json(json& j, const ConfigSummary& v) {
  j = json{{"label", v.label},
           {"episodes", v.episodes},
           {"successes", v.successes},
           {"success_rate", v.success_rate},
           {"mean_reward", v.mean_reward},
           {"mean_steps", v.mean_steps},
           {"mean_tokens", v.mean_tokens}};
}

BackendFactory make_backend_factory(const BackendSpec& spec) {
  if (spec.type == "oracle") {
    const OracleConfig cfg = spec.oracle;
    return [cfg](const std::string& task_kind, std::uint64_t seed) {
      return std::make_unique<OracleBackend>(
          grid::reset_state(seed, grid::task_kind_from_string(task_kind)), cfg);
    };
  }
  if (spec.type == "scripted") {
    const std::string path = spec.scripted_rules_path;
    return [path](const std::string&, std::uint64_t) {
      return std::make_unique<ScriptedBackend>(
          ScriptedBackend::from_json_file(path));
    };
  }
  if (spec.type == "http") {
    const HttpBackendConfig cfg = HttpBackendConfig::from_json(spec.http);
    return [cfg](const std::string&, std::uint64_t) {
      return std::make_unique<HttpBackend>(cfg);
    };
  }
  throw ConfigError("unknown backend type: " + spec.type);
}

BatchResult run_batch(const RunManifest& manifest) {
  struct Job {
    size_t config_idx;
    std::string task_kind;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (size_t c = 0; c < manifest.configs.size(); ++c) {
    for (const TaskEntry& task : manifest.tasks) {
      for (std::uint64_t seed : task.seeds) {
        jobs.push_back({c, task.kind, seed});
      }
    }
  }

  const BackendFactory backend_factory = make_backend_factory(manifest.backend);
  std::vector<json> lines(jobs.size());
  std::vector<int> per_config_episodes(manifest.configs.size(), 0);
  std::vector<int> per_config_success(manifest.configs.size(), 0);
  std::vector<double> per_config_reward(manifest.configs.size(), 0.0);
  std::vector<double> per_config_steps(manifest.configs.size(), 0.0);
  std::vector<double> per_config_tokens(manifest.configs.size(), 0.0);

  std::atomic<size_t> next{0};
  std::mutex accum_mutex;
  auto worker = [&]() {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const Job& job = jobs[i];
      const EngineConfig& cfg = manifest.configs[job.config_idx];
      const std::unique_ptr<Environment> env =
          make_environment(manifest.env_descriptor);
      const std::unique_ptr<Backend> backend =
          backend_factory(job.task_kind, job.seed);
      const EpisodeOutcome outcome =
          run_episode(*env, cfg, *backend, job.seed, job.task_kind);

      json line = outcome.result;
      line["config"] = cfg.label;
      line["task"] = job.task_kind;
      line["seed"] = job.seed;
      if (!outcome.diagnostic.empty()) line["diagnostic"] = outcome.diagnostic;
      lines[i] = std::move(line);

      std::lock_guard<std::mutex> lock(accum_mutex);
      per_config_episodes[job.config_idx] += 1;
      per_config_success[job.config_idx] += outcome.result.success ? 1 : 0;
      per_config_reward[job.config_idx] += outcome.result.reward;
      per_config_steps[job.config_idx] += outcome.result.steps_used;
      per_config_tokens[job.config_idx] +=
          static_cast<double>(outcome.result.tokens_used);
    }
  };

  const int thread_count =
      std::max(1, std::min<int>(manifest.jobs, static_cast<int>(jobs.size())));
  if (thread_count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(thread_count));
    for (int t = 0; t < thread_count; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  BatchResult result;
  result.episode_lines = std::move(lines);
  for (size_t c = 0; c < manifest.configs.size(); ++c) {
    ConfigSummary row;
    row.label = manifest.configs[c].label;
    row.episodes = per_config_episodes[c];
    row.successes = per_config_success[c];
    if (row.episodes > 0) {
      row.success_rate = static_cast<double>(row.successes) / row.episodes;
      row.mean_reward = per_config_reward[c] / row.episodes;
      row.mean_steps = per_config_steps[c] / row.episodes;
      row.mean_tokens = per_config_tokens[c] / row.episodes;
    }
    result.summary.push_back(std::move(row));
  }

  if (!manifest.output_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(manifest.output_dir);
    const fs::path dir(manifest.output_dir);
    {
      std::ofstream traces(dir / "episodes.jsonl");
      for (const json& line : result.episode_lines) traces << line.dump() << "\n";
    }
    {
      std::ofstream csv(dir / "summary.csv");
      csv << "label,episodes,successes,success_rate,mean_reward,mean_steps,"
             "mean_tokens\n";
      for (const ConfigSummary& row : result.summary) {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%s,%d,%d,%.6f,%.6f,%.6f,%.6f\n",
                      row.label.c_str(), row.episodes, row.successes,
                      row.success_rate, row.mean_reward, row.mean_steps,
                      row.mean_tokens);
        csv << buf;
      }
    }
    {
      std::ofstream js(dir / "summary.json");
      js << json(result.summary).dump(2) << "\n";
    }
  }
  return result;
}

}  // namespace lac

// lac: run / eval / analyze / demo over the actor-critic decision engine.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "lac/analysis.hpp"
#include "lac/harness.hpp"
#include "lac/http_backend.hpp"
#include "lac/policy.hpp"
#include "lac/scripted_backend.hpp"

namespace {

using namespace lac;

constexpr int kExitSuccess = 0;
constexpr int kExitEpisodeFailed = 1;
constexpr int kExitConfigError = 2;

struct RunFlags {
  std::string env = "gridworld";
  std::string backend = "oracle";
  std::string rules;
  std::string mode = "full";
  std::string alpha = "1.0";
  int n = 5;
  int max_depth = 4;
  int horizon = -1;
  std::string profile = "babyai";
  std::uint64_t seed = 1;
  std::string task = "goto";
  std::string out;
  double oracle_prior_noise = 0.0;
  double oracle_critic_noise = 0.0;
  std::string backend_url;
  std::string model;
  std::string api_key;
  int timeout_ms = 0;
  int retries = -1;
};

AlphaSetting parse_alpha(const std::string& text) {
  if (text == "critic-only") return AlphaSetting::critic_only_sentinel();
  size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("alpha must be a number or \"critic-only\"");
  }
  if (used != text.size() || !std::isfinite(value)) {
    throw ConfigError("alpha must be a number or \"critic-only\"");
  }
  if (value < 0.0) throw ConfigError("alpha must be >= 0");
  return AlphaSetting::finite(value);
}

EngineConfig config_from_flags(const RunFlags& flags) {
  EngineConfig cfg;
  cfg.mode = engine_mode_from_string(flags.mode);
  cfg.label = to_string(cfg.mode);
  cfg.alpha = parse_alpha(flags.alpha);
  if (cfg.mode == EngineMode::NoCritic && !(cfg.alpha.critic_only) &&
      cfg.alpha.value != 0.0) {
    std::cerr << "warning: alpha is ignored in no-critic mode\n";
  }
  cfg.num_candidates = flags.n;
  cfg.rollout.max_depth = flags.max_depth;
  cfg.horizon = flags.horizon > 0 ? flags.horizon : profile_horizon(flags.profile);
  return cfg;
}

std::unique_ptr<Backend> backend_from_flags(const RunFlags& flags) {
  if (flags.backend == "oracle") {
    OracleConfig ocfg;
    ocfg.prior_noise = flags.oracle_prior_noise;
    ocfg.critic_noise_rate = flags.oracle_critic_noise;
    return std::make_unique<OracleBackend>(
        grid::reset_state(flags.seed, grid::task_kind_from_string(flags.task)),
        ocfg);
  }
  if (flags.backend == "scripted") {
    if (flags.rules.empty()) {
      throw ConfigError("scripted backend needs --rules <file>");
    }
    return std::make_unique<ScriptedBackend>(
        ScriptedBackend::from_json_file(flags.rules));
  }
  if (flags.backend == "http") {
    HttpBackendConfig hcfg = HttpBackendConfig::from_environment();
    if (!flags.backend_url.empty()) hcfg.base_url = flags.backend_url;
    if (!flags.model.empty()) hcfg.model = flags.model;
    if (!flags.api_key.empty()) hcfg.api_key = flags.api_key;
    if (flags.timeout_ms > 0) hcfg.timeout_ms = flags.timeout_ms;
    if (flags.retries >= 0) hcfg.retries = flags.retries;
    return std::make_unique<HttpBackend>(hcfg);
  }
  throw ConfigError("unknown backend: " + flags.backend);
}

int cmd_run(const RunFlags& flags) {
  const EngineConfig cfg = config_from_flags(flags);
  const std::unique_ptr<Environment> env = make_environment(flags.env);
  const std::unique_ptr<Backend> backend = backend_from_flags(flags);

  const EpisodeOutcome outcome =
      run_episode(*env, cfg, *backend, flags.seed, flags.task);

  if (!flags.out.empty()) {
    std::ofstream trace(flags.out);
    if (!trace) throw ConfigError("cannot write " + flags.out);
    for (const DecisionRecord& record : outcome.result.records) {
      trace << json(record).dump() << "\n";
    }
    json line = outcome.result;
    line["task"] = flags.task;
    line["seed"] = flags.seed;
    if (!outcome.diagnostic.empty()) line["diagnostic"] = outcome.diagnostic;
    trace << line.dump() << "\n";
  }

  std::cout << "task=" << flags.task << " seed=" << flags.seed
            << " success=" << (outcome.result.success ? "true" : "false")
            << " reward=" << outcome.result.reward
            << " steps=" << outcome.result.steps_used
            << " tokens=" << outcome.result.tokens_used << "\n";
  if (!outcome.diagnostic.empty()) {
    std::cerr << "episode aborted: " << outcome.diagnostic << "\n";
  }
  return outcome.result.success ? kExitSuccess : kExitEpisodeFailed;
}

struct EvalFlags {
  std::string manifest_path;
  std::string tasks;       // comma-separated kinds for inline manifests
  int seed_count = 50;     // seeds 1..N per task kind
  std::string out;
  int jobs = 0;
  std::string env;
  std::string backend;
  // per-config overrides; only applied when explicitly set
  std::string mode;
  std::string alpha;
  int n = 0;
  int max_depth = 0;
  int horizon = 0;
};

int cmd_eval(const EvalFlags& flags, const CLI::App& cmd) {
  RunManifest manifest;
  if (!flags.manifest_path.empty()) {
    manifest = load_manifest(flags.manifest_path);
  } else if (!flags.tasks.empty()) {
    // Inline manifest from flags alone.
    std::stringstream kinds(flags.tasks);
    std::string kind;
    while (std::getline(kinds, kind, ',')) {
      TaskEntry entry;
      entry.kind = trim(kind);
      for (int s = 1; s <= flags.seed_count; ++s) {
        entry.seeds.push_back(static_cast<std::uint64_t>(s));
      }
      manifest.tasks.push_back(std::move(entry));
    }
    manifest.configs.push_back(EngineConfig{});
  } else {
    throw ConfigError("eval needs --manifest or --tasks");
  }

  // Explicit flags override manifest values.
  if (cmd.count("--out") > 0) manifest.output_dir = flags.out;
  if (cmd.count("--jobs") > 0) manifest.jobs = flags.jobs;
  if (cmd.count("--env") > 0) manifest.env_descriptor = flags.env;
  if (cmd.count("--backend") > 0) {
    manifest.backend = BackendSpec{};
    manifest.backend.type = flags.backend;
  }
  for (EngineConfig& cfg : manifest.configs) {
    if (cmd.count("--mode") > 0) {
      cfg.mode = engine_mode_from_string(flags.mode);
      cfg.label = to_string(cfg.mode);
    }
    if (cmd.count("--alpha") > 0) cfg.alpha = parse_alpha(flags.alpha);
    if (cmd.count("--n") > 0) cfg.num_candidates = flags.n;
    if (cmd.count("--max-depth") > 0) cfg.rollout.max_depth = flags.max_depth;
    if (cmd.count("--horizon") > 0) cfg.horizon = flags.horizon;
  }

  const BatchResult result = run_batch(manifest);
  for (const ConfigSummary& row : result.summary) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "%-16s episodes=%d success_rate=%.3f mean_reward=%.3f "
                  "mean_steps=%.2f mean_tokens=%.1f\n",
                  row.label.c_str(), row.episodes, row.success_rate,
                  row.mean_reward, row.mean_steps, row.mean_tokens);
    std::cout << buf;
  }
  return kExitSuccess;
}

int cmd_analyze(const std::string& in_path, const std::string& out_dir) {
  if (!std::filesystem::exists(in_path)) {
    throw ConfigError("input trace not found: " + in_path);
  }
  const TraceFile traces = read_trace_file(in_path);
  const CorrelationReport corr = correlation_report(traces.episodes);
  const ConfidenceReport conf = confidence_report(traces.episodes);
  const std::vector<CostConfigReport> cost = cost_report(traces.episodes);

  // Success rates per config label for the chart.
  std::vector<ModeSuccess> success;
  for (const CostConfigReport& row : cost) {
    int wins = 0;
    int total = 0;
    for (const TraceEpisode& ep : traces.episodes) {
      if (ep.config != row.config) continue;
      ++total;
      wins += ep.result.success ? 1 : 0;
    }
    success.push_back(
        {row.config.empty() ? "all" : row.config,
         total > 0 ? static_cast<double>(wins) / total : 0.0});
  }

  std::filesystem::create_directories(out_dir);
  emit_plots(success, corr, conf, cost, out_dir);
  const json report = report_to_json(corr, conf, cost, traces.skipped_lines);
  std::ofstream out(std::filesystem::path(out_dir) / "report.json");
  out << report.dump(2) << "\n";

  std::cout << "episodes=" << traces.episodes.size()
            << " skipped_lines=" << traces.skipped_lines
            << " decisions=" << conf.decisions
            << " excluded_trajectories=" << corr.excluded_trajectories << "\n";
  return kExitSuccess;
}

// A scripted disagreement scenario: the prior prefers exploring a drawer, the
// rollout-informed critic prefers grabbing the saltshaker it has already
// seen; the improved policy flips the prior's choice.
int cmd_demo(const std::string& alpha_text) {
  const AlphaSetting alpha = parse_alpha(alpha_text);

  History history;
  history.goal.text = "put a saltshaker in the drawer";
  history.initial_observation =
      "You are in the middle of a room. Looking quickly around you, you see a "
      "cabinet 2, a drawer 1, and a countertop 1.";
  Step looked;
  looked.action = "go to cabinet 2";
  looked.observation = "On the cabinet 2, you see a saltshaker 1.";
  looked.reflection = Reflection::from_text(
      "I have found a saltshaker in cabinet 2. This step is GOOD.");
  history.steps.push_back(looked);

  ScriptedBackend backend;
  backend.add_top_token_rule({"", labels::kAction},
                             {{"go", 0.5}, {"take", 0.3}});
  backend.add_generation_rule({"", "Action: go"}, " to drawer 1");
  backend.add_generation_rule({"", "Action: take"},
                              " saltshaker 1 from cabinet 2");
  backend.add_continuation_score({"", ""}, "go to drawer 1", std::log(0.5));
  backend.add_continuation_score({"", ""}, "take saltshaker 1 from cabinet 2",
                                 std::log(0.3));
  backend.add_generation_rule({"Action: go to drawer 1", "Observation: "},
                              "The drawer 1 is closed.");
  backend.add_generation_rule(
      {"Action: take saltshaker 1 from cabinet 2", "Observation: "},
      "You pick up the saltshaker 1 from the cabinet 2.");
  backend.add_generation_rule(
      {"The drawer 1 is closed.", "Critic: "},
      "I have not taken the saltshaker yet. This step is BAD.");
  backend.add_generation_rule(
      {"You pick up the saltshaker 1", "Critic: "},
      "I have taken the saltshaker. This step is GOOD.");
  // Marker beliefs at the two judgment positions: q = -1 and q = +2.
  backend.add_token_prob_rule(
      {"I have not taken the saltshaker yet", ""},
      {{"GOOD", 1.0 / (1.0 + std::exp(1.0))},
       {"BAD", 1.0 / (1.0 + std::exp(-1.0))}});
  backend.add_token_prob_rule(
      {"I have taken the saltshaker", ""},
      {{"GOOD", 1.0 / (1.0 + std::exp(-2.0))},
       {"BAD", 1.0 / (1.0 + std::exp(2.0))}});

  EngineConfig cfg;
  cfg.mode = EngineMode::Full;
  cfg.alpha = alpha;
  cfg.num_candidates = 5;

  const auto [action, record] = decide_step(history, cfg, backend);

  size_t prior_argmax = 0;
  for (size_t i = 1; i < record.candidates.size(); ++i) {
    if (record.candidates[i].prior_logprob >
        record.candidates[prior_argmax].prior_logprob) {
      prior_argmax = i;
    }
  }

  std::cout << "Goal: " << history.goal.text << "\n";
  std::cout << "Mode: full  alpha: " << alpha_text << "\n\n";
  std::printf("  %-36s %8s %8s %10s\n", "action", "prior", "Q", "improved");
  for (size_t i = 0; i < record.candidates.size(); ++i) {
    const CandidateEvaluation& c = record.candidates[i];
    std::printf("  %-36s %8.3f %+8.3f %10.3f%s\n", c.action.c_str(),
                std::exp(c.prior_logprob), c.q_value,
                record.improved.candidate_probs[i],
                static_cast<int>(i) == record.improved.chosen_index ? "  *"
                                                                    : "");
  }
  std::cout << "\nPrior argmax:  "
            << record.candidates[prior_argmax].action << "\n";
  std::cout << "Chosen action: " << action << "\n";
  return kExitSuccess;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LAC actor-critic decision engine"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  RunFlags flags;
  CLI::App* run = app.add_subcommand("run", "Run one episode");
  run->add_option("--env", flags.env,
                  "Environment: gridworld or external:<command>")
      ->capture_default_str();
  run->add_option("--backend", flags.backend, "Backend: oracle|scripted|http")
      ->capture_default_str();
  run->add_option("--rules", flags.rules, "Scripted backend rules JSON");
  run->add_option("--mode", flags.mode,
                  "full|no-critic|critic-only|no-rollout|no-reflection|"
                  "q-variant|direct-eval")
      ->capture_default_str();
  run->add_option("--alpha", flags.alpha, "KL weight (>= 0) or critic-only")
      ->capture_default_str();
  run->add_option("--n", flags.n, "Candidate actions per step")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run->add_option("--max-depth", flags.max_depth, "Rollout depth")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run->add_option("--horizon", flags.horizon, "Step limit (overrides profile)");
  run->add_option("--profile", flags.profile,
                  "Horizon profile: alfworld(40)|babyai(30)|webshop(15)")
      ->capture_default_str();
  run->add_option("--seed", flags.seed, "Episode seed")->capture_default_str();
  run->add_option("--task", flags.task,
                  "goto|pickup|goto-after-pickup|pickup-then-goto")
      ->capture_default_str();
  run->add_option("--out", flags.out, "Decision trace JSONL path");
  run->add_option("--prior-noise", flags.oracle_prior_noise,
                  "Oracle prior corruption rate");
  run->add_option("--critic-noise", flags.oracle_critic_noise,
                  "Oracle judgment flip rate");
  run->add_option("--backend-url", flags.backend_url, "Completions base URL")
      ->envname("LAC_BACKEND_URL");
  run->add_option("--model", flags.model, "Model name")->envname("LAC_MODEL");
  run->add_option("--api-key", flags.api_key, "API key")->envname("LAC_API_KEY");
  run->add_option("--timeout-ms", flags.timeout_ms, "HTTP request timeout")
      ->envname("LAC_TIMEOUT_MS");
  run->add_option("--retries", flags.retries, "HTTP retry count")
      ->envname("LAC_RETRIES");

  EvalFlags eval_flags;
  CLI::App* eval =
      app.add_subcommand("eval", "Run a batch from a manifest or inline flags");
  eval->add_option("--manifest", eval_flags.manifest_path, "Manifest JSON path");
  eval->add_option("--tasks", eval_flags.tasks,
                   "Comma-separated task kinds for an inline manifest");
  eval->add_option("--seed-count", eval_flags.seed_count,
                   "Seeds 1..N per task kind (inline manifests)")
      ->capture_default_str();
  eval->add_option("--out", eval_flags.out, "Output directory override");
  eval->add_option("--jobs", eval_flags.jobs, "Concurrent episodes override");
  eval->add_option("--env", eval_flags.env, "Environment override");
  eval->add_option("--backend", eval_flags.backend, "Backend type override");
  eval->add_option("--mode", eval_flags.mode, "Mode override for every config");
  eval->add_option("--alpha", eval_flags.alpha, "Alpha override");
  eval->add_option("--n", eval_flags.n, "Candidate count override");
  eval->add_option("--max-depth", eval_flags.max_depth, "Rollout depth override");
  eval->add_option("--horizon", eval_flags.horizon, "Horizon override");

  std::string in_path;
  std::string out_dir = "analysis";
  CLI::App* analyze = app.add_subcommand("analyze", "Reports over trace files");
  analyze->add_option("--in", in_path, "episodes.jsonl path")->required();
  analyze->add_option("--out", out_dir, "Report output directory");

  std::string demo_alpha = "1.0";
  CLI::App* demo = app.add_subcommand(
      "demo", "Prior-versus-critic disagreement walkthrough");
  demo->add_option("--alpha", demo_alpha, "KL weight (>= 0) or critic-only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitSuccess : kExitConfigError;
  }

  try {
    if (run->parsed()) return cmd_run(flags);
    if (eval->parsed()) return cmd_eval(eval_flags, *eval);
    if (analyze->parsed()) return cmd_analyze(in_path, out_dir);
    if (demo->parsed()) return cmd_demo(demo_alpha);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEpisodeFailed;
  }
  return kExitConfigError;
}

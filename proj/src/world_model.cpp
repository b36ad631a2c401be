#include "lac/world_model.hpp"

#include "lac/error.hpp"

namespace lac {

namespace {

std::string render_predicted(const History& history, const std::string& action,
                             const RolloutTrajectory& partial,
                             const PromptTemplate& tmpl,
                             bool include_reflections) {
  std::string out = history_to_prompt(history, tmpl, include_reflections);
  out += "\n";
  out += labels::kAction;
  out += action;
  for (size_t i = 0; i < partial.steps.size(); ++i) {
    const Step& step = partial.steps[i];
    if (i > 0) {
      out += "\n";
      out += labels::kAction;
      out += step.action;
    }
    out += "\n";
    out += labels::kObservation;
    out += step.observation;
    if (include_reflections && step.reflection) {
      out += "\n";
      out += labels::kCritic;
      out += step.reflection->text;
    }
  }
  return out;
}

std::string generate_line(Backend& backend, std::string prompt, int max_tokens) {
  GenerationRequest req;
  req.prompt = std::move(prompt);
  req.max_tokens = max_tokens;
  req.stop = {"\n"};
  return trim(backend.generate(req).text);
}

}  // namespace

RolloutTrajectory rollout(const History& history, const std::string& action,
                          const RolloutConfig& cfg, const PromptTemplate& tmpl,
                          Backend& backend) {
  if (cfg.max_depth < 1) throw ValidationError("rollout max_depth must be >= 1");

  RolloutTrajectory traj;
  std::string pending_action = action;
  try {
    for (int depth = 0; depth < cfg.max_depth; ++depth) {
      Step step;
      step.action = pending_action;

      std::string base = render_predicted(history, action, traj, tmpl,
                                          cfg.include_reflections);
      if (depth > 0) {
        base += "\n";
        base += labels::kAction;
        base += pending_action;
      }
      step.observation =
          generate_line(backend, base + "\n" + labels::kObservation,
                        cfg.max_text_tokens);

      if (cfg.include_reflections) {
        const std::string reflection_prompt = base + "\n" +
                                              labels::kObservation +
                                              step.observation + "\n" +
                                              labels::kCritic;
        step.reflection =
            Reflection::from_text(generate_line(backend, reflection_prompt,
                                                cfg.max_text_tokens));
      }

      traj.steps.push_back(std::move(step));

      if (cfg.include_reflections && traj.steps.back().reflection) {
        const Judgment j = traj.steps.back().reflection->judgment;
        if (j == Judgment::Good) {
          traj.terminated_by = RolloutTermination::Good;
          return traj;
        }
        if (j == Judgment::Bad) {
          traj.terminated_by = RolloutTermination::Bad;
          return traj;
        }
      }
      if (depth + 1 == cfg.max_depth) break;

      pending_action = generate_line(
          backend,
          render_predicted(history, action, traj, tmpl,
                           cfg.include_reflections) +
              "\n" + labels::kAction,
          cfg.max_text_tokens);
      if (pending_action.empty()) break;
    }
  } catch (const BackendError&) {
    traj.backend_error = true;
  }
  traj.terminated_by = RolloutTermination::DepthLimit;
  return traj;
}

}  // namespace lac

#include "lac/prompt.hpp"

#include "lac/error.hpp"

namespace lac {

std::string render_trajectory(const History& history, bool include_reflections) {
  std::string out;
  out += labels::kGoal;
  out += history.goal.text;
  out += '\n';
  out += labels::kObservation;
  out += history.initial_observation;
  for (const Step& step : history.steps) {
    out += '\n';
    out += labels::kAction;
    out += step.action;
    out += '\n';
    out += labels::kObservation;
    out += step.observation;
    if (include_reflections && step.reflection) {
      out += '\n';
      out += labels::kCritic;
      out += step.reflection->text;
    }
  }
  return out;
}

std::string history_to_prompt(const History& history, const PromptTemplate& tmpl,
                              bool include_reflections) {
  if (!history.goal.valid()) throw ValidationError("history has an empty goal");
  const size_t ex_pos = tmpl.layout.find("{examples}");
  const size_t task_pos = tmpl.layout.find("{task}");
  if (ex_pos == std::string::npos || task_pos == std::string::npos) {
    throw ConfigError(
        "prompt template layout must contain {examples} and {task}");
  }

  std::string examples_block;
  for (size_t i = 0; i < tmpl.examples.size(); ++i) {
    if (i > 0) examples_block += tmpl.example_separator;
    examples_block += tmpl.examples[i];
  }
  if (!examples_block.empty()) examples_block += tmpl.example_separator;

  const std::string task_block = render_trajectory(history, include_reflections);

  std::string out = tmpl.layout;
  // Replace {task} first if it comes later, so offsets stay valid.
  auto replace = [&out](const std::string& key, const std::string& value) {
    const size_t pos = out.find(key);
    out.replace(pos, key.size(), value);
  };
  if (task_pos > ex_pos) {
    replace("{task}", task_block);
    replace("{examples}", examples_block);
  } else {
    replace("{examples}", examples_block);
    replace("{task}", task_block);
  }
  return out;
}

std::string action_prompt(const History& history, const PromptTemplate& tmpl,
                          bool include_reflections) {
  return history_to_prompt(history, tmpl, include_reflections) + "\n" +
         labels::kAction;
}

}  // namespace lac

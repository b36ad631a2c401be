#pragma once

#include <string>
#include <vector>

#include "lac/types.hpp"

namespace lac {

// Line labels of the trajectory text format. Every prompt in the engine is
// assembled from these, so backends that parse prompts (the oracle) and
// backends that complete them agree on the grammar:
//
//   Goal of the agent: <goal>
//   Observation: <text>
//   Action: <text>
//   Observation: <text>
//   Critic: <reflection>
//   ...
namespace labels {
inline constexpr const char* kGoal = "Goal of the agent: ";
inline constexpr const char* kObservation = "Observation: ";
inline constexpr const char* kAction = "Action: ";
inline constexpr const char* kCritic = "Critic: ";
}  // namespace labels

// The anchor immediately before the judgment marker in a reflection sentence.
inline constexpr const char* kJudgmentAnchor = "This step is ";

struct PromptTemplate {
  // Overall layout; must contain both placeholders.
  std::string layout = "{examples}{task}";
  // Pre-rendered few-shot trajectory blocks, joined by example_separator and
  // followed by one separator before the live task when non-empty.
  std::vector<std::string> examples;
  std::string example_separator = "\n\n";
};

// Renders goal, initial observation, and the interleaved (action,
// observation, reflection) triples. No trailing newline. Reflections are
// skipped entirely when include_reflections is false.
std::string render_trajectory(const History& history, bool include_reflections);

// Few-shot examples first, then the live trajectory, per the template layout.
// Throws ConfigError when the layout is missing a placeholder.
std::string history_to_prompt(const History& history, const PromptTemplate& tmpl,
                              bool include_reflections = true);

// Continuation prompts: the rendered prompt plus a dangling label.
std::string action_prompt(const History& history, const PromptTemplate& tmpl,
                          bool include_reflections = true);

}  // namespace lac

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lac/types.hpp"

namespace lac {
namespace grid {

enum class Color { Red, Green, Blue, Yellow, Grey, Purple };
enum class ObjectKind { Key, Ball, Box };
enum class Heading { North, East, South, West };

std::string to_string(Color c);
std::string to_string(ObjectKind k);

struct ObjectDescriptor {
  Color color = Color::Red;
  ObjectKind kind = ObjectKind::Key;

  bool operator==(const ObjectDescriptor&) const = default;
  std::string text() const;  // "green key"
};

struct GridObject {
  ObjectDescriptor what;
  int x = 0;
  int y = 0;
};

enum class TaskKind { GoTo, PickUp, GoToAfterPickUp, PickUpThenGoTo };

std::string to_string(TaskKind k);
TaskKind task_kind_from_string(const std::string& s);

struct TaskSpec {
  TaskKind kind = TaskKind::GoTo;
  // GoTo/PickUp: {target}. Sequenced kinds: {pickup target, goto target}.
  std::vector<ObjectDescriptor> targets;
};

// Goal phrasing for a task ("go to the green key", ...).
std::string goal_text(const TaskSpec& task);

struct GridState {
  int width = 8;
  int height = 8;
  int agent_x = 0;
  int agent_y = 0;
  Heading agent_dir = Heading::North;
  std::vector<GridObject> objects;
  std::optional<ObjectDescriptor> carried;
  TaskSpec task;
  std::uint64_t rng_seed = 0;
  int task_stage = 0;  // sequenced tasks advance 0 -> 1 on pickup
  bool done = false;
};

struct EnvStepOutcome {
  std::string observation_text;
  double reward = 0.0;
  bool done = false;
};

// The 6 primitive actions, in their canonical order.
inline constexpr std::array<const char*, 6> kPrimitives = {
    "turn left", "turn right", "go forward", "pick up", "drop", "toggle"};

// Exact lowercase primitive strings only.
std::optional<int> parse_primitive(const std::string& action);

// Deterministic initial state from (seed, task kind): target(s) plus 2-5
// distractors on an 8x8 floor, rerolled until the task is solvable.
GridState reset_state(std::uint64_t seed, TaskKind kind);

// Applies one primitive. Unparseable actions are a no-op observed as
// "Invalid action.". Movement is blocked by walls and objects; pick up takes
// the object directly ahead when hands are empty; drop places ahead when
// free; toggle is a legal no-op. Sets done (latched) with reward 1 when the
// task predicate is satisfied.
EnvStepOutcome step_state(GridState& state, const std::string& action);

// Text view of the 7x7 cone in front of the agent: walls first, then objects,
// clauses joined by ", ". Empty view renders "You see nothing ahead.".
std::string render_observation(const GridState& state);

// Distance sentinel for unreachable configurations.
inline constexpr int kUnreachable = 1 << 20;

// Exact number of primitive actions needed to complete the task from `state`
// (turns count; pickup/drop count; stage composition handled). 0 when done.
int task_distance(const GridState& state);

// A primitive that lies on a shortest completion path (one-step lookahead on
// task_distance); ties broken in kPrimitives order.
std::string optimal_action(const GridState& state);

}  // namespace grid
}  // namespace lac

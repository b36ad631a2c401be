#include "lac/gridworld.hpp"

#include <algorithm>
#include <deque>
#include <random>
#include <tuple>

#include "lac/error.hpp"

namespace lac {
namespace grid {

namespace {

struct Vec {
  int x;
  int y;
};

Vec forward_vec(Heading h) {
  switch (h) {
    case Heading::North: return {0, -1};
    case Heading::East: return {1, 0};
    case Heading::South: return {0, 1};
    case Heading::West: return {-1, 0};
  }
  return {0, -1};
}

// The agent's left-hand direction.
Vec left_vec(Heading h) {
  const Vec f = forward_vec(h);
  return {f.y, -f.x};
}

Heading turn_left(Heading h) {
  return static_cast<Heading>((static_cast<int>(h) + 3) % 4);
}

Heading turn_right(Heading h) {
  return static_cast<Heading>((static_cast<int>(h) + 1) % 4);
}

bool in_bounds(const GridState& s, int x, int y) {
  return x >= 0 && x < s.width && y >= 0 && y < s.height;
}

int object_at(const GridState& s, int x, int y) {
  for (size_t i = 0; i < s.objects.size(); ++i) {
    if (s.objects[i].x == x && s.objects[i].y == y) return static_cast<int>(i);
  }
  return -1;
}

std::string steps_phrase(int n, const std::string& direction) {
  return std::to_string(n) + (n == 1 ? " step " : " steps ") + direction;
}

// --- BFS over (x, y, heading) poses ---------------------------------------

struct Pose {
  int x;
  int y;
  int dir;  // Heading as int
};

int pose_index(const GridState& s, int x, int y, int dir) {
  return (y * s.width + x) * 4 + dir;
}

using Blocked = std::vector<bool>;  // width*height tiles

Blocked blocked_tiles(const GridState& s) {
  Blocked b(static_cast<size_t>(s.width * s.height), false);
  for (const GridObject& o : s.objects) {
    b[static_cast<size_t>(o.y * s.width + o.x)] = true;
  }
  return b;
}

// Action distances (turns and forward moves) from `start` to every pose.
std::vector<int> bfs_poses(const GridState& s, const Blocked& blocked,
                           Pose start) {
  std::vector<int> dist(static_cast<size_t>(s.width * s.height * 4),
                        kUnreachable);
  std::deque<Pose> queue;
  dist[static_cast<size_t>(pose_index(s, start.x, start.y, start.dir))] = 0;
  queue.push_back(start);
  while (!queue.empty()) {
    const Pose p = queue.front();
    queue.pop_front();
    const int d = dist[static_cast<size_t>(pose_index(s, p.x, p.y, p.dir))];
    auto visit = [&](Pose next) {
      int& slot = dist[static_cast<size_t>(pose_index(s, next.x, next.y, next.dir))];
      if (slot > d + 1) {
        slot = d + 1;
        queue.push_back(next);
      }
    };
    visit({p.x, p.y, (p.dir + 3) % 4});
    visit({p.x, p.y, (p.dir + 1) % 4});
    const Vec f = forward_vec(static_cast<Heading>(p.dir));
    const int nx = p.x + f.x;
    const int ny = p.y + f.y;
    if (in_bounds(s, nx, ny) && !blocked[static_cast<size_t>(ny * s.width + nx)]) {
      visit({nx, ny, p.dir});
    }
  }
  return dist;
}

// Poses standing on a free neighbor tile of (ox, oy), facing the object.
std::vector<Pose> approach_poses(const GridState& s, const Blocked& blocked,
                                 int ox, int oy) {
  std::vector<Pose> out;
  for (int dir = 0; dir < 4; ++dir) {
    const Vec f = forward_vec(static_cast<Heading>(dir));
    const int ax = ox - f.x;
    const int ay = oy - f.y;
    if (in_bounds(s, ax, ay) && !blocked[static_cast<size_t>(ay * s.width + ax)]) {
      out.push_back({ax, ay, dir});
    }
  }
  return out;
}

struct Phase {
  bool pick = false;  // otherwise goto
  ObjectDescriptor target;
};

// Objects matching a descriptor, as indices into state.objects.
std::vector<int> matching_objects(const GridState& s, const ObjectDescriptor& d) {
  std::vector<int> out;
  for (size_t i = 0; i < s.objects.size(); ++i) {
    if (s.objects[i].what == d) out.push_back(static_cast<int>(i));
  }
  return out;
}

int solve_phases(const GridState& s, const Blocked& blocked, Pose start,
                 bool carrying_wrong, const std::vector<Phase>& phases,
                 size_t phase_idx);

// Completes the leading pick phase from every feasible approach, then recurses
// into the remaining phases with the picked object's tile freed.
int solve_pick(const GridState& s, const Blocked& blocked, Pose start,
               const std::vector<Phase>& phases, size_t phase_idx) {
  const std::vector<int> dist = bfs_poses(s, blocked, start);
  int best = kUnreachable;
  for (int oi : matching_objects(s, phases[phase_idx].target)) {
    const GridObject& o = s.objects[static_cast<size_t>(oi)];
    const int tile = o.y * s.width + o.x;
    if (!blocked[static_cast<size_t>(tile)]) continue;  // already picked
    for (const Pose& ap : approach_poses(s, blocked, o.x, o.y)) {
      const int d = dist[static_cast<size_t>(pose_index(s, ap.x, ap.y, ap.dir))];
      if (d >= kUnreachable) continue;
      Blocked after = blocked;
      after[static_cast<size_t>(tile)] = false;
      const int rest = solve_phases(s, after, ap, false, phases, phase_idx + 1);
      if (rest >= kUnreachable) continue;
      best = std::min(best, d + 1 + rest);
    }
  }
  return best;
}

int solve_phases(const GridState& s, const Blocked& blocked, Pose start,
                 bool carrying_wrong, const std::vector<Phase>& phases,
                 size_t phase_idx) {
  if (phase_idx >= phases.size()) return 0;
  const Phase& phase = phases[phase_idx];

  if (!phase.pick) {
    // Goto is always terminal: reaching an approach pose completes it.
    const std::vector<int> dist = bfs_poses(s, blocked, start);
    int best = kUnreachable;
    for (int oi : matching_objects(s, phase.target)) {
      const GridObject& o = s.objects[static_cast<size_t>(oi)];
      if (!blocked[static_cast<size_t>(o.y * s.width + o.x)]) continue;
      for (const Pose& ap : approach_poses(s, blocked, o.x, o.y)) {
        best = std::min(
            best, dist[static_cast<size_t>(pose_index(s, ap.x, ap.y, ap.dir))]);
      }
    }
    return best;
  }

  if (!carrying_wrong) return solve_pick(s, blocked, start, phases, phase_idx);

  // Hands are full of the wrong object: drop it somewhere first. The dropped
  // object becomes an obstacle at the drop tile.
  const std::vector<int> dist = bfs_poses(s, blocked, start);
  int best = kUnreachable;
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      if (blocked[static_cast<size_t>(y * s.width + x)]) continue;
      for (int dir = 0; dir < 4; ++dir) {
        const int d = dist[static_cast<size_t>(pose_index(s, x, y, dir))];
        if (d >= kUnreachable) continue;
        const Vec f = forward_vec(static_cast<Heading>(dir));
        const int tx = x + f.x;
        const int ty = y + f.y;
        if (!in_bounds(s, tx, ty) ||
            blocked[static_cast<size_t>(ty * s.width + tx)]) {
          continue;
        }
        Blocked after = blocked;
        after[static_cast<size_t>(ty * s.width + tx)] = true;
        const int rest =
            solve_pick(s, after, {x, y, dir}, phases, phase_idx);
        if (rest >= kUnreachable) continue;
        best = std::min(best, d + 1 + rest);
      }
    }
  }
  return best;
}

std::vector<Phase> remaining_phases(const GridState& s) {
  const TaskSpec& task = s.task;
  switch (task.kind) {
    case TaskKind::GoTo:
      return {{false, task.targets.at(0)}};
    case TaskKind::PickUp:
      return {{true, task.targets.at(0)}};
    case TaskKind::GoToAfterPickUp:
    case TaskKind::PickUpThenGoTo:
      if (s.task_stage == 0) {
        return {{true, task.targets.at(0)}, {false, task.targets.at(1)}};
      }
      return {{false, task.targets.at(1)}};
  }
  return {};
}

}  // namespace

std::string to_string(Color c) {
  switch (c) {
    case Color::Red: return "red";
    case Color::Green: return "green";
    case Color::Blue: return "blue";
    case Color::Yellow: return "yellow";
    case Color::Grey: return "grey";
    case Color::Purple: return "purple";
  }
  return "red";
}

std::string to_string(ObjectKind k) {
  switch (k) {
    case ObjectKind::Key: return "key";
    case ObjectKind::Ball: return "ball";
    case ObjectKind::Box: return "box";
  }
  return "key";
}

std::string ObjectDescriptor::text() const {
  return to_string(color) + " " + to_string(kind);
}

std::string to_string(TaskKind k) {
  switch (k) {
    case TaskKind::GoTo: return "goto";
    case TaskKind::PickUp: return "pickup";
    case TaskKind::GoToAfterPickUp: return "goto-after-pickup";
    case TaskKind::PickUpThenGoTo: return "pickup-then-goto";
  }
  return "goto";
}

TaskKind task_kind_from_string(const std::string& s) {
  if (s == "goto") return TaskKind::GoTo;
  if (s == "pickup") return TaskKind::PickUp;
  if (s == "goto-after-pickup") return TaskKind::GoToAfterPickUp;
  if (s == "pickup-then-goto") return TaskKind::PickUpThenGoTo;
  throw ConfigError("unknown task kind: " + s);
}

std::string goal_text(const TaskSpec& task) {
  switch (task.kind) {
    case TaskKind::GoTo:
      return "go to the " + task.targets.at(0).text();
    case TaskKind::PickUp:
      return "pick up the " + task.targets.at(0).text();
    case TaskKind::GoToAfterPickUp:
      return "go to the " + task.targets.at(1).text() + " after you pick up the " +
             task.targets.at(0).text();
    case TaskKind::PickUpThenGoTo:
      return "pick up the " + task.targets.at(0).text() + ", then go to the " +
             task.targets.at(1).text();
  }
  return "";
}

std::optional<int> parse_primitive(const std::string& action) {
  for (size_t i = 0; i < kPrimitives.size(); ++i) {
    if (action == kPrimitives[i]) return static_cast<int>(i);
  }
  return std::nullopt;
}

GridState reset_state(std::uint64_t seed, TaskKind kind) {
  std::mt19937_64 rng(seed);
  auto draw = [&rng](int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); };

  for (int attempt = 0; attempt < 100; ++attempt) {
    GridState s;
    s.rng_seed = seed;
    s.task.kind = kind;

    const int num_targets =
        (kind == TaskKind::GoToAfterPickUp || kind == TaskKind::PickUpThenGoTo)
            ? 2
            : 1;
    s.task.targets.clear();
    while (static_cast<int>(s.task.targets.size()) < num_targets) {
      ObjectDescriptor d{static_cast<Color>(draw(6)),
                         static_cast<ObjectKind>(draw(3))};
      if (std::find(s.task.targets.begin(), s.task.targets.end(), d) ==
          s.task.targets.end()) {
        s.task.targets.push_back(d);
      }
    }

    auto free_tile = [&](int& x, int& y) {
      do {
        x = draw(s.width);
        y = draw(s.height);
      } while (object_at(s, x, y) >= 0 || (x == s.agent_x && y == s.agent_y));
    };

    s.agent_x = draw(s.width);
    s.agent_y = draw(s.height);
    s.agent_dir = static_cast<Heading>(draw(4));

    for (const ObjectDescriptor& d : s.task.targets) {
      GridObject o{d, 0, 0};
      free_tile(o.x, o.y);
      s.objects.push_back(o);
    }

    const int distractors = 2 + draw(4);
    for (int i = 0; i < distractors; ++i) {
      ObjectDescriptor d{static_cast<Color>(draw(6)),
                         static_cast<ObjectKind>(draw(3))};
      // Distractors never share a descriptor with a task target, so goals
      // stay unambiguous.
      if (std::find(s.task.targets.begin(), s.task.targets.end(), d) !=
          s.task.targets.end()) {
        --i;
        continue;
      }
      GridObject o{d, 0, 0};
      free_tile(o.x, o.y);
      s.objects.push_back(o);
    }

    const int d0 = task_distance(s);
    if (d0 > 0 && d0 < kUnreachable) return s;
  }
  throw Error("failed to build a solvable gridworld layout");
}

EnvStepOutcome step_state(GridState& state, const std::string& action) {
  EnvStepOutcome out;
  if (state.done) {
    out.observation_text = render_observation(state);
    out.done = true;
    return out;
  }

  const std::optional<int> prim = parse_primitive(action);
  if (!prim) {
    out.observation_text = "Invalid action.";
    return out;
  }

  const Vec f = forward_vec(state.agent_dir);
  const int ax = state.agent_x + f.x;
  const int ay = state.agent_y + f.y;

  switch (*prim) {
    case 0:
      state.agent_dir = turn_left(state.agent_dir);
      break;
    case 1:
      state.agent_dir = turn_right(state.agent_dir);
      break;
    case 2:
      if (in_bounds(state, ax, ay) && object_at(state, ax, ay) < 0) {
        state.agent_x = ax;
        state.agent_y = ay;
      }
      break;
    case 3: {
      const int oi = object_at(state, ax, ay);
      if (oi >= 0 && !state.carried) {
        state.carried = state.objects[static_cast<size_t>(oi)].what;
        state.objects.erase(state.objects.begin() + oi);
      }
      break;
    }
    case 4:
      if (state.carried && in_bounds(state, ax, ay) &&
          object_at(state, ax, ay) < 0) {
        state.objects.push_back({*state.carried, ax, ay});
        state.carried.reset();
      }
      break;
    case 5:
      break;  // toggle: legal no-op (no doors in scope)
  }

  // Task predicates, evaluated after the action.
  const Vec nf = forward_vec(state.agent_dir);
  const int fx = state.agent_x + nf.x;
  const int fy = state.agent_y + nf.y;
  auto facing = [&](const ObjectDescriptor& d) {
    const int oi = object_at(state, fx, fy);
    return oi >= 0 && state.objects[static_cast<size_t>(oi)].what == d;
  };
  switch (state.task.kind) {
    case TaskKind::GoTo:
      if (facing(state.task.targets.at(0))) state.done = true;
      break;
    case TaskKind::PickUp:
      if (state.carried && *state.carried == state.task.targets.at(0)) {
        state.done = true;
      }
      break;
    case TaskKind::GoToAfterPickUp:
    case TaskKind::PickUpThenGoTo:
      if (state.task_stage == 0 && state.carried &&
          *state.carried == state.task.targets.at(0)) {
        state.task_stage = 1;
      }
      if (state.task_stage == 1 && facing(state.task.targets.at(1))) {
        state.done = true;
      }
      break;
  }

  out.observation_text = render_observation(state);
  out.reward = state.done ? 1.0 : 0.0;
  out.done = state.done;
  return out;
}

std::string render_observation(const GridState& state) {
  std::vector<std::string> clauses;

  const Vec fwd = forward_vec(state.agent_dir);
  const Vec left = left_vec(state.agent_dir);

  // Boundary walls, at their perpendicular distances from the agent.
  auto wall_distance = [&](Vec dir) {
    int d = 0;
    int x = state.agent_x;
    int y = state.agent_y;
    while (in_bounds(state, x, y)) {
      x += dir.x;
      y += dir.y;
      ++d;
    }
    return d;
  };
  const int wall_left = wall_distance(left);
  if (wall_left <= 3) {
    clauses.push_back("You see a wall " + steps_phrase(wall_left, "left"));
  }
  const int wall_right = wall_distance({-left.x, -left.y});
  if (wall_right <= 3) {
    clauses.push_back("You see a wall " + steps_phrase(wall_right, "right"));
  }
  const int wall_fwd = wall_distance(fwd);
  if (wall_fwd <= 6) {
    clauses.push_back("You see a wall " + steps_phrase(wall_fwd, "forward"));
  }

  // Objects inside the 7x7 cone: forward 0..6, lateral within 3.
  struct Visible {
    int f;
    int l;
    std::string text;
  };
  std::vector<Visible> seen;
  for (const GridObject& o : state.objects) {
    const int dx = o.x - state.agent_x;
    const int dy = o.y - state.agent_y;
    const int f = dx * fwd.x + dy * fwd.y;
    const int l = dx * left.x + dy * left.y;
    if (f < 0 || f > 6 || l < -3 || l > 3) continue;
    std::string text = "You see a " + o.what.text();
    if (l != 0) {
      text += " " + steps_phrase(std::abs(l), l > 0 ? "left" : "right");
      if (f != 0) text += " and " + steps_phrase(f, "forward");
    } else {
      text += " " + steps_phrase(f, "forward");
    }
    seen.push_back({f, l, std::move(text)});
  }
  std::sort(seen.begin(), seen.end(), [](const Visible& a, const Visible& b) {
    return std::tie(a.f, b.l, a.text) < std::tie(b.f, a.l, b.text);
  });
  for (Visible& v : seen) clauses.push_back(std::move(v.text));

  if (clauses.empty()) return "You see nothing ahead.";
  std::string out;
  for (size_t i = 0; i < clauses.size(); ++i) {
    if (i > 0) out += ", ";
    out += clauses[i];
  }
  return out;
}

int task_distance(const GridState& state) {
  if (state.done) return 0;
  const std::vector<Phase> phases = remaining_phases(state);
  if (phases.empty()) return kUnreachable;

  // A pickup phase that is already satisfied in hand.
  if (phases[0].pick && state.carried && *state.carried == phases[0].target) {
    GridState advanced = state;
    advanced.task_stage = 1;
    if (advanced.task.kind == TaskKind::PickUp) return 0;
    return task_distance(advanced);
  }

  const bool carrying_wrong = phases[0].pick && state.carried.has_value();
  return solve_phases(state, blocked_tiles(state),
                      {state.agent_x, state.agent_y,
                       static_cast<int>(state.agent_dir)},
                      carrying_wrong, phases, 0);
}

std::string optimal_action(const GridState& state) {
  int best_total = kUnreachable;
  std::string best = kPrimitives[0];
  for (const char* prim : kPrimitives) {
    GridState next = state;
    step_state(next, prim);
    const int d = next.done ? 0 : task_distance(next);
    if (d >= kUnreachable) continue;
    if (1 + d < best_total) {
      best_total = 1 + d;
      best = prim;
    }
  }
  return best;
}

}  // namespace grid
}  // namespace lac

#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "lac/gridworld.hpp"
#include "lac/types.hpp"

namespace lac {

struct ResetOutcome {
  Goal goal;
  std::string observation;
};

// One episode's environment. Owned and driven by a single sequential caller.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual ResetOutcome reset(std::uint64_t seed, const std::string& task_kind) = 0;
  virtual grid::EnvStepOutcome step(const std::string& action) = 0;
  virtual std::string name() const = 0;
};

// The built-in gridworld.
class GridworldEnv final : public Environment {
 public:
  ResetOutcome reset(std::uint64_t seed, const std::string& task_kind) override;
  grid::EnvStepOutcome step(const std::string& action) override;
  std::string name() const override { return "gridworld"; }

  const grid::GridState& state() const { return state_; }

 private:
  grid::GridState state_;
  bool ready_ = false;
};

// Adapter speaking the external-environment protocol over a child process's
// stdio. One JSON object per LF-terminated line, UTF-8:
//   engine -> env  {"type":"reset","seed":<u64>,"task":<string>}
//                  {"type":"step","action":<string>}
//   env -> engine  {"type":"obs","goal":<string?>,"text":<string>,
//                   "reward":<f64>,"done":<bool>}
// Any malformed or missing reply raises ProtocolError, which the harness
// records as an episode failure.
class ExternalProcessEnv final : public Environment {
 public:
  explicit ExternalProcessEnv(const std::string& command,
                              int reply_timeout_ms = 10000);
  ~ExternalProcessEnv() override;

  ExternalProcessEnv(const ExternalProcessEnv&) = delete;
  ExternalProcessEnv& operator=(const ExternalProcessEnv&) = delete;

  ResetOutcome reset(std::uint64_t seed, const std::string& task_kind) override;
  grid::EnvStepOutcome step(const std::string& action) override;
  std::string name() const override { return "external"; }

 private:
  void send_line(const std::string& line);
  std::string read_line();
  json exchange(const json& message);

  int child_pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  int reply_timeout_ms_;
  std::string read_buffer_;
};

// "gridworld" or "external:<command>".
std::unique_ptr<Environment> make_environment(const std::string& descriptor);

}  // namespace lac

#include "lac/env.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "lac/error.hpp"

namespace lac {

ResetOutcome GridworldEnv::reset(std::uint64_t seed, const std::string& task_kind) {
  state_ = grid::reset_state(seed, grid::task_kind_from_string(task_kind));
  ready_ = true;
  return {Goal{grid::goal_text(state_.task)}, grid::render_observation(state_)};
}

grid::EnvStepOutcome GridworldEnv::step(const std::string& action) {
  if (!ready_) throw ValidationError("step before reset");
  return grid::step_state(state_, action);
}

// --- external process adapter ----------------------------------------------

ExternalProcessEnv::ExternalProcessEnv(const std::string& command,
                                       int reply_timeout_ms)
    : reply_timeout_ms_(reply_timeout_ms) {
  int to_child[2];
  int from_child[2];
  if (pipe(to_child) != 0 || pipe(from_child) != 0) {
    throw Error("cannot create pipes for the external environment");
  }
  const pid_t pid = fork();
  if (pid < 0) throw Error("cannot fork the external environment process");
  if (pid == 0) {
    dup2(to_child[0], STDIN_FILENO);
    dup2(from_child[1], STDOUT_FILENO);
    close(to_child[0]);
    close(to_child[1]);
    close(from_child[0]);
    close(from_child[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), (char*)nullptr);
    _exit(127);
  }
  close(to_child[0]);
  close(from_child[1]);
  child_pid_ = pid;
  to_child_ = to_child[1];
  from_child_ = from_child[0];
}

ExternalProcessEnv::~ExternalProcessEnv() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (child_pid_ > 0) {
    // Closing stdin usually ends the child; give it a moment before SIGTERM.
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (waitpid(child_pid_, &status, WNOHANG) != 0) return;
      usleep(2000);
    }
    kill(child_pid_, SIGTERM);
    waitpid(child_pid_, &status, 0);
  }
}

void ExternalProcessEnv::send_line(const std::string& line) {
  std::string payload = line;
  payload.push_back('\n');
  size_t written = 0;
  while (written < payload.size()) {
    const ssize_t n =
        write(to_child_, payload.data() + written, payload.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError("external environment closed its input");
    }
    written += static_cast<size_t>(n);
  }
}

std::string ExternalProcessEnv::read_line() {
  while (true) {
    const size_t nl = read_buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = read_buffer_.substr(0, nl);
      read_buffer_.erase(0, nl + 1);
      return line;
    }
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = poll(&pfd, 1, reply_timeout_ms_);
    if (ready == 0) throw ProtocolError("external environment reply timed out");
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError("external environment pipe failed");
    }
    char buf[4096];
    const ssize_t n = read(from_child_, buf, sizeof(buf));
    if (n <= 0) throw ProtocolError("external environment closed its output");
    read_buffer_.append(buf, static_cast<size_t>(n));
  }
}

json ExternalProcessEnv::exchange(const json& message) {
  send_line(message.dump());
  const std::string line = read_line();
  json reply;
  try {
    reply = json::parse(line);
  } catch (const json::exception&) {
    throw ProtocolError("external environment sent malformed JSON: " + line);
  }
  if (reply.value("type", "") != "obs") {
    throw ProtocolError("external environment sent an unexpected message type");
  }
  return reply;
}

ResetOutcome ExternalProcessEnv::reset(std::uint64_t seed,
                                       const std::string& task_kind) {
  const json reply =
      exchange(json{{"type", "reset"}, {"seed", seed}, {"task", task_kind}});
  if (!reply.contains("goal") || reply.at("goal").is_null()) {
    throw ProtocolError("external environment reset reply carries no goal");
  }
  try {
    return {Goal{reply.at("goal").get<std::string>()},
            reply.at("text").get<std::string>()};
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("bad reset reply: ") + e.what());
  }
}

grid::EnvStepOutcome ExternalProcessEnv::step(const std::string& action) {
  const json reply = exchange(json{{"type", "step"}, {"action", action}});
  try {
    grid::EnvStepOutcome out;
    out.observation_text = reply.at("text").get<std::string>();
    out.reward = reply.at("reward").get<double>();
    out.done = reply.at("done").get<bool>();
    return out;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("bad step reply: ") + e.what());
  }
}

std::unique_ptr<Environment> make_environment(const std::string& descriptor) {
  if (descriptor == "gridworld") return std::make_unique<GridworldEnv>();
  const std::string prefix = "external:";
  if (descriptor.rfind(prefix, 0) == 0) {
    return std::make_unique<ExternalProcessEnv>(descriptor.substr(prefix.size()));
  }
  throw ConfigError("unknown environment: " + descriptor);
}

}  // namespace lac

// Serves the built-in gridworld over the external-environment protocol:
// one JSON message per line on stdin/stdout. Reference adapter for attaching
// the engine to out-of-process environments.

#include <iostream>
#include <string>

#include "lac/env.hpp"
#include "lac/types.hpp"

int main() {
  using lac::json;
  lac::GridworldEnv env;

  std::string line;
  while (std::getline(std::cin, line)) {
    if (lac::trim(line).empty()) continue;
    json message;
    try {
      message = json::parse(line);
    } catch (const json::exception&) {
      return 1;
    }
    try {
      const std::string type = message.value("type", "");
      if (type == "reset") {
        const lac::ResetOutcome out =
            env.reset(message.at("seed").get<std::uint64_t>(),
                      message.at("task").get<std::string>());
        std::cout << json{{"type", "obs"},
                          {"goal", out.goal.text},
                          {"text", out.observation},
                          {"reward", 0.0},
                          {"done", false}}
                         .dump()
                  << "\n"
                  << std::flush;
      } else if (type == "step") {
        const lac::grid::EnvStepOutcome out =
            env.step(message.at("action").get<std::string>());
        std::cout << json{{"type", "obs"},
                          {"text", out.observation_text},
                          {"reward", out.reward},
                          {"done", out.done}}
                         .dump()
                  << "\n"
                  << std::flush;
      } else {
        return 1;
      }
    } catch (const std::exception&) {
      return 1;
    }
  }
  return 0;
}

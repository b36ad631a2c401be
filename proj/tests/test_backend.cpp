#include <doctest.h>

#include <cmath>
#include <random>

#include "lac/scripted_backend.hpp"

using namespace lac;

TEST_CASE("scripted generation is a table lookup honoring stop strings") {
  ScriptedBackend backend;
  backend.add_generation_rule({"which way", ""}, "turn left");
  backend.add_generation_rule({"", "Observation: "}, "line one\nline two");

  GenerationRequest req;
  req.prompt = "which way should I go?";
  CHECK(backend.generate(req).text == "turn left");

  req.prompt = "...\nObservation: ";
  req.stop = {"\n"};
  const GenerationResult r = backend.generate(req);
  CHECK(r.text == "line one");
  CHECK(r.text.find('\n') == std::string::npos);

  // deterministic: same request, same result
  CHECK(backend.generate(req).text == backend.generate(req).text);
}

TEST_CASE("unmatched generation without a default is unsupported") {
  ScriptedBackend backend;
  GenerationRequest req;
  req.prompt = "anything";
  CHECK_THROWS_AS(backend.generate(req), UnsupportedCapabilityError);
  backend.set_default_generation("fallback");
  CHECK(backend.generate(req).text == "fallback");
}

TEST_CASE("score_continuation sums per-token logs") {
  ScriptedBackend backend;
  backend.set_default_word_prob(0.5);
  // two tokens at 0.5 each: ln(0.25)
  CHECK(backend.score_continuation("p", "go forward") ==
        doctest::Approx(std::log(0.25)).epsilon(1e-12));
  CHECK(backend.score_continuation("p", "go forward") ==
        doctest::Approx(-1.386294).epsilon(1e-6));

  ScriptedBackend certain;
  certain.set_default_word_prob(1.0);
  CHECK(certain.score_continuation("p", "pick up") == 0.0);
}

TEST_CASE("score_continuation satisfies the chain rule on concatenation") {
  ScriptedBackend backend;
  backend.set_word_prob("go", 0.5);
  backend.set_word_prob("forward", 0.25);
  backend.set_word_prob("now", 0.125);
  std::mt19937 rng(99);
  const std::string words[] = {"go", "forward", "now"};
  for (int trial = 0; trial < 50; ++trial) {
    std::string a;
    std::string b;
    for (int i = 0; i < 1 + static_cast<int>(rng() % 3); ++i) {
      a += (a.empty() ? "" : " ") + words[rng() % 3];
    }
    for (int i = 0; i < 1 + static_cast<int>(rng() % 3); ++i) {
      b += (b.empty() ? "" : " ") + words[rng() % 3];
    }
    const double whole = backend.score_continuation("p", a + " " + b);
    const double split = backend.score_continuation("p", a) +
                         backend.score_continuation("p" + a, " " + b);
    CHECK(whole == doctest::Approx(split).epsilon(1e-12));
  }
}

TEST_CASE("token probabilities come from the matched rule") {
  ScriptedBackend backend;
  backend.add_token_prob_rule({"judgment", ""}, {{"GOOD", 0.6}, {"BAD", 0.2}});

  TokenQuery q;
  q.prompt = "... judgment position: This step is ";
  q.candidate_tokens = {"GOOD", "BAD"};
  const auto probs = backend.next_token_probs(q);
  REQUIRE(probs.size() == 2);
  CHECK(probs[0].token == "GOOD");
  CHECK(probs[0].probability == doctest::Approx(0.6));
  CHECK(probs[1].probability == doctest::Approx(0.2));
}

TEST_CASE("candidates absent from the matched rule get the floor") {
  ScriptedBackend backend;
  backend.add_token_prob_rule({"", ""}, {{"GOOD", 0.6}});
  TokenQuery q;
  q.prompt = "whatever";
  q.candidate_tokens = {"GOOD", "BAD"};
  const auto probs = backend.next_token_probs(q);
  CHECK(probs[0].probability == doctest::Approx(0.6));
  CHECK(probs[1].probability == doctest::Approx(kEpsilonFloor));
}

TEST_CASE("token rules match case-folded variants") {
  ScriptedBackend backend;
  backend.add_token_prob_rule({"", ""}, {{" good", 0.3}});
  TokenQuery q;
  q.prompt = "x";
  q.candidate_tokens = {"GOOD"};
  CHECK(backend.next_token_probs(q)[0].probability == doctest::Approx(0.3));
}

TEST_CASE("no matching token rule is an unsupported capability") {
  ScriptedBackend backend;
  TokenQuery q;
  q.prompt = "x";
  q.candidate_tokens = {"GOOD"};
  CHECK_THROWS_AS(backend.next_token_probs(q), UnsupportedCapabilityError);
}

TEST_CASE("scripted rules load from JSON") {
  const json spec = json::parse(R"({
    "default_generation": "turn left",
    "word_probs": {"turn": 0.5, "left": 0.5},
    "token_prob_rules": [
      {"contains": "This step is ", "probs": {"GOOD": 0.7, "BAD": 0.1}}
    ],
    "top_token_rules": [
      {"suffix": "Action: ",
       "tokens": [{"token": "turn", "probability": 0.9}]}
    ]
  })");
  ScriptedBackend backend = ScriptedBackend::from_json(spec);
  GenerationRequest req;
  req.prompt = "x";
  CHECK(backend.generate(req).text == "turn left");
  CHECK(backend.score_continuation("p", "turn left") ==
        doctest::Approx(std::log(0.25)));
  CHECK(backend.top_next_tokens("...\nAction: ", 5).at(0).token == "turn");
}

#include <doctest.h>

#include <cmath>
#include <random>

#include "lac/error.hpp"
#include "lac/policy.hpp"

using namespace lac;

namespace {

std::vector<double> random_simplex_point(std::mt19937& rng, size_t n) {
  std::uniform_real_distribution<double> uniform(1e-12, 1.0);
  std::vector<double> p(n);
  double total = 0.0;
  for (double& v : p) {
    v = -std::log(uniform(rng));
    total += v;
  }
  for (double& v : p) v /= total;
  return p;
}

ImprovementInput random_input(std::mt19937& rng, double alpha) {
  std::uniform_int_distribution<size_t> size_dist(2, 5);
  std::uniform_real_distribution<double> q_dist(-3.0, 3.0);
  const size_t n = size_dist(rng);
  ImprovementInput input;
  const std::vector<double> prior = random_simplex_point(rng, n);
  for (size_t i = 0; i < n; ++i) {
    input.prior_logprobs.push_back(std::log(prior[i]));
    input.q_values.push_back(q_dist(rng));
  }
  input.alpha = AlphaSetting::finite(alpha);
  return input;
}

}  // namespace

TEST_CASE("zero q leaves the prior unchanged") {
  ImprovementInput input;
  input.prior_logprobs = {std::log(0.6), std::log(0.4)};
  input.q_values = {0.0, 0.0};
  input.alpha = AlphaSetting::finite(1.0);
  const ImprovedDistribution dist = improve(input);
  CHECK(dist.candidate_probs[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(dist.candidate_probs[1] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(dist.chosen_index == 0);
}

TEST_CASE("unit q against a flat prior reweights by e") {
  ImprovementInput input;
  input.prior_logprobs = {std::log(0.5), std::log(0.5)};
  input.q_values = {1.0, 0.0};
  input.alpha = AlphaSetting::finite(1.0);
  const ImprovedDistribution dist = improve(input);
  // Direct evaluation of the closed form: Z = 0.5 e + 0.5.
  const double z = 0.5 * std::exp(1.0) + 0.5;
  CHECK(dist.candidate_probs[0] ==
        doctest::Approx(0.5 * std::exp(1.0) / z).epsilon(1e-12));
  CHECK(dist.candidate_probs[1] == doctest::Approx(0.5 / z).epsilon(1e-12));
  CHECK(dist.candidate_probs[0] == doctest::Approx(0.731059).epsilon(1e-6));
  CHECK(dist.candidate_probs[1] == doctest::Approx(0.268941).epsilon(1e-6));
  CHECK(dist.log_partition == doctest::Approx(std::log(z)).epsilon(1e-12));
}

TEST_CASE("alpha zero recovers the prior policy") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    ImprovementInput input = random_input(rng, 0.0);
    const ImprovedDistribution dist = improve(input);
    size_t prior_argmax = 0;
    const double prior_log_z = log_sum_exp(input.prior_logprobs);
    for (size_t i = 0; i < input.prior_logprobs.size(); ++i) {
      CHECK(dist.candidate_probs[i] ==
            doctest::Approx(std::exp(input.prior_logprobs[i] - prior_log_z))
                .epsilon(1e-12));
      if (input.prior_logprobs[i] > input.prior_logprobs[prior_argmax]) {
        prior_argmax = i;
      }
    }
    CHECK(dist.chosen_index == static_cast<int>(prior_argmax));
  }
}

TEST_CASE("critic-only sentinel takes the argmax of q") {
  ImprovementInput input;
  input.prior_logprobs = {std::log(0.9), std::log(0.1)};
  input.q_values = {-1.0, 2.0};
  input.alpha = AlphaSetting::critic_only_sentinel();
  const ImprovedDistribution dist = improve(input);
  CHECK(dist.chosen_index == 1);
  CHECK(dist.candidate_probs[1] == 1.0);
  CHECK(dist.candidate_probs[0] == 0.0);

  // q tie: prior log-probability breaks it
  input.q_values = {2.0, 2.0};
  CHECK(improve(input).chosen_index == 0);
}

TEST_CASE("non-finite inputs are validation errors") {
  ImprovementInput input;
  input.prior_logprobs = {0.0, std::numeric_limits<double>::quiet_NaN()};
  input.q_values = {0.0, 0.0};
  input.alpha = AlphaSetting::finite(1.0);
  CHECK_THROWS_AS(improve(input), ValidationError);
  input.prior_logprobs = {0.0, 0.0};
  input.q_values = {std::numeric_limits<double>::infinity(), 0.0};
  CHECK_THROWS_AS(improve(input), ValidationError);
  input.q_values = {0.0};
  CHECK_THROWS_AS(improve(input), ValidationError);
}

TEST_CASE("huge alpha-q products stay finite in log space") {
  ImprovementInput input;
  input.prior_logprobs = {std::log(0.5), std::log(0.5)};
  input.q_values = {300.0, -300.0};
  input.alpha = AlphaSetting::finite(10.0);
  const ImprovedDistribution dist = improve(input);
  CHECK(std::isfinite(dist.log_partition));
  CHECK(dist.candidate_probs[0] == doctest::Approx(1.0));
  CHECK(dist.chosen_index == 0);
}

TEST_CASE("chosen index equals the argmax of prior + alpha*q") {
  std::mt19937 rng(22);
  const double alphas[] = {0.5, 1.0, 2.0, 5.0, 10.0};
  for (int trial = 0; trial < 200; ++trial) {
    const ImprovementInput input = random_input(rng, alphas[trial % 5]);
    const ImprovedDistribution dist = improve(input);
    size_t best = 0;
    for (size_t i = 0; i < input.q_values.size(); ++i) {
      const double w = input.prior_logprobs[i] +
                       input.alpha.value * input.q_values[i];
      const double wb = input.prior_logprobs[best] +
                        input.alpha.value * input.q_values[best];
      if (w > wb) best = i;
    }
    CHECK(dist.chosen_index == static_cast<int>(best));
  }
}

TEST_CASE("shifting all q values by a constant changes nothing") {
  std::mt19937 rng(33);
  std::uniform_real_distribution<double> shift_dist(-5.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    ImprovementInput input = random_input(rng, 1.7);
    const ImprovedDistribution base = improve(input);
    const double shift = shift_dist(rng);
    for (double& q : input.q_values) q += shift;
    const ImprovedDistribution shifted = improve(input);
    for (size_t i = 0; i < base.candidate_probs.size(); ++i) {
      CHECK(shifted.candidate_probs[i] ==
            doctest::Approx(base.candidate_probs[i]).epsilon(1e-12));
    }
    CHECK(shifted.chosen_index == base.chosen_index);
  }
}

TEST_CASE("objective at the prior is the prior-weighted mean q") {
  ImprovementInput input;
  input.prior_logprobs = {std::log(0.7), std::log(0.3)};
  input.q_values = {2.0, -1.0};
  input.alpha = AlphaSetting::finite(1.0);
  const double value = objective_value({0.7, 0.3}, input);
  CHECK(value == doctest::Approx(0.7 * 2.0 + 0.3 * -1.0).epsilon(1e-12));
}

TEST_CASE("the closed form maximizes the objective") {
  std::mt19937 rng(44);
  const double alphas[] = {0.5, 1.0, 2.0, 5.0, 10.0};
  for (int trial = 0; trial < 50; ++trial) {
    const ImprovementInput input = random_input(rng, alphas[trial % 5]);
    const ImprovedDistribution dist = improve(input);
    const double best = objective_value(dist.candidate_probs, input);
    const double prior_log_z = log_sum_exp(input.prior_logprobs);
    std::vector<double> prior;
    for (double lp : input.prior_logprobs) {
      prior.push_back(std::exp(lp - prior_log_z));
    }
    CHECK(best >= objective_value(prior, input) - 1e-9);
    for (int point = 0; point < 500; ++point) {
      const std::vector<double> p =
          random_simplex_point(rng, input.q_values.size());
      CHECK(best >= objective_value(p, input) - 1e-9);
    }
  }
}

TEST_CASE("alpha zero objective is minus infinity away from the prior") {
  ImprovementInput input;
  input.prior_logprobs = {std::log(0.5), std::log(0.5)};
  input.q_values = {1.0, 0.0};
  input.alpha = AlphaSetting::finite(0.0);
  CHECK(objective_value({0.5, 0.5}, input) == doctest::Approx(0.5));
  CHECK(objective_value({0.9, 0.1}, input) ==
        -std::numeric_limits<double>::infinity());
}

TEST_CASE("large alpha pushes the optimum toward one-hot on the best q") {
  ImprovementInput input;
  input.prior_logprobs = {std::log(0.5), std::log(0.5)};
  input.q_values = {1.0, 0.0};
  input.alpha = AlphaSetting::finite(200.0);
  const ImprovedDistribution dist = improve(input);
  CHECK(dist.candidate_probs[0] > 1.0 - 1e-12);
  CHECK(dist.chosen_index == 0);
}

TEST_CASE("probs must sum to one") {
  ImprovementInput input;
  input.prior_logprobs = {std::log(0.5), std::log(0.5)};
  input.q_values = {1.0, 0.0};
  input.alpha = AlphaSetting::finite(1.0);
  CHECK_THROWS_AS(objective_value({0.5, 0.6}, input), ValidationError);
}

TEST_CASE("alpha sweep interpolates from prior argmax to q argmax") {
  std::mt19937 rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    ImprovementInput input = random_input(rng, 0.0);
    // ensure distinct argmaxes are possible
    input.alpha = AlphaSetting::finite(0.0);
    const int prior_choice = improve(input).chosen_index;
    size_t q_choice = 0;
    for (size_t i = 0; i < input.q_values.size(); ++i) {
      if (input.q_values[i] > input.q_values[q_choice]) q_choice = i;
    }
    std::vector<double> previous;
    for (double alpha = 0.0; alpha <= 64.0;
         alpha = (alpha == 0.0 ? 0.0625 : alpha * 2.0)) {
      input.alpha = AlphaSetting::finite(alpha);
      const ImprovedDistribution dist = improve(input);
      if (alpha == 0.0) CHECK(dist.chosen_index == prior_choice);
      previous = dist.candidate_probs;
    }
    input.alpha = AlphaSetting::finite(1e6);
    CHECK(improve(input).chosen_index == static_cast<int>(q_choice));

    // continuity in alpha around 1
    input.alpha = AlphaSetting::finite(1.0);
    const std::vector<double> at_one = improve(input).candidate_probs;
    input.alpha = AlphaSetting::finite(1.0 + 1e-7);
    const std::vector<double> nearby = improve(input).candidate_probs;
    for (size_t i = 0; i < at_one.size(); ++i) {
      CHECK(std::abs(at_one[i] - nearby[i]) < 1e-5);
    }
  }
}

TEST_CASE("select_action returns the chosen candidate") {
  ImprovedDistribution dist;
  dist.candidate_probs = {0.2, 0.5, 0.3};
  dist.chosen_index = 1;
  CHECK(select_action(dist, {"a", "b", "c"}) == "b");

  ImprovedDistribution single;
  single.candidate_probs = {1.0};
  single.chosen_index = 0;
  CHECK(select_action(single, {"only"}) == "only");

  CHECK_THROWS_AS(select_action(dist, {"a", "b"}), ValidationError);
}

TEST_CASE("the saltshaker disagreement flips the prior's choice") {
  ImprovementInput input;
  input.prior_logprobs = {std::log(0.5), std::log(0.3)};
  input.q_values = {-1.0, 2.0};
  input.alpha = AlphaSetting::finite(1.0);
  const ImprovedDistribution dist = improve(input);
  const std::vector<std::string> candidates = {
      "go to drawer 1", "take saltshaker 1 from cabinet 2"};
  CHECK(select_action(dist, candidates) == "take saltshaker 1 from cabinet 2");

  input.alpha = AlphaSetting::finite(0.0);
  CHECK(select_action(improve(input), candidates) == "go to drawer 1");
}

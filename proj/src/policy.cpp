#include "lac/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lac/error.hpp"

namespace lac {

namespace {

void validate_input(const ImprovementInput& input) {
  if (input.prior_logprobs.empty() ||
      input.prior_logprobs.size() != input.q_values.size()) {
    throw ValidationError("improvement input vectors must be non-empty and of "
                          "equal length");
  }
  for (double v : input.prior_logprobs) {
    if (!std::isfinite(v)) {
      throw ValidationError("prior log-probabilities must be finite");
    }
  }
  for (double v : input.q_values) {
    if (!std::isfinite(v)) throw ValidationError("q-values must be finite");
  }
  if (!input.alpha.critic_only &&
      (!std::isfinite(input.alpha.value) || input.alpha.value < 0.0)) {
    throw ValidationError("alpha must be finite and nonnegative");
  }
}

}  // namespace

double log_sum_exp(const std::vector<double>& xs) {
  const double m = *std::max_element(xs.begin(), xs.end());
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - m);
  return m + std::log(acc);
}

ImprovedDistribution improve(const ImprovementInput& input) {
  validate_input(input);
  const size_t n = input.q_values.size();

  ImprovedDistribution dist;
  dist.alpha = input.alpha;

  if (input.alpha.critic_only) {
    size_t best = 0;
    for (size_t i = 1; i < n; ++i) {
      if (input.q_values[i] > input.q_values[best] ||
          (input.q_values[i] == input.q_values[best] &&
           input.prior_logprobs[i] > input.prior_logprobs[best])) {
        best = i;
      }
    }
    dist.candidate_probs.assign(n, 0.0);
    dist.candidate_probs[best] = 1.0;
    dist.log_partition = 0.0;
    dist.chosen_index = static_cast<int>(best);
    return dist;
  }

  std::vector<double> weights(n);
  for (size_t i = 0; i < n; ++i) {
    weights[i] = input.prior_logprobs[i] + input.alpha.value * input.q_values[i];
  }
  dist.log_partition = log_sum_exp(weights);
  dist.candidate_probs.resize(n);
  size_t best = 0;
  for (size_t i = 0; i < n; ++i) {
    dist.candidate_probs[i] = std::exp(weights[i] - dist.log_partition);
    if (weights[i] > weights[best]) best = i;
  }
  dist.chosen_index = static_cast<int>(best);
  return dist;
}

double objective_value(const std::vector<double>& probs,
                       const ImprovementInput& input) {
  validate_input(input);
  const size_t n = input.q_values.size();
  if (probs.size() != n) {
    throw ValidationError("probs length does not match the candidate set");
  }
  double total = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0) {
      throw ValidationError("probs must be finite and nonnegative");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ValidationError("probs must sum to 1 within 1e-9");
  }

  // Prior renormalized over the candidate support.
  const double prior_log_z = log_sum_exp(input.prior_logprobs);
  std::vector<double> prior(n);
  for (size_t i = 0; i < n; ++i) {
    prior[i] = std::exp(input.prior_logprobs[i] - prior_log_z);
  }

  double expected_q = 0.0;
  double kl = 0.0;
  for (size_t i = 0; i < n; ++i) {
    expected_q += probs[i] * input.q_values[i];
    if (probs[i] > 0.0) kl += probs[i] * (std::log(probs[i]) - std::log(prior[i]));
  }

  if (input.alpha.critic_only) return expected_q;  // the alpha -> inf limit
  if (input.alpha.value == 0.0) {
    for (size_t i = 0; i < n; ++i) {
      if (std::abs(probs[i] - prior[i]) > 1e-9) {
        return -std::numeric_limits<double>::infinity();
      }
    }
    return expected_q;
  }
  return expected_q - kl / input.alpha.value;
}

std::string select_action(const ImprovedDistribution& dist,
                          const std::vector<std::string>& candidates) {
  if (dist.chosen_index < 0 ||
      static_cast<size_t>(dist.chosen_index) >= candidates.size() ||
      dist.candidate_probs.size() != candidates.size()) {
    throw ValidationError("improved distribution does not match the candidate "
                          "list");
  }
  return candidates[static_cast<size_t>(dist.chosen_index)];
}

}  // namespace lac

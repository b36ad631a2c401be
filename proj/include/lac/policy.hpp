#pragma once

#include <string>
#include <vector>

#include "lac/types.hpp"

namespace lac {

// Inputs of one KL-constrained policy update over the sampled candidate set.
// The prior is given in log space and need not be normalized; the update
// renormalizes it over the candidate support.
struct ImprovementInput {
  std::vector<double> prior_logprobs;
  std::vector<double> q_values;
  AlphaSetting alpha;
};

// Closed-form solution of the KL-constrained improvement: candidate_probs_i
// proportional to exp(prior_logprob_i + alpha * q_i), computed in log space
// with max-subtraction. The critic-only sentinel yields a one-hot on the
// argmax-q candidate (prior log-probability, then lowest index, as
// tie-breaks). chosen_index is the argmax with lowest-index tie-break.
ImprovedDistribution improve(const ImprovementInput& input);

// Value of the improvement objective at an arbitrary distribution over the
// candidate support: sum_i probs_i * q_i - (1/alpha) * KL(probs || prior),
// with the prior renormalized over the support. alpha = 0 returns -infinity
// unless probs equals the renormalized prior. Used as the optimality oracle
// for the closed form.
double objective_value(const std::vector<double>& probs,
                       const ImprovementInput& input);

// candidates[dist.chosen_index].
std::string select_action(const ImprovedDistribution& dist,
                          const std::vector<std::string>& candidates);

// Stable log(sum(exp(xs))).
double log_sum_exp(const std::vector<double>& xs);

}  // namespace lac

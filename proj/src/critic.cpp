#include "lac/critic.hpp"

#include <algorithm>
#include <cmath>

#include "lac/error.hpp"

namespace lac {

namespace {

// Renders the predicted future steps after the candidate action, stopping at
// the judgment anchor of the final reflection.
std::string render_rollout_to_anchor(const std::string& action,
                                     const RolloutTrajectory& rollout,
                                     bool include_reflections) {
  std::string out;
  out += "\n";
  out += labels::kAction;
  out += action;
  if (rollout.steps.empty()) {
    out += "\n";
    out += labels::kCritic;
    out += kJudgmentAnchor;
    return out;
  }
  for (size_t i = 0; i < rollout.steps.size(); ++i) {
    const Step& step = rollout.steps[i];
    const bool last = i + 1 == rollout.steps.size();
    if (i > 0) {
      out += "\n";
      out += labels::kAction;
      out += step.action;
    }
    out += "\n";
    out += labels::kObservation;
    out += step.observation;
    if (last) {
      out += "\n";
      out += labels::kCritic;
      if (include_reflections && step.reflection) {
        const std::string& text = step.reflection->text;
        const size_t anchor = text.rfind(kJudgmentAnchor);
        if (anchor != std::string::npos) {
          out += text.substr(0, anchor + std::string(kJudgmentAnchor).size());
        } else {
          out += trim(text);
          out += " ";
          out += kJudgmentAnchor;
        }
      } else {
        out += kJudgmentAnchor;
      }
    } else if (include_reflections && step.reflection) {
      out += "\n";
      out += labels::kCritic;
      out += step.reflection->text;
    }
  }
  return out;
}

}  // namespace

MarkerProbs marker_probs(const std::string& context_prompt,
                         const MarkerPair& markers, Backend& backend) {
  if (!markers.valid()) {
    throw ValidationError("marker pair must be distinct after normalization");
  }
  TokenQuery query;
  query.prompt = context_prompt;
  query.candidate_tokens = {markers.positive, markers.negative};
  std::vector<TokenProb> probs;
  try {
    probs = backend.next_token_probs(query);
  } catch (const UnsupportedCapabilityError& e) {
    throw CriticUnavailableError(std::string("critic has no marker "
                                             "probabilities: ") + e.what());
  }
  if (probs.size() != 2) {
    throw CriticUnavailableError("backend returned a marker distribution of "
                                 "the wrong arity");
  }
  MarkerProbs raw;
  raw.positive = std::max(probs[0].probability, kEpsilonFloor);
  raw.negative = std::max(probs[1].probability, kEpsilonFloor);
  return raw;
}

OutcomeBelief outcome_belief(const std::string& context_prompt,
                             const MarkerPair& markers, Backend& backend) {
  const MarkerProbs raw = marker_probs(context_prompt, markers, backend);
  return OutcomeBelief::from_probabilities(raw.positive, raw.negative);
}

double q_value(const OutcomeBelief& belief) {
  return std::log(belief.p_success) - std::log(belief.p_failure);
}

std::string judgment_prompt(const History& history, const std::string& action,
                            const RolloutTrajectory& rollout,
                            const PromptTemplate& tmpl,
                            bool include_reflections) {
  return history_to_prompt(history, tmpl, include_reflections) +
         render_rollout_to_anchor(action, rollout, include_reflections);
}

std::pair<OutcomeBelief, double> q_with_rollout(const History& history,
                                                const std::string& action,
                                                const RolloutTrajectory& rollout,
                                                const MarkerPair& markers,
                                                const PromptTemplate& tmpl,
                                                Backend& backend,
                                                bool include_reflections) {
  const std::string prompt =
      judgment_prompt(history, action, rollout, tmpl, include_reflections);
  const OutcomeBelief belief = outcome_belief(prompt, markers, backend);
  return {belief, q_value(belief)};
}

double q_variant_logpw(const OutcomeBelief& belief) {
  return std::log(belief.p_success);
}

double q_variant_logpw_raw(const MarkerProbs& raw) {
  return std::log(std::max(raw.positive, kEpsilonFloor));
}

std::string direct_eval_prompt(const History& history, const std::string& action,
                               const RolloutTrajectory& rollout,
                               const PromptTemplate& tmpl,
                               bool include_reflections) {
  std::string out = history_to_prompt(history, tmpl, include_reflections);
  out += "\n";
  out += labels::kAction;
  out += action;
  for (const Step& step : rollout.steps) {
    if (&step != &rollout.steps.front()) {
      out += "\n";
      out += labels::kAction;
      out += step.action;
    }
    out += "\n";
    out += labels::kObservation;
    out += step.observation;
    if (include_reflections && step.reflection) {
      out += "\n";
      out += labels::kCritic;
      out += step.reflection->text;
    }
  }
  out += "\nEstimate the probability that the task will be completed "
         "successfully. Answer with a number between 0 and 1.\nProbability: ";
  return out;
}

double q_direct_eval(const std::string& context_prompt, Backend& backend) {
  GenerationRequest req;
  req.prompt = context_prompt;
  req.max_tokens = 8;
  req.stop = {"\n"};
  std::string text;
  try {
    text = backend.generate(req).text;
  } catch (const Error&) {
    text.clear();  // fall through to the non-informative default
  }

  // First decimal number in the reply; values outside [0, 1] are treated as
  // unparseable.
  double p = 0.5;
  const size_t start = text.find_first_of("0123456789.");
  if (start != std::string::npos) {
    try {
      size_t used = 0;
      const double parsed = std::stod(text.substr(start), &used);
      if (used > 0 && parsed >= 0.0 && parsed <= 1.0) p = parsed;
    } catch (const std::exception&) {
      // keep fallback
    }
  }
  p = std::clamp(p, kEpsilonFloor, 1.0 - kEpsilonFloor);
  return std::log(p) - std::log1p(-p);
}

}  // namespace lac

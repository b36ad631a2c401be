#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lac/error.hpp"
#include "lac/types.hpp"

namespace lac {

// Zero variance or mismatched/short series.
class UndefinedCorrelationError : public Error {
 public:
  using Error::Error;
};

// Sample Pearson correlation coefficient of two equal-length series.
double pearson(const std::vector<double>& xs, const std::vector<double>& ys);

// One parsed trace line: an EpisodeResult plus the batch metadata keys.
struct TraceEpisode {
  EpisodeResult result;
  std::string config;
  std::string task;
  std::uint64_t seed = 0;
};

struct TraceFile {
  std::vector<TraceEpisode> episodes;
  int skipped_lines = 0;  // malformed lines, counted and skipped
};

TraceFile read_trace_file(const std::string& path);

// --- Q-versus-timestep correlations ------------------------------------------

struct SeriesStats {
  double mean = 0.0;
  double stddev = 0.0;
  int count = 0;
};

struct CorrelationGroup {
  SeriesStats log_p_success;  // of the chosen candidate, per trajectory
  SeriesStats log_p_failure;
  SeriesStats q_value;
};

struct CorrelationReport {
  CorrelationGroup successes;
  CorrelationGroup failures;
  int excluded_trajectories = 0;  // < 2 steps or zero variance
};

CorrelationReport correlation_report(const std::vector<TraceEpisode>& episodes);

// --- top-1/top-2 confidence gaps ---------------------------------------------

enum class ConfidenceCase { BothAgree, PriorOnly, QOnly, Neither };

std::string to_string(ConfidenceCase c);

struct ConfidenceRow {
  ConfidenceCase which = ConfidenceCase::BothAgree;
  int decisions = 0;
  double proportion = 0.0;
  double mean_prior_gap = 0.0;     // log P(a1) - log P(a2)
  double mean_q_gap = 0.0;         // Q(a1) - Q(a2)
  double mean_improved_gap = 0.0;  // p(a1) - p(a2) under the improved policy
};

struct ConfidenceReport {
  std::vector<ConfidenceRow> rows;  // the four cases, fixed order
  int decisions = 0;
  int excluded_records = 0;  // records with < 2 candidates
};

ConfidenceReport confidence_report(const std::vector<TraceEpisode>& episodes);

// --- step/token costs --------------------------------------------------------

struct CostGroup {
  int episodes = 0;
  double mean_steps = 0.0;
  double mean_tokens = 0.0;
};

struct CostConfigReport {
  std::string config;
  CostGroup all;
  CostGroup successes;
  CostGroup failures;
};

std::vector<CostConfigReport> cost_report(const std::vector<TraceEpisode>& episodes);

// --- report emission ---------------------------------------------------------

json report_to_json(const CorrelationReport& corr, const ConfidenceReport& conf,
                    const std::vector<CostConfigReport>& cost,
                    int skipped_lines);

struct ModeSuccess {
  std::string label;
  double success_rate = 0.0;
};

// Self-contained deterministic SVG bar charts plus the underlying CSV tables.
// Writes success_rate.svg, correlation.svg, correlation.csv, confidence.csv,
// cost.csv under out_dir. Throws Error when the directory is unwritable.
void emit_plots(const std::vector<ModeSuccess>& success_rates,
                const CorrelationReport& corr, const ConfidenceReport& conf,
                const std::vector<CostConfigReport>& cost,
                const std::string& out_dir);

}  // namespace lac

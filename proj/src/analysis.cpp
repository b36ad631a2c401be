#include "lac/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

namespace lac {

namespace {

std::string fmt(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

SeriesStats stats_of(const std::vector<double>& values) {
  SeriesStats s;
  s.count = static_cast<int>(values.size());
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / s.count;
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.stddev = s.count > 1 ? std::sqrt(sq / (s.count - 1)) : 0.0;
  return s;
}

// Top-two indices of a vector under "greater" ordering, ties by lower index.
std::pair<size_t, size_t> top_two(const std::vector<double>& v) {
  size_t first = 0;
  for (size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[first]) first = i;
  }
  size_t second = first == 0 ? 1 : 0;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i == first) continue;
    if (v[i] > v[second]) second = i;
  }
  return {first, second};
}

}  // namespace

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw UndefinedCorrelationError(
        "pearson needs two equal-length series of at least 2 points");
  }
  const size_t n = xs.size();
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mean_x += xs[i];
    mean_y += ys[i];
  }
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);

  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mean_x;
    const double dy = ys[i] - mean_y;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw UndefinedCorrelationError("pearson is undefined for a zero-variance "
                                    "series");
  }
  return sxy / std::sqrt(sxx * syy);
}

TraceFile read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trace file: " + path);
  TraceFile out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      // Bare DecisionRecord lines are legal trace content but carry no
      // episode; only episode lines feed the reports.
      if (!j.contains("history")) continue;
      TraceEpisode ep;
      ep.result = j.get<EpisodeResult>();
      ep.config = j.value("config", "");
      ep.task = j.value("task", "");
      ep.seed = j.value("seed", 0ull);
      out.episodes.push_back(std::move(ep));
    } catch (const std::exception&) {
      ++out.skipped_lines;
    }
  }
  return out;
}

CorrelationReport correlation_report(const std::vector<TraceEpisode>& episodes) {
  CorrelationReport report;
  std::vector<double> r_logpw[2];
  std::vector<double> r_logpl[2];
  std::vector<double> r_q[2];

  for (const TraceEpisode& ep : episodes) {
    const std::vector<DecisionRecord>& records = ep.result.records;
    if (records.size() < 2) {
      ++report.excluded_trajectories;
      continue;
    }
    std::vector<double> ts;
    std::vector<double> logpw;
    std::vector<double> logpl;
    std::vector<double> q;
    bool usable = true;
    for (const DecisionRecord& rec : records) {
      if (rec.candidates.empty() || rec.improved.chosen_index < 0 ||
          static_cast<size_t>(rec.improved.chosen_index) >=
              rec.candidates.size()) {
        usable = false;
        break;
      }
      const CandidateEvaluation& chosen =
          rec.candidates[static_cast<size_t>(rec.improved.chosen_index)];
      ts.push_back(static_cast<double>(rec.step_index));
      logpw.push_back(std::log(chosen.belief.p_success));
      logpl.push_back(std::log(chosen.belief.p_failure));
      q.push_back(chosen.q_value);
    }
    if (!usable) {
      ++report.excluded_trajectories;
      continue;
    }
    const int group = ep.result.success ? 0 : 1;
    try {
      const double rw = pearson(ts, logpw);
      const double rl = pearson(ts, logpl);
      const double rq = pearson(ts, q);
      r_logpw[group].push_back(rw);
      r_logpl[group].push_back(rl);
      r_q[group].push_back(rq);
    } catch (const UndefinedCorrelationError&) {
      ++report.excluded_trajectories;
    }
  }

  report.successes = {stats_of(r_logpw[0]), stats_of(r_logpl[0]),
                      stats_of(r_q[0])};
  report.failures = {stats_of(r_logpw[1]), stats_of(r_logpl[1]),
                     stats_of(r_q[1])};
  return report;
}

std::string to_string(ConfidenceCase c) {
  switch (c) {
    case ConfidenceCase::BothAgree: return "BOTH_AGREE";
    case ConfidenceCase::PriorOnly: return "PRIOR_ONLY";
    case ConfidenceCase::QOnly: return "Q_ONLY";
    case ConfidenceCase::Neither: return "NEITHER";
  }
  return "BOTH_AGREE";
}

ConfidenceReport confidence_report(const std::vector<TraceEpisode>& episodes) {
  ConfidenceReport report;
  struct Accum {
    int n = 0;
    double prior = 0.0;
    double q = 0.0;
    double improved = 0.0;
  };
  Accum accum[4];

  for (const TraceEpisode& ep : episodes) {
    for (const DecisionRecord& rec : ep.result.records) {
      if (rec.candidates.size() < 2 ||
          rec.improved.candidate_probs.size() != rec.candidates.size()) {
        ++report.excluded_records;
        continue;
      }
      std::vector<double> priors;
      std::vector<double> qs;
      for (const CandidateEvaluation& c : rec.candidates) {
        priors.push_back(c.prior_logprob);
        qs.push_back(c.q_value);
      }
      const auto [p1, p2] = top_two(priors);
      const auto [q1, q2] = top_two(qs);
      const auto [i1, i2] = top_two(rec.improved.candidate_probs);

      const size_t chosen = static_cast<size_t>(rec.improved.chosen_index);
      const bool prior_agrees = p1 == chosen;
      const bool q_agrees = q1 == chosen;
      ConfidenceCase which = ConfidenceCase::Neither;
      if (prior_agrees && q_agrees) which = ConfidenceCase::BothAgree;
      else if (prior_agrees) which = ConfidenceCase::PriorOnly;
      else if (q_agrees) which = ConfidenceCase::QOnly;

      Accum& a = accum[static_cast<int>(which)];
      a.n += 1;
      a.prior += priors[p1] - priors[p2];
      a.q += qs[q1] - qs[q2];
      a.improved +=
          rec.improved.candidate_probs[i1] - rec.improved.candidate_probs[i2];
      ++report.decisions;
    }
  }

  for (int i = 0; i < 4; ++i) {
    ConfidenceRow row;
    row.which = static_cast<ConfidenceCase>(i);
    row.decisions = accum[i].n;
    if (report.decisions > 0) {
      row.proportion = static_cast<double>(accum[i].n) / report.decisions;
    }
    if (accum[i].n > 0) {
      row.mean_prior_gap = accum[i].prior / accum[i].n;
      row.mean_q_gap = accum[i].q / accum[i].n;
      row.mean_improved_gap = accum[i].improved / accum[i].n;
    }
    report.rows.push_back(row);
  }
  return report;
}

std::vector<CostConfigReport> cost_report(const std::vector<TraceEpisode>& episodes) {
  std::map<std::string, std::vector<const TraceEpisode*>> by_config;
  for (const TraceEpisode& ep : episodes) {
    by_config[ep.config].push_back(&ep);
  }
  std::vector<CostConfigReport> out;
  for (const auto& [config, eps] : by_config) {
    CostConfigReport row;
    row.config = config;
    auto fill = [](CostGroup& g, const std::vector<const TraceEpisode*>& xs) {
      g.episodes = static_cast<int>(xs.size());
      if (xs.empty()) return;
      double steps = 0.0;
      double tokens = 0.0;
      for (const TraceEpisode* ep : xs) {
        steps += ep->result.steps_used;
        tokens += static_cast<double>(ep->result.tokens_used);
      }
      g.mean_steps = steps / g.episodes;
      g.mean_tokens = tokens / g.episodes;
    };
    std::vector<const TraceEpisode*> wins;
    std::vector<const TraceEpisode*> losses;
    for (const TraceEpisode* ep : eps) {
      (ep->result.success ? wins : losses).push_back(ep);
    }
    fill(row.all, eps);
    fill(row.successes, wins);
    fill(row.failures, losses);
    out.push_back(std::move(row));
  }
  return out;
}

namespace {

json stats_json(const SeriesStats& s) {
  return json{{"mean", s.mean}, {"stddev", s.stddev}, {"count", s.count}};
}

json group_json(const CorrelationGroup& g) {
  return json{{"log_p_success", stats_json(g.log_p_success)},
              {"log_p_failure", stats_json(g.log_p_failure)},
              {"q_value", stats_json(g.q_value)}};
}

}  // namespace

json report_to_json(const CorrelationReport& corr, const ConfidenceReport& conf,
                    const std::vector<CostConfigReport>& cost,
                    int skipped_lines) {
  json confidence_rows = json::array();
  for (const ConfidenceRow& row : conf.rows) {
    confidence_rows.push_back(json{{"case", to_string(row.which)},
                                   {"decisions", row.decisions},
                                   {"proportion", row.proportion},
                                   {"mean_prior_gap", row.mean_prior_gap},
                                   {"mean_q_gap", row.mean_q_gap},
                                   {"mean_improved_gap", row.mean_improved_gap}});
  }
  json cost_rows = json::array();
  for (const CostConfigReport& row : cost) {
    auto group = [](const CostGroup& g) {
      return json{{"episodes", g.episodes},
                  {"mean_steps", g.mean_steps},
                  {"mean_tokens", g.mean_tokens}};
    };
    cost_rows.push_back(json{{"config", row.config},
                             {"all", group(row.all)},
                             {"successes", group(row.successes)},
                             {"failures", group(row.failures)}});
  }
  return json{{"correlation",
               json{{"successes", group_json(corr.successes)},
                    {"failures", group_json(corr.failures)},
                    {"excluded_trajectories", corr.excluded_trajectories}}},
              {"confidence", json{{"rows", confidence_rows},
                                  {"decisions", conf.decisions},
                                  {"excluded_records", conf.excluded_records}}},
              {"cost", cost_rows},
              {"skipped_lines", skipped_lines}};
}

// --- SVG ----------------------------------------------------------------------

namespace {

constexpr int kChartWidth = 640;
constexpr int kChartHeight = 360;
constexpr int kMarginLeft = 60;
constexpr int kMarginBottom = 50;
constexpr int kMarginTop = 30;

std::string svg_header(const std::string& title) {
  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(kChartWidth) + "\" height=\"" +
         std::to_string(kChartHeight) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + std::to_string(kChartWidth / 2) +
         "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\">" + title + "</text>\n";
  return out;
}

struct Bar {
  std::string label;
  double value;
  double error = 0.0;  // half-length of the error bar
};

std::string bar_chart(const std::string& title, const std::vector<Bar>& bars,
                      double y_min, double y_max) {
  std::string out = svg_header(title);
  const double plot_w = kChartWidth - kMarginLeft - 20;
  const double plot_h = kChartHeight - kMarginTop - kMarginBottom;
  auto y_of = [&](double v) {
    const double t = (v - y_min) / (y_max - y_min);
    return kMarginTop + plot_h * (1.0 - t);
  };
  // Axes and the zero line when visible.
  out += "<line x1=\"" + std::to_string(kMarginLeft) + "\" y1=\"" +
         fmt(y_of(y_min), 2) + "\" x2=\"" + std::to_string(kMarginLeft) +
         "\" y2=\"" + fmt(y_of(y_max), 2) + "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = y_min + (y_max - y_min) * i / 4.0;
    out += "<text x=\"" + std::to_string(kMarginLeft - 8) + "\" y=\"" +
           fmt(y_of(v) + 4, 2) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">" + fmt(v, 2) + "</text>\n";
  }
  if (y_min < 0.0 && y_max > 0.0) {
    out += "<line x1=\"" + std::to_string(kMarginLeft) + "\" y1=\"" +
           fmt(y_of(0.0), 2) + "\" x2=\"" +
           std::to_string(kChartWidth - 20) + "\" y2=\"" + fmt(y_of(0.0), 2) +
           "\" stroke=\"grey\" stroke-dasharray=\"4\"/>\n";
  }

  const double slot = bars.empty() ? plot_w : plot_w / bars.size();
  const double bar_w = slot * 0.6;
  for (size_t i = 0; i < bars.size(); ++i) {
    const double x = kMarginLeft + slot * i + (slot - bar_w) / 2.0;
    const double y0 = y_of(std::max(0.0, y_min));
    const double yv = y_of(bars[i].value);
    const double top = std::min(y0, yv);
    const double h = std::abs(y0 - yv);
    out += "<rect x=\"" + fmt(x, 2) + "\" y=\"" + fmt(top, 2) + "\" width=\"" +
           fmt(bar_w, 2) + "\" height=\"" + fmt(h, 2) +
           "\" fill=\"#4c78a8\"/>\n";
    if (bars[i].error > 0.0) {
      const double cx = x + bar_w / 2.0;
      const double y_lo = y_of(bars[i].value - bars[i].error);
      const double y_hi = y_of(bars[i].value + bars[i].error);
      out += "<line x1=\"" + fmt(cx, 2) + "\" y1=\"" + fmt(y_lo, 2) +
             "\" x2=\"" + fmt(cx, 2) + "\" y2=\"" + fmt(y_hi, 2) +
             "\" stroke=\"black\"/>\n";
      out += "<line x1=\"" + fmt(cx - 5, 2) + "\" y1=\"" + fmt(y_lo, 2) +
             "\" x2=\"" + fmt(cx + 5, 2) + "\" y2=\"" + fmt(y_lo, 2) +
             "\" stroke=\"black\"/>\n";
      out += "<line x1=\"" + fmt(cx - 5, 2) + "\" y1=\"" + fmt(y_hi, 2) +
             "\" x2=\"" + fmt(cx + 5, 2) + "\" y2=\"" + fmt(y_hi, 2) +
             "\" stroke=\"black\"/>\n";
    }
    out += "<text x=\"" + fmt(x + bar_w / 2.0, 2) + "\" y=\"" +
           std::to_string(kChartHeight - kMarginBottom + 18) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">" + bars[i].label + "</text>\n";
    out += "<text x=\"" + fmt(x + bar_w / 2.0, 2) + "\" y=\"" +
           fmt(top - 4, 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"10\">" + fmt(bars[i].value, 3) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

}  // namespace

void emit_plots(const std::vector<ModeSuccess>& success_rates,
                const CorrelationReport& corr, const ConfidenceReport& conf,
                const std::vector<CostConfigReport>& cost,
                const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  const fs::path dir(out_dir);
  if (!fs::is_directory(dir)) {
    throw Error("cannot create output directory: " + out_dir);
  }

  std::vector<Bar> success_bars;
  for (const ModeSuccess& m : success_rates) {
    success_bars.push_back({m.label, m.success_rate, 0.0});
  }
  write_file(dir / "success_rate.svg",
             bar_chart("Success rate per mode", success_bars, 0.0, 1.0));

  const std::vector<Bar> corr_bars = {
      {"success", corr.successes.q_value.mean, corr.successes.q_value.stddev},
      {"failure", corr.failures.q_value.mean, corr.failures.q_value.stddev},
  };
  write_file(dir / "correlation.svg",
             bar_chart("Chosen-action Q vs timestep (Pearson r)", corr_bars,
                       -1.0, 1.0));

  {
    std::string csv = "group,series,mean,stddev,count\n";
    auto rows = [&](const std::string& name, const CorrelationGroup& g) {
      csv += name + ",log_p_success," + fmt(g.log_p_success.mean) + "," +
             fmt(g.log_p_success.stddev) + "," +
             std::to_string(g.log_p_success.count) + "\n";
      csv += name + ",log_p_failure," + fmt(g.log_p_failure.mean) + "," +
             fmt(g.log_p_failure.stddev) + "," +
             std::to_string(g.log_p_failure.count) + "\n";
      csv += name + ",q_value," + fmt(g.q_value.mean) + "," +
             fmt(g.q_value.stddev) + "," + std::to_string(g.q_value.count) +
             "\n";
    };
    rows("success", corr.successes);
    rows("failure", corr.failures);
    write_file(dir / "correlation.csv", csv);
  }
  {
    std::string csv =
        "case,decisions,proportion,mean_prior_gap,mean_q_gap,"
        "mean_improved_gap\n";
    for (const ConfidenceRow& row : conf.rows) {
      csv += to_string(row.which) + "," + std::to_string(row.decisions) + "," +
             fmt(row.proportion) + "," + fmt(row.mean_prior_gap) + "," +
             fmt(row.mean_q_gap) + "," + fmt(row.mean_improved_gap) + "\n";
    }
    write_file(dir / "confidence.csv", csv);
  }
  {
    std::string csv = "config,group,episodes,mean_steps,mean_tokens\n";
    for (const CostConfigReport& row : cost) {
      auto line = [&](const std::string& group, const CostGroup& g) {
        csv += row.config + "," + group + "," + std::to_string(g.episodes) +
               "," + fmt(g.mean_steps) + "," + fmt(g.mean_tokens) + "\n";
      };
      line("all", row.all);
      line("success", row.successes);
      line("failure", row.failures);
    }
    write_file(dir / "cost.csv", csv);
  }
}

}  // namespace lac

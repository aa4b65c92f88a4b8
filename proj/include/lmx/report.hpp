#pragma once

// Aggregation and reporting: condenses request records into per-cell
// statistics, compares them against the closed-form bounds, and renders a
// human-readable summary plus a machine summary.

#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lmx/runner.hpp"
#include "lmx/stats.hpp"

namespace lmx {

struct CellStats {
  RunConfig config;  // representative config of the cell (seed varies)
  std::int64_t runs = 0;
  std::int64_t requests = 0;
  std::int64_t completed = 0;
  std::int64_t incomplete = 0;
  std::int64_t violations = 0;
  std::int64_t defects = 0;

  MeanCI open_rounds;        // per completed request
  MeanCI total_rounds;
  MeanCI trials_to_win;      // per completed request
  MeanCI open_trial_span;    // open rounds per completed open trial
  MeanCI trial_k_bound;      // 2k(10*delta+20) at the per-trial measured k
  MeanCI win_frequency;      // wins / completed open trials (Wilson)
  std::int64_t open_trials = 0;
  std::int64_t won_open_trials = 0;
  double max_open_rounds = 0;

  double win_probability_floor = 0;   // (1-1/K)^{2d^2} / (2d^2)
  double expected_trials_ceiling = 0; // inverse of the floor
  double request_rounds_ceiling = 0;  // (2d+4)(7+20e^{4/c} n d^2)
};

inline CellStats aggregate(const std::vector<RunResult>& runs) {
  require(!runs.empty(), "aggregate of zero runs");
  CellStats cell;
  cell.config = runs[0].config;
  cell.runs = static_cast<std::int64_t>(runs.size());
  std::vector<double> open_rounds, total_rounds, trials_to_win, spans, k_bounds;
  for (const RunResult& r : runs) {
    cell.violations += r.violation_count;
    cell.defects += r.defect_count;
    cell.incomplete += r.incomplete_requests;
    for (const LockRequestRecord& rec : r.requests) {
      ++cell.requests;
      if (rec.done_stage < 0) continue;
      ++cell.completed;
      open_rounds.push_back(static_cast<double>(rec.open_rounds));
      total_rounds.push_back(static_cast<double>(rec.total_rounds));
      trials_to_win.push_back(static_cast<double>(rec.trials.size()));
      cell.max_open_rounds = std::max(cell.max_open_rounds,
                                      static_cast<double>(rec.open_rounds));
      for (const TrialRecord& t : rec.trials) {
        if (t.outcome == TrialRecord::Outcome::Pending ||
            t.outcome == TrialRecord::Outcome::Aborted || !t.open)
          continue;
        ++cell.open_trials;
        if (t.outcome == TrialRecord::Outcome::Won) ++cell.won_open_trials;
        spans.push_back(static_cast<double>(t.open_round_span));
        int k = t.dag_k >= 1 ? t.dag_k : runs[0].config.nodes;
        k_bounds.push_back(trial_rounds_bound(runs[0].config.delta, k));
      }
    }
  }
  cell.open_rounds = mean_ci(open_rounds);
  cell.total_rounds = mean_ci(total_rounds);
  cell.trials_to_win = mean_ci(trials_to_win);
  cell.open_trial_span = mean_ci(spans);
  cell.trial_k_bound = mean_ci(k_bounds);
  cell.win_frequency = frequency_ci(cell.won_open_trials, cell.open_trials);
  const int k_range = cell.config.k_range();
  cell.win_probability_floor = win_probability_bound(cell.config.delta, k_range);
  cell.expected_trials_ceiling = expected_trials_bound(cell.config.delta, k_range);
  cell.request_rounds_ceiling =
      request_rounds_bound(cell.config.nodes, cell.config.delta, cell.config.c);
  return cell;
}

inline nlohmann::json cell_to_json(const CellStats& c) {
  nlohmann::json j;
  j["nodes"] = c.config.nodes;
  j["delta"] = c.config.delta;
  j["c"] = c.config.c;
  j["adversary_rate"] = c.config.adversary.rate;
  j["runs"] = c.runs;
  j["requests"] = c.requests;
  j["completed"] = c.completed;
  j["incomplete"] = c.incomplete;
  j["violations"] = c.violations;
  j["defects"] = c.defects;
  j["mean_open_rounds"] = c.open_rounds.mean;
  j["max_open_rounds"] = c.max_open_rounds;
  j["mean_trials"] = c.trials_to_win.mean;
  j["trials_ci_hi"] = c.trials_to_win.hi;
  j["expected_trials_ceiling"] = c.expected_trials_ceiling;
  j["win_frequency"] = c.win_frequency.mean;
  j["win_frequency_ci_lo"] = c.win_frequency.lo;
  j["win_probability_floor"] = c.win_probability_floor;
  j["open_trials"] = c.open_trials;
  j["mean_open_trial_span"] = c.open_trial_span.mean;
  j["mean_trial_span_bound"] = c.trial_k_bound.mean;
  j["request_rounds_ceiling"] = c.request_rounds_ceiling;
  return j;
}

inline std::string cell_csv_header() {
  return "nodes,delta,c,adversary_rate,runs,requests,completed,incomplete,violations,"
         "defects,mean_open_rounds,open_rounds_ci_lo,open_rounds_ci_hi,max_open_rounds,"
         "mean_trials,trials_ci_hi,expected_trials_ceiling,win_frequency,win_freq_ci_lo,"
         "win_probability_floor,open_trials,mean_open_trial_span,mean_trial_span_bound,"
         "request_rounds_ceiling";
}

inline std::string cell_csv_row(const CellStats& c) {
  std::ostringstream os;
  os << c.config.nodes << ',' << c.config.delta << ',' << c.config.c << ','
     << c.config.adversary.rate << ',' << c.runs << ',' << c.requests << ',' << c.completed
     << ',' << c.incomplete << ',' << c.violations << ',' << c.defects << ','
     << c.open_rounds.mean << ',' << c.open_rounds.lo << ',' << c.open_rounds.hi << ','
     << c.max_open_rounds << ',' << c.trials_to_win.mean << ',' << c.trials_to_win.hi << ','
     << c.expected_trials_ceiling << ',' << c.win_frequency.mean << ',' << c.win_frequency.lo
     << ',' << c.win_probability_floor << ',' << c.open_trials << ','
     << c.open_trial_span.mean << ',' << c.trial_k_bound.mean << ','
     << c.request_rounds_ceiling;
  return os.str();
}

inline std::string render_report(const std::vector<CellStats>& cells) {
  std::ostringstream os;
  os << "cell                    requests  mean-open-rounds (bound)      mean-trials (bound)"
        "   win-freq (floor)    trial-span (bound)\n";
  for (const CellStats& c : cells) {
    std::ostringstream name;
    name << "n=" << c.config.nodes << " d=" << c.config.delta << " q="
         << c.config.adversary.rate;
    char line[256];
    std::snprintf(line, sizeof line,
                  "%-22s %9lld   %9.2f (%10.1f)   %8.2f (%8.2f)   %6.3f (%6.4f)   %8.2f (%8.1f)\n",
                  name.str().c_str(), static_cast<long long>(c.completed),
                  c.open_rounds.mean, c.request_rounds_ceiling, c.trials_to_win.mean,
                  c.expected_trials_ceiling, c.win_frequency.mean, c.win_probability_floor,
                  c.open_trial_span.mean, c.trial_k_bound.mean);
    os << line;
    if (c.violations || c.defects)
      os << "  ** " << c.violations << " violations, " << c.defects << " defects **\n";
    if (c.incomplete) os << "  ** " << c.incomplete << " requests did not complete **\n";
  }
  return os.str();
}

}  // namespace lmx

// Command-line front end: single runs, parameter sweeps, bounded exhaustive
// exploration, and trace replay. Exit codes: 0 clean, 1 configuration
// error, 2 invariant violation or simulator fault, 3 exploration budget
// exceeded.

#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "lmx/explore.hpp"
#include "lmx/report.hpp"
#include "lmx/runner.hpp"

namespace {

using namespace lmx;

struct CliOptions {
  std::string config_file;
  std::optional<int> nodes, delta, b_act, b_msg;
  std::optional<double> c, activation_p, interarrival, density;
  std::optional<std::int64_t> stages, hold, cutoff;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> adversary, activation, selection, topology;
  std::string out;
  std::string sweep_axis;
  int reps = 1;
  bool explore = false;
  int explore_depth = 12;
  std::int64_t explore_budget = 4000000;
  std::string from_trace;
};

RunConfig assemble_config(const CliOptions& o) {
  RunConfig cfg;
  if (!o.config_file.empty()) {
    std::ifstream in(o.config_file);
    require(in.good(), "cannot open config file: " + o.config_file);
    nlohmann::json j;
    in >> j;
    cfg = config_from_json(j);
  }
  if (o.nodes) cfg.nodes = *o.nodes;
  if (o.delta) cfg.delta = *o.delta;
  if (o.c) cfg.c = *o.c;
  if (o.stages) cfg.stages = *o.stages;
  if (o.seed) cfg.seed = *o.seed;
  if (o.adversary) {
    std::string a = *o.adversary;
    auto colon = a.find(':');
    double rate = colon == std::string::npos ? 0.0 : std::stod(a.substr(colon + 1));
    std::string kind = a.substr(0, colon);
    if (kind == "static")
      cfg.adversary = adversary_static();
    else if (kind == "churn")
      cfg.adversary = adversary_churn(rate);
    else if (kind == "targeted")
      cfg.adversary = adversary_targeted(rate);
    else
      fault("unknown adversary: " + a + " (want static, churn:q, targeted:q)");
  }
  if (o.activation) {
    std::string a = *o.activation;
    auto colon = a.find(':');
    std::string kind = a.substr(0, colon);
    if (kind == "all")
      cfg.activation.kind = ActivationKind::All;
    else if (kind == "subset")
      cfg.activation.kind = ActivationKind::RandomSubset;
    else if (kind == "lazy")
      cfg.activation.kind = ActivationKind::LazyAdversary;
    else
      fault("unknown activation: " + a + " (want all, subset[:p], lazy)");
    if (colon != std::string::npos) cfg.activation.p = std::stod(a.substr(colon + 1));
  }
  if (o.activation_p) cfg.activation.p = *o.activation_p;
  if (o.selection) {
    if (*o.selection == "uniform")
      cfg.selection.kind = SelectionKind::UniformRandom;
    else if (*o.selection == "fifo")
      cfg.selection.kind = SelectionKind::FifoQueue;
    else
      fault("unknown selection: " + *o.selection);
  }
  if (o.b_act) cfg.activation.b_act = *o.b_act;
  if (o.b_msg) cfg.b_msg = *o.b_msg;
  if (o.interarrival) cfg.interarrival_mean = *o.interarrival;
  if (o.hold) cfg.hold = *o.hold;
  if (o.cutoff) cfg.call_cutoff_margin = *o.cutoff;
  if (o.topology) {
    nlohmann::json j;
    j["topology"] = *o.topology;
    RunConfig t = config_from_json(j);
    cfg.topology = t.topology;
  }
  if (o.density) cfg.initial_density = *o.density;
  cfg.validate();
  return cfg;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write: " + path);
  out << content;
}

int finish_run_outputs(const CliOptions& o, const RunConfig& cfg, const RunResult& res,
                       const std::string& trace_text) {
  CellStats cell = aggregate({res});
  std::cout << render_report({cell});
  std::cout << "progress mean rounds: " << res.progress_mean_rounds << " (samples "
            << res.progress_samples << "), max enabled " << res.max_enabled_seen
            << ", cyclic boundaries " << res.cyclic_boundaries << " (max streak "
            << res.max_cyclic_streak << ")\n";
  if (!o.out.empty()) {
    if (!trace_text.empty()) write_file(o.out + ".trace", trace_text);
    write_file(o.out + ".csv", requests_to_csv(cfg, res.requests));
    write_file(o.out + ".summary.json", cell_to_json(cell).dump(2) + "\n");
  }
  for (const auto& v : res.violations)
    std::cerr << "violation @" << v.stage << ": " << v.what << "\n";
  for (const auto& d : res.defects) std::cerr << "defect @" << d.stage << ": " << d.what << "\n";
  return res.clean() ? 0 : 2;
}

int run_single(const CliOptions& o) {
  RunConfig cfg = assemble_config(o);
  if (!o.out.empty()) {
    LineSink sink(trace_header(canonical_config(cfg)));
    RunResult res = run(cfg, &sink);
    return finish_run_outputs(o, cfg, res, sink.str());
  }
  RunResult res = run(cfg, nullptr);
  return finish_run_outputs(o, cfg, res, "");
}

int run_replay(const CliOptions& o) {
  RunResult res = replay_trace(read_trace_file(o.from_trace));
  return finish_run_outputs(o, res.config, res, "");
}

int run_sweep(const CliOptions& o) {
  RunConfig base = assemble_config(o);
  auto eq = o.sweep_axis.find('=');
  require(eq != std::string::npos, "sweep axis must look like name=v1,v2,...");
  std::string axis = o.sweep_axis.substr(0, eq);
  std::vector<double> values;
  std::istringstream vs(o.sweep_axis.substr(eq + 1));
  std::string tok;
  while (std::getline(vs, tok, ',')) values.push_back(std::stod(tok));
  require(!values.empty(), "sweep axis has no values");

  std::string all_requests = request_csv_header() + "\n";
  std::string cells_csv = cell_csv_header() + "\n";
  std::vector<CellStats> cells;
  bool dirty = false;
  for (std::size_t ci = 0; ci < values.size(); ++ci) {
    RunConfig cfg = base;
    if (axis == "nodes" || axis == "n")
      cfg.nodes = static_cast<int>(values[ci]);
    else if (axis == "delta" || axis == "d")
      cfg.delta = static_cast<int>(values[ci]);
    else if (axis == "q" || axis == "rate")
      cfg.adversary.rate = values[ci];
    else if (axis == "c")
      cfg.c = values[ci];
    else if (axis == "stages")
      cfg.stages = static_cast<std::int64_t>(values[ci]);
    else if (axis == "b-msg" || axis == "b_msg")
      cfg.b_msg = static_cast<int>(values[ci]);
    else if (axis == "b-act" || axis == "b_act")
      cfg.activation.b_act = static_cast<int>(values[ci]);
    else if (axis == "interarrival")
      cfg.interarrival_mean = values[ci];
    else if (axis == "hold")
      cfg.hold = static_cast<std::int64_t>(values[ci]);
    else
      fault("unknown sweep axis: " + axis);
    std::vector<RunResult> runs;
    for (int rep = 0; rep < o.reps; ++rep) {
      RunConfig rc = cfg;
      rc.seed = cfg.seed + 7919u * (ci + 1) + static_cast<std::uint64_t>(rep);
      RunResult r = run(rc);
      for (const auto& rec : r.requests) {
        all_requests += request_csv_row(rc, rec);
        all_requests += '\n';
      }
      if (!r.clean()) dirty = true;
      runs.push_back(std::move(r));
    }
    CellStats cell = aggregate(runs);
    cells.push_back(cell);
    cells_csv += cell_csv_row(cell);
    cells_csv += '\n';
  }
  std::cout << render_report(cells);
  if ((axis == "nodes" || axis == "n") && cells.size() >= 2) {
    std::vector<double> xs, ys;
    for (const auto& c : cells) {
      if (c.open_rounds.n == 0 || c.open_rounds.mean <= 0) continue;
      xs.push_back(c.config.nodes);
      ys.push_back(c.open_rounds.mean);
    }
    if (xs.size() >= 2) {
      LinearFit f = fit_loglog(xs, ys);
      std::cout << "open-round locking time vs n: fitted exponent " << f.slope << "\n";
    }
  }
  if (!o.out.empty()) {
    write_file(o.out + ".csv", all_requests);
    write_file(o.out + ".cells.csv", cells_csv);
    nlohmann::json j = nlohmann::json::array();
    for (const auto& c : cells) j.push_back(cell_to_json(c));
    write_file(o.out + ".summary.json", j.dump(2) + "\n");
  }
  return dirty ? 2 : 0;
}

int run_explore(const CliOptions& o) {
  ExploreConfig cfg;
  if (o.nodes) cfg.nodes = *o.nodes;
  if (o.delta) cfg.delta = *o.delta;
  if (o.c) cfg.c = *o.c;
  if (o.topology) {
    if (*o.topology == "complete")
      cfg.topology = InitialTopology::Complete;
    else if (*o.topology == "path")
      cfg.topology = InitialTopology::Path;
    else if (*o.topology == "ring")
      cfg.topology = InitialTopology::Ring;
    else
      fault("explore supports complete, path or ring topologies");
  }
  cfg.depth_max = o.explore_depth;
  cfg.state_budget = o.explore_budget;
  ExploreResult res = explore_exhaustive(cfg);
  std::cout << "explored " << res.states_visited << " states, " << res.transitions
            << " transitions, depth " << res.depth_reached << ", locked states "
            << res.locked_states << "\n";
  if (res.budget_exceeded) std::cout << "state budget exceeded: partial coverage only\n";
  if (!res.violations.empty()) {
    std::cout << "VIOLATIONS:\n";
    for (const auto& v : res.violations) std::cout << "  " << v << "\n";
    std::cout << "counterexample:\n";
    for (const auto& step : res.counterexample) std::cout << "  " << step << "\n";
    if (!o.out.empty()) {
      std::string text;
      for (const auto& step : res.counterexample) text += step + "\n";
      write_file(o.out + ".counterexample.txt", text);
    }
    return 2;
  }
  std::cout << "no violations in the bounded space\n";
  return res.budget_exceeded ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simulator and verification harness for randomized local mutual exclusion "
               "on dynamic networks"};
  CliOptions o;
  app.add_option("--config", o.config_file, "JSON config file; flags override");
  app.add_option("--nodes", o.nodes, "node count");
  app.add_option("--delta", o.delta, "ports per node");
  app.add_option("--c", o.c, "priority range constant, K = c*delta^2");
  app.add_option("--stages", o.stages, "stages to simulate");
  app.add_option("--seed", o.seed, "master seed");
  app.add_option("--adversary", o.adversary, "static | churn:q | targeted:q");
  app.add_option("--activation", o.activation, "all | subset[:p] | lazy");
  app.add_option("--selection", o.selection, "uniform | fifo");
  app.add_option("--b-act", o.b_act, "activation fairness bound");
  app.add_option("--b-msg", o.b_msg, "maximum transit delay");
  app.add_option("--hold", o.hold, "stages a completed lock is held");
  app.add_option("--interarrival", o.interarrival, "mean stages between lock requests");
  app.add_option("--cutoff", o.cutoff, "tail margin without new requests");
  app.add_option("--topology", o.topology, "empty | complete | path | ring | random");
  app.add_option("--density", o.density, "initial random-topology density");
  app.add_option("--out", o.out, "output path prefix");
  app.add_option("--sweep-axis", o.sweep_axis, "sweep axis, e.g. n=4,8,16,32");
  app.add_option("--reps", o.reps, "repetitions per sweep cell");
  app.add_flag("--explore", o.explore, "bounded exhaustive exploration");
  app.add_option("--explore-depth", o.explore_depth, "exploration stage depth");
  app.add_option("--explore-budget", o.explore_budget, "exploration state budget");
  app.add_option("--from-trace", o.from_trace, "replay a stored trace");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (o.explore) return run_explore(o);
    if (!o.from_trace.empty()) return run_replay(o);
    if (!o.sweep_axis.empty()) return run_sweep(o);
    return run_single(o);
  } catch (const lmx::SimFault& e) {
    std::cerr << "fault: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

// Acceptance gate: one pass/fail line per criterion, grouped so expensive
// simulation batches are shared. Groups: safety (criteria 1, 3, 8),
// oracle (2), stats (4, 5, 6), scaling (7), determinism (9).

#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lmx/explore.hpp"
#include "lmx/report.hpp"
#include "lmx/runner.hpp"

using namespace lmx;

namespace {

int failures = 0;

void gate(int criterion, bool pass, const std::string& text) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, text.c_str());
  if (!pass) ++failures;
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

// ---- safety: criteria 1, 3, 8 ---------------------------------------------

void run_safety() {
  const int ns[] = {8, 16, 32};
  const int deltas[] = {2, 3, 4};
  const double qs[] = {0.0, 0.02, 0.05};

  std::int64_t violations = 0, defects = 0, incomplete = 0, unlatched = 0;
  std::int64_t requests = 0, completed = 0;
  std::int64_t max_open_rounds = 0;
  std::int64_t cyclic_boundaries = 0, max_cyclic_streak = 0;
  bool enabled_bound_ok = true, progress_bound_ok = true;
  double worst_progress_margin = 0;
  std::string first_violation;

  for (int i = 0; i < 100; ++i) {
    RunConfig cfg;
    cfg.nodes = ns[i % 3];
    cfg.delta = deltas[(i / 3) % 3];
    cfg.adversary = qs[(i / 9) % 3] > 0 ? adversary_churn(qs[(i / 9) % 3]) : adversary_static();
    cfg.stages = 10000;
    cfg.seed = 1000 + static_cast<std::uint64_t>(i);
    cfg.c = 4;
    cfg.interarrival_mean = 100;
    cfg.hold = 3;
    cfg.call_cutoff_margin = 2500;
    cfg.topology = InitialTopology::Random;
    cfg.initial_density = 0.5;
    RunResult r = run(cfg);

    violations += r.violation_count;
    defects += r.defect_count;
    incomplete += r.incomplete_requests;
    cyclic_boundaries += r.cyclic_boundaries;
    max_cyclic_streak = std::max(max_cyclic_streak, r.max_cyclic_streak);
    if (!r.violations.empty() && first_violation.empty()) first_violation = r.violations[0].what;
    if (!r.defects.empty() && first_violation.empty()) first_violation = r.defects[0].what;
    if (r.max_enabled_seen > 2 * cfg.delta + 4) enabled_bound_ok = false;
    if (r.progress_samples > 0) {
      double margin = r.progress_mean_rounds / (2.0 * cfg.delta + 4.0);
      worst_progress_margin = std::max(worst_progress_margin, margin);
      if (r.progress_mean_rounds > 2.0 * cfg.delta + 4.0) progress_bound_ok = false;
    }
    for (const auto& rec : r.requests) {
      ++requests;
      if (rec.done_stage >= 0) {
        ++completed;
        max_open_rounds = std::max(max_open_rounds, rec.open_rounds);
        if (rec.success_stage < 0) ++unlatched;
      }
    }
  }

  gate(1, violations == 0,
       fmt("mutual exclusion over 100 runs (n in {8,16,32}, delta in {2,3,4}, churn q in "
           "{0,0.02,0.05}, 10^4 stages): %lld lock-set violations%s%s",
           static_cast<long long>(violations), first_violation.empty() ? "" : " - first: ",
           first_violation.c_str()));
  gate(3, incomplete == 0 && unlatched == 0 && completed == requests && requests > 0,
       fmt("lockout freedom: %lld/%lld issued requests succeeded "
           "(max observed open-round locking time %lld)",
           static_cast<long long>(completed), static_cast<long long>(requests),
           static_cast<long long>(max_open_rounds)));
  gate(8,
       defects == 0 && enabled_bound_ok && progress_bound_ok,
       fmt("structural invariants: transit <= 2 per directed pair (send-asserted), "
           "enabled executions <= 2*delta+4 (%s), single stable initiator action, "
           "no persistent dependency cycle (transient cyclic boundaries %lld, max streak "
           "%lld), progress mean <= 2*delta+4 (worst ratio %.3f)",
           enabled_bound_ok ? "ok" : "EXCEEDED", static_cast<long long>(cyclic_boundaries),
           static_cast<long long>(max_cyclic_streak), worst_progress_margin));
}

// ---- oracle: criterion 2 ---------------------------------------------------

void run_oracle() {
  ExploreConfig two;
  two.nodes = 2;
  two.delta = 1;
  two.c = 2;  // K = 2
  two.topology = InitialTopology::Complete;
  two.depth_max = 14;
  ExploreResult r2 = explore_exhaustive(two);

  ExploreConfig three;
  three.nodes = 3;
  three.delta = 2;
  three.c = 0.5;  // K = 2
  three.topology = InitialTopology::Path;
  three.depth_max = 12;
  ExploreResult r3 = explore_exhaustive(three);

  // triangle: densest three-node contention, bounded depth
  ExploreConfig tri;
  tri.nodes = 3;
  tri.delta = 2;
  tri.c = 0.5;
  tri.topology = InitialTopology::Ring;
  tri.depth_max = 9;
  ExploreResult rt = explore_exhaustive(tri);

  // the two-node space closes: every terminal state must be quiescent,
  // which rules out deadlocks exhaustively for this scenario
  ExploreConfig closure = two;
  closure.depth_max = 64;
  Explorer explorer(closure);
  ExploreResult rc = explorer.run();
  std::int64_t checked = 0;
  bool inside = rc.complete;
  for (std::uint64_t seed = 1; seed <= 6 && inside; ++seed) {
    ActivationPolicy act;
    act.kind = seed % 2 ? ActivationKind::RandomSubset : ActivationKind::All;
    SelectionPolicy sel;
    sel.kind = seed % 3 ? SelectionKind::UniformRandom : SelectionKind::FifoQueue;
    Sim sim(2, 1, 2, act, sel, adversary_static(), 8, seed * 101);
    if (!sim.topology().connect(0, 1)) { inside = false; break; }
    struct Snap : SimObserver {
      Sim* sim = nullptr;
      const std::unordered_map<std::string, std::int64_t>* space = nullptr;
      std::int64_t* checked = nullptr;
      bool ok = true;
      void on_stage_start(const SimView& view,
                          const std::vector<std::vector<ActionExecution>>&) override {
        using detail_explore::ExploreState;
        const int n = view.node_count();
        ExploreState s;
        s.vars.resize(2);
        s.detectors.resize(2);
        s.pending_lock.resize(2);
        s.pending_unlock.resize(2);
        s.channels.assign(4, {});
        for (NodeId u = 0; u < n; ++u) {
          s.vars[static_cast<std::size_t>(u)] = view.vars(u);
          s.detectors[static_cast<std::size_t>(u)] = view.detectors().peek(u);
          s.pending_lock[static_cast<std::size_t>(u)] = sim->lock_pending(u);
          s.pending_unlock[static_cast<std::size_t>(u)] = sim->unlock_pending(u);
          for (NodeId from = 0; from < n; ++from)
            for (const TransitMsg& m : view.transit().channel(from, u))
              if (m.sent_stage < view.stage())
                s.channels[static_cast<std::size_t>(from) * n + u].push_back(m.msg);
        }
        detail_explore::canonicalize(s);
        if (!space->count(detail_explore::encode(s, 2, 1))) ok = false;
        ++*checked;
      }
    } snap;
    snap.sim = &sim;
    snap.space = &explorer.visited();
    snap.checked = &checked;
    struct OneShot : WorkloadDriver {
      std::int64_t unlock_at[2] = {-1, -1};
      void at_boundary(Sim& sim) override {
        if (sim.stage() == 0) {
          sim.call_lock(0);
          sim.call_lock(1);
        }
        for (NodeId u = 0; u < 2; ++u)
          if (unlock_at[u] >= 0 && unlock_at[u] <= sim.stage() && !sim.unlock_pending(u)) {
            sim.call_unlock(u);
            unlock_at[u] = -2;
          }
      }
      void after_execution(Sim& sim, NodeId u, const ActionExecution&,
                           const ActionEffect& eff) override {
        if (eff.has_returned_lock_set) unlock_at[u] = sim.stage();
      }
    } wl;
    for (int s = 0; s < 100 && snap.ok; ++s) sim.run_stage(&wl, &snap);
    inside = inside && snap.ok;
  }

  gate(2,
       r2.complete && r2.violations.empty() && r3.complete && r3.violations.empty() &&
           rt.complete && rt.violations.empty() && rc.complete && rc.terminal_states > 0 &&
           inside,
       fmt("bounded exhaustive oracle: 2-node complete K=2 depth 14 (%lld states, %s), "
           "3-node path K=2 depth 12 (%lld states, %s), triangle depth 9 (%lld states, %s); "
           "closed 2-node space deadlock-free (%lld quiescent terminals); %lld sampled "
           "boundary states all inside the closed space",
           static_cast<long long>(r2.states_visited),
           r2.violations.empty() ? "clean" : "VIOLATIONS",
           static_cast<long long>(r3.states_visited),
           r3.violations.empty() ? "clean" : "VIOLATIONS",
           static_cast<long long>(rt.states_visited),
           rt.violations.empty() ? "clean" : "VIOLATIONS",
           static_cast<long long>(rc.terminal_states), static_cast<long long>(checked)));
}

// ---- stats: criteria 4, 5, 6 -----------------------------------------------

void run_stats() {
  bool win_ok = true, trials_ok = true, span_ok = true, enough = true;
  std::string detail4, detail5, detail6;
  for (int delta : {2, 3}) {
    std::vector<RunResult> results;
    for (std::uint64_t rep = 0; rep < 2; ++rep) {
      RunConfig cfg;
      cfg.nodes = 16;
      cfg.delta = delta;
      cfg.c = 4;  // K = 4 * delta^2
      cfg.stages = 6000;
      cfg.seed = 42 + rep + 10 * static_cast<std::uint64_t>(delta);
      cfg.adversary = adversary_static();
      cfg.topology = InitialTopology::Random;
      cfg.initial_density = 0.7;
      cfg.interarrival_mean = 25;  // contended
      cfg.call_cutoff_margin = 1500;
      results.push_back(run(cfg));
    }
    CellStats cell = aggregate(results);
    if (cell.open_trials < 500) enough = false;
    if (!(cell.win_frequency.lo > cell.win_probability_floor)) win_ok = false;
    if (!(cell.trials_to_win.hi < cell.expected_trials_ceiling)) trials_ok = false;
    if (!(cell.open_trial_span.mean < cell.trial_k_bound.mean)) span_ok = false;
    detail4 += fmt("[d=%d: %lld open trials, freq %.3f ci-lo %.3f > floor %.4f] ", delta,
                   static_cast<long long>(cell.open_trials), cell.win_frequency.mean,
                   cell.win_frequency.lo, cell.win_probability_floor);
    detail5 += fmt("[d=%d: mean %.2f ci-hi %.2f < bound %.2f] ", delta, cell.trials_to_win.mean,
                   cell.trials_to_win.hi, cell.expected_trials_ceiling);
    detail6 += fmt("[d=%d: span %.2f < bound-at-k %.1f] ", delta, cell.open_trial_span.mean,
                   cell.trial_k_bound.mean);
  }
  gate(4, win_ok && enough, "per-trial win probability above the analytic floor: " + detail4);
  gate(5, trials_ok && enough, "expected trials below the analytic ceiling: " + detail5);
  gate(6, span_ok && enough, "open trial resolution under 2k(10*delta+20): " + detail6);
}

// ---- scaling: criterion 7 --------------------------------------------------

void run_scaling() {
  std::vector<double> xs, ys;
  bool cells_ok = true, bound_ok = true;
  std::string detail;
  for (int n : {4, 8, 16, 32}) {
    std::vector<RunResult> results;
    for (std::uint64_t rep = 0; rep < 3; ++rep) {
      RunConfig cfg;
      cfg.nodes = n;
      cfg.delta = 2;
      cfg.c = 4;
      cfg.stages = 6000;
      cfg.seed = 7000 + rep + 100 * static_cast<std::uint64_t>(n);
      cfg.adversary = adversary_static();
      cfg.topology = InitialTopology::Random;
      cfg.initial_density = 0.7;
      cfg.interarrival_mean = 50;
      cfg.call_cutoff_margin = 1500;
      results.push_back(run(cfg));
    }
    CellStats cell = aggregate(results);
    if (cell.completed < 200) cells_ok = false;
    if (!(cell.open_rounds.mean < cell.request_rounds_ceiling)) bound_ok = false;
    detail += fmt("[n=%d: %lld req, open %.2f, ceil %.0f] ", n,
                  static_cast<long long>(cell.completed), cell.open_rounds.mean,
                  cell.request_rounds_ceiling);
    xs.push_back(n);
    ys.push_back(cell.open_rounds.mean);
  }
  LinearFit f = fit_loglog(xs, ys);
  gate(7, cells_ok && bound_ok && f.slope <= 1.3,
       fmt("scaling at delta=2: log-log exponent %.3f <= 1.3; per-cell means under the "
           "(2d+4)(7+20e^{4/c}nd^2) ceiling %s",
           f.slope, detail.c_str()));
}

// ---- determinism: criterion 9 ----------------------------------------------

void run_determinism() {
  namespace fs = std::filesystem;
  const fs::path golden = fs::path(LMX_SOURCE_DIR) / "tests" / "golden";
  int files = 0, matched = 0;
  std::string first_bad;
  if (fs::exists(golden)) {
    for (const auto& entry : fs::directory_iterator(golden)) {
      if (entry.path().extension() != ".trace") continue;
      ++files;
      std::vector<std::string> lines = read_trace_file(entry.path().string());
      std::istringstream head(lines[0]);
      std::string magic;
      int version;
      head >> magic >> version;
      std::string cfg_json;
      std::getline(head, cfg_json);
      RunConfig cfg = config_from_json(nlohmann::json::parse(cfg_json));
      LineSink sink(trace_header(canonical_config(cfg)));
      run(cfg, &sink);
      std::string regenerated = sink.str();
      std::ifstream in(entry.path(), std::ios::binary);
      std::string stored((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      if (regenerated == stored)
        ++matched;
      else if (first_bad.empty())
        first_bad = entry.path().filename().string();
    }
  }

  // fresh double-run identity on a churny config
  RunConfig cfg;
  cfg.nodes = 6;
  cfg.delta = 3;
  cfg.stages = 1500;
  cfg.seed = 905;
  cfg.adversary = adversary_churn(0.04);
  cfg.interarrival_mean = 40;
  cfg.call_cutoff_margin = 400;
  LineSink a(trace_header(canonical_config(cfg))), b(trace_header(canonical_config(cfg)));
  run(cfg, &a);
  run(cfg, &b);

  gate(9, files == 10 && matched == files && a.str() == b.str(),
       fmt("determinism: %d/%d golden traces regenerate byte-identically%s%s; "
           "double-run traces identical: %s",
           matched, files, first_bad.empty() ? "" : " - first mismatch: ", first_bad.c_str(),
           a.str() == b.str() ? "yes" : "NO"));
}

}  // namespace

int main(int argc, char** argv) {
  std::string group = argc > 1 ? argv[1] : "all";
  try {
    if (group == "safety" || group == "all") run_safety();
    if (group == "oracle" || group == "all") run_oracle();
    if (group == "stats" || group == "all") run_stats();
    if (group == "scaling" || group == "all") run_scaling();
    if (group == "determinism" || group == "all") run_determinism();
  } catch (const std::exception& e) {
    std::printf("FAIL: exception escaped the gate: %s\n", e.what());
    return 2;
  }
  return failures == 0 ? 0 : 1;
}

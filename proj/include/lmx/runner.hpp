#pragma once

// Drives one configured run end to end: seeded workload, stage loop,
// checker, trace emission, and the per-request result table. Also replays
// a stored trace through the same checker, which is how stored runs are
// turned back into bit-identical CSV.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lmx/checker.hpp"
#include "lmx/config.hpp"
#include "lmx/scheduler.hpp"
#include "lmx/trace.hpp"

namespace lmx {

// Geometric lock-request interarrival per node; unlock follows `hold`
// stages after completion. No new requests inside the tail margin so that
// issued requests can drain before the run ends.
class GeometricWorkload : public WorkloadDriver {
 public:
  GeometricWorkload(const RunConfig& cfg)
      : cfg_(cfg),
        rng_(Rng::derive(cfg.seed, "workload")),
        next_call_(static_cast<std::size_t>(cfg.nodes), 0),
        unlock_at_(static_cast<std::size_t>(cfg.nodes), -1) {
    for (auto& t : next_call_) t = 1 + draw_gap();
  }

  void at_boundary(Sim& sim) override {
    const std::int64_t cutoff = cfg_.stages - cfg_.call_cutoff_margin;
    for (NodeId u = 0; u < sim.node_count(); ++u) {
      const auto i = static_cast<std::size_t>(u);
      if (next_call_[i] >= 0 && next_call_[i] <= sim.stage()) {
        if (sim.stage() >= cutoff) {
          next_call_[i] = -1;  // tail: request forgone
        } else if (!sim.lock_pending(u) && sim.vars(u).state == NodeState::Idle) {
          sim.call_lock(u);
          next_call_[i] = -1;
        }
      }
      if (unlock_at_[i] >= 0 && unlock_at_[i] <= sim.stage() && !sim.unlock_pending(u)) {
        sim.call_unlock(u);
        unlock_at_[i] = -2;
      }
    }
  }

  void after_execution(Sim& sim, NodeId u, const ActionExecution& exec,
                       const ActionEffect& eff) override {
    const auto i = static_cast<std::size_t>(u);
    if (eff.has_returned_lock_set) unlock_at_[i] = sim.stage() + cfg_.hold;
    if (exec.action == ActionId::CheckUnlocked) {
      unlock_at_[i] = -1;
      next_call_[i] = sim.stage() + 1 + draw_gap();
    }
  }

 private:
  std::int64_t draw_gap() { return rng_.geometric(1.0 / cfg_.interarrival_mean); }

  RunConfig cfg_;
  Rng rng_;
  std::vector<std::int64_t> next_call_;
  std::vector<std::int64_t> unlock_at_;
};

struct RunResult {
  RunConfig config;
  std::vector<LockRequestRecord> requests;
  std::int64_t violation_count = 0;
  std::int64_t defect_count = 0;
  std::int64_t incomplete_requests = 0;
  double progress_mean_rounds = 0.0;
  std::int64_t progress_samples = 0;
  int max_enabled_seen = 0;
  std::int64_t cyclic_boundaries = 0;
  std::int64_t max_cyclic_streak = 0;
  std::int64_t stages_run = 0;
  std::vector<CheckerReport> violations;
  std::vector<CheckerReport> defects;

  bool clean() const { return violation_count == 0 && defect_count == 0; }
};

inline void fill_result(RunResult& r, const Checker& checker) {
  r.requests = checker.completed();
  r.violation_count = static_cast<std::int64_t>(checker.violations().size());
  r.defect_count = static_cast<std::int64_t>(checker.defects().size());
  r.incomplete_requests = checker.incomplete_requests();
  r.progress_mean_rounds = checker.progress_mean_rounds();
  r.progress_samples = checker.progress_samples();
  r.max_enabled_seen = checker.max_enabled_seen();
  r.cyclic_boundaries = checker.cyclic_boundaries();
  r.max_cyclic_streak = checker.max_cyclic_streak();
  r.violations = checker.violations();
  r.defects = checker.defects();
}

// Fans events out to the optional trace sink while the checker observes.
class RunObserver : public SimObserver {
 public:
  RunObserver(Checker& checker, TraceSink* sink) : checker_(checker), sink_(sink) {}
  void on_event(const SimEvent& e) override {
    if (sink_) sink_->on_event(e);
    checker_.on_event(e);
  }
  void on_stage_start(const SimView& sim, const std::vector<std::vector<ActionExecution>>& en) override {
    checker_.on_stage_start(sim, en);
  }
  void on_execution(const SimView& sim, NodeId u, const ActionExecution& ex,
                    const ActionEffect& eff) override {
    checker_.on_execution(sim, u, ex, eff);
  }
  void on_stage_end(const SimView& sim) override { checker_.on_stage_end(sim); }

 private:
  Checker& checker_;
  TraceSink* sink_;
};

inline RunResult run(const RunConfig& cfg, TraceSink* sink = nullptr) {
  cfg.validate();
  Sim sim(cfg.nodes, cfg.delta, cfg.k_range(), cfg.activation, cfg.selection, cfg.adversary,
          cfg.b_msg, cfg.seed);
  build_initial_topology(sim.topology(), cfg);
  Checker checker(cfg.nodes, cfg.delta, sink);
  GeometricWorkload workload(cfg);
  RunObserver observer(checker, sink);
  for (std::int64_t s = 0; s < cfg.stages; ++s) sim.run_stage(&workload, &observer);
  checker.finish(sim);
  RunResult r;
  r.config = cfg;
  r.stages_run = cfg.stages;
  fill_result(r, checker);
  return r;
}

// ---- request CSV ----------------------------------------------------------

inline std::string request_csv_header() {
  return "nodes,delta,c,adversary_rate,seed,node,call_stage,issue_stage,success_stage,"
         "done_stage,rounds_total,rounds_open,rounds_closed,trials,win_trial_index,"
         "open_trials,max_trial_k";
}

inline std::string request_csv_row(const RunConfig& cfg, const LockRequestRecord& r) {
  int open_trials = 0, max_k = 0;
  for (const auto& t : r.trials) {
    if (t.open && t.outcome != TrialRecord::Outcome::Aborted) ++open_trials;
    max_k = std::max(max_k, t.dag_k);
  }
  std::ostringstream os;
  os << cfg.nodes << ',' << cfg.delta << ',' << cfg.c << ',' << cfg.adversary.rate << ','
     << cfg.seed << ',' << r.node << ',' << r.call_stage << ',' << r.issue_stage << ','
     << r.success_stage << ',' << r.done_stage << ',' << r.total_rounds << ','
     << r.open_rounds << ',' << r.closed_rounds << ',' << r.trials.size() << ','
     << r.win_trial_index << ',' << open_trials << ',' << max_k;
  return os.str();
}

inline std::string requests_to_csv(const RunConfig& cfg,
                                   const std::vector<LockRequestRecord>& requests) {
  std::string out = request_csv_header() + "\n";
  for (const auto& r : requests) {
    out += request_csv_row(cfg, r);
    out += '\n';
  }
  return out;
}

// ---- trace replay ----------------------------------------------------------

// Rebuilds the run from its trace, feeding the same checker interface, so
// every request-level statistic regenerates without touching any RNG.
class TraceReplayer : public SimView {
 public:
  explicit TraceReplayer(const RunConfig& cfg)
      : cfg_(cfg),
        topo_(cfg.nodes, cfg.delta),
        transit_(cfg.nodes),
        detectors_(cfg.nodes),
        vars_(static_cast<std::size_t>(cfg.nodes)),
        pending_lock_(static_cast<std::size_t>(cfg.nodes), false),
        pending_unlock_(static_cast<std::size_t>(cfg.nodes), false),
        executed_prev_(static_cast<std::size_t>(cfg.nodes), false) {
    build_initial_topology(topo_, cfg);
    for (auto& v : vars_) v = new_node_vars(cfg.delta);
  }

  const Topology& topology() const override { return topo_; }
  const TransitStore& transit() const override { return transit_; }
  const DisconnectBuffers& detectors() const override { return detectors_; }
  const NodeVars& vars(NodeId u) const override { return vars_[static_cast<std::size_t>(u)]; }
  std::int64_t stage() const override { return stage_; }
  const RoundLedger& rounds() const override { return ledger_; }
  int k_range() const override { return cfg_.k_range(); }

  void feed(const SimEvent& e, Checker& checker) {
    switch (e.kind) {
      case EventKind::Edge: {
        if (e.connected) {
          EdgeChange ch;
          require(topo_.connect(e.u, e.v, &ch), "replay: connect refused");
          require(ch.port_u == e.port_u && ch.port_v == e.port_v,
                  "replay: port assignment diverged");
        } else {
          sever_edge(topo_, transit_, detectors_, e.u, e.v);
        }
        checker.on_event(e);
        break;
      }
      case EventKind::Workload:
        (e.lock_call ? pending_lock_ : pending_unlock_)[static_cast<std::size_t>(e.node)] = true;
        checker.on_event(e);
        break;
      case EventKind::Stage: {
        stage_ = e.stage;
        enabled_.assign(static_cast<std::size_t>(cfg_.nodes), {});
        std::vector<bool> enabled_now(static_cast<std::size_t>(cfg_.nodes));
        for (NodeId u = 0; u < cfg_.nodes; ++u) {
          enabled_[static_cast<std::size_t>(u)] = enabled_of(u);
          enabled_now[static_cast<std::size_t>(u)] = !enabled_[static_cast<std::size_t>(u)].empty();
        }
        if (stage_ == 0)
          ledger_.init(enabled_now, 0);
        else
          ledger_.advance(executed_prev_, enabled_now, stage_);
        require(ledger_.round() == e.round, "replay: round accounting diverged");
        std::fill(executed_prev_.begin(), executed_prev_.end(), false);
        checker.on_event(e);
        checker.on_stage_start(*this, enabled_);
        break;
      }
      case EventKind::Action: {
        apply_recorded(e, checker);
        break;
      }
      case EventKind::Defect:
        break;  // regenerated by the checker itself
    }
  }

 private:
  std::vector<InboxEntry> inbox_of(NodeId u) const {
    std::vector<InboxEntry> in;
    for (NodeId from = 0; from < cfg_.nodes; ++from) {
      const auto& ch = transit_.channel(from, u);
      if (ch.empty()) continue;
      Port p = from == u ? kSelfPort : topo_.port_at(u, from);
      if (from != u && p < 0) continue;
      for (const TransitMsg& m : ch)
        if (m.sent_stage < stage_) in.push_back({m.msg, p, m.uid, m.sent_stage});
    }
    return in;
  }

  std::vector<ActionExecution> enabled_of(NodeId u) const {
    return enabled_action_executions(vars_[static_cast<std::size_t>(u)], inbox_of(u),
                                     detectors_.peek(u),
                                     pending_lock_[static_cast<std::size_t>(u)],
                                     pending_unlock_[static_cast<std::size_t>(u)]);
  }

  void apply_recorded(const SimEvent& e, Checker& checker) {
    const NodeId u = e.node;
    const auto i = static_cast<std::size_t>(u);
    ActionExecution exec;
    exec.action = e.action;
    if (e.has_msg) {
      NodeId from = e.from_port == kSelfPort ? u : topo_.peer_on(u, e.from_port);
      require(from >= 0, "replay: message from a dead port");
      const auto& ch = transit_.channel(from, u);
      std::uint64_t uid = 0;
      Message msg;
      for (const TransitMsg& m : ch) {
        if (m.msg.kind != e.msg_kind || m.sent_stage >= stage_) continue;
        if (e.msg_kind == MsgKind::RequestLock && m.msg.priority != e.payload) continue;
        if (e.msg_kind == MsgKind::Win && (m.msg.verdict ? 1 : 0) != e.payload) continue;
        uid = m.uid;
        msg = m.msg;
        break;
      }
      require(uid != 0, "replay: recorded message not in transit");
      transit_.consume(from, u, uid);
      exec.has_message = true;
      exec.message = msg;
      exec.from_port = e.from_port;
      exec.msg_uid = uid;
    }
    PortSet snapshot = detectors_.take(u);
    PrioritySource draw = e.payload >= 0 && !e.has_msg
                              ? priority_fixed(e.payload)
                              : PrioritySource([](int) -> int {
                                  fault("replay: unexpected priority draw");
                                  return 0;
                                });
    ActionEffect eff = apply_action(vars_[i], exec, snapshot, topo_.live_ports(u),
                                    cfg_.k_range(), draw);
    vars_[i] = eff.vars;
    if (eff.lock_call_consumed) pending_lock_[i] = false;
    if (eff.unlock_call_consumed) pending_unlock_[i] = false;
    for (const Send& s : eff.sends) {
      NodeId to = s.port == kSelfPort ? u : topo_.peer_on(u, s.port);
      require(to >= 0, "replay: send on a dead port");
      transit_.send(u, to, s.msg, stage_);
    }
    executed_prev_[i] = true;
    checker.on_execution(*this, u, exec, eff);
  }

  RunConfig cfg_;
  Topology topo_;
  TransitStore transit_;
  DisconnectBuffers detectors_;
  std::vector<NodeVars> vars_;
  std::vector<bool> pending_lock_, pending_unlock_;
  std::vector<bool> executed_prev_;
  std::vector<std::vector<ActionExecution>> enabled_;
  RoundLedger ledger_;
  std::int64_t stage_ = 0;
};

// Replays a stored trace (header + lines) and returns the regenerated
// result. The header carries the canonical config.
inline RunResult replay_trace(const std::vector<std::string>& lines) {
  require(!lines.empty(), "empty trace");
  std::istringstream head(lines[0]);
  std::string magic;
  int version = 0;
  head >> magic >> version;
  require(magic == "lmx-trace" && version == kTraceVersion, "unsupported trace header");
  std::string cfg_json;
  std::getline(head, cfg_json);
  RunConfig cfg = config_from_json(nlohmann::json::parse(cfg_json));
  cfg.validate();

  TraceReplayer rep(cfg);
  Checker checker(cfg.nodes, cfg.delta);
  std::int64_t cur_stage = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto ev = parse_line(lines[i], cur_stage);
    require(ev.has_value(), "unparsable trace line");
    if (ev->kind == EventKind::Stage) cur_stage = ev->stage;
    rep.feed(*ev, checker);
  }
  checker.finish(rep);
  RunResult r;
  r.config = cfg;
  r.stages_run = cur_stage + 1;
  fill_result(r, checker);
  return r;
}

inline std::vector<std::string> read_trace_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open trace file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace lmx

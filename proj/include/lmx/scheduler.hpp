#pragma once

// The semi-synchronous stage loop. Per stage: edge dynamics at the
// boundary, workload calls, guard evaluation, activation of a node subset
// under a fairness policy, one action execution per activated node chosen
// uniformly at random (or FIFO), all applied against the stage-start state
// with sends visible from the next stage, and round accounting.

#include <cstdint>
#include <deque>
#include <vector>

#include "lmx/core.hpp"
#include "lmx/network.hpp"
#include "lmx/protocol.hpp"
#include "lmx/rng.hpp"
#include "lmx/trace.hpp"

namespace lmx {

enum class ActivationKind : std::uint8_t { All, RandomSubset, LazyAdversary };

// Every policy activates a continuously enabled node within b_act stages.
struct ActivationPolicy {
  ActivationKind kind = ActivationKind::RandomSubset;
  double p = 0.5;  // RandomSubset only
  int b_act = 4;
};

enum class SelectionKind : std::uint8_t { UniformRandom, FifoQueue };

struct SelectionPolicy {
  SelectionKind kind = SelectionKind::UniformRandom;
};

// Rounds normalize time to the slowest node: round r spans from t_r to the
// earliest stage boundary by which every node enabled at t_r has executed
// or been disabled. An empty enabled set closes its round after one stage.
class RoundLedger {
 public:
  void init(const std::vector<bool>& enabled_now, std::int64_t stage) {
    pending_ = enabled_now;
    start_stages_.assign(1, stage);
  }

  // Called at each later boundary with the previous stage's executions and
  // the current enabled set. Returns true when a new round begins.
  bool advance(const std::vector<bool>& executed_prev, const std::vector<bool>& enabled_now,
               std::int64_t stage) {
    for (std::size_t i = 0; i < pending_.size(); ++i)
      if (pending_[i] && (executed_prev[i] || !enabled_now[i])) pending_[i] = false;
    for (bool b : pending_)
      if (b) return false;
    pending_ = enabled_now;
    start_stages_.push_back(stage);
    return true;
  }

  std::int64_t round() const { return static_cast<std::int64_t>(start_stages_.size()) - 1; }
  std::int64_t round_start(std::int64_t r) const {
    return start_stages_[static_cast<std::size_t>(r)];
  }
  const std::vector<std::int64_t>& start_stages() const { return start_stages_; }

  // First round whose interval [t_r, t_{r+1}) contains `stage`.
  std::int64_t round_of_stage(std::int64_t stage) const {
    std::size_t lo = 0, hi = start_stages_.size();
    while (lo + 1 < hi) {
      std::size_t mid = (lo + hi) / 2;
      if (start_stages_[mid] <= stage)
        lo = mid;
      else
        hi = mid;
    }
    return static_cast<std::int64_t>(lo);
  }

 private:
  std::vector<bool> pending_;
  std::vector<std::int64_t> start_stages_;
};

// Selection bookkeeping for the FIFO policy: executions queue up in the
// order they first became enabled and are purged once disabled.
struct FifoQueue {
  struct Key {
    ActionId action;
    std::uint64_t uid;
    bool operator==(const Key&) const = default;
  };
  std::deque<Key> order;

  void refresh(const std::vector<ActionExecution>& enabled) {
    auto present = [&enabled](const Key& k) {
      for (const auto& e : enabled)
        if (e.action == k.action && e.msg_uid == k.uid) return true;
      return false;
    };
    std::deque<Key> kept;
    for (const Key& k : order)
      if (present(k)) kept.push_back(k);
    order.swap(kept);
    for (const auto& e : enabled) {
      Key k{e.action, e.msg_uid};
      bool seen = false;
      for (const Key& q : order)
        if (q == k) seen = true;
      if (!seen) order.push_back(k);
    }
  }

  int pick(const std::vector<ActionExecution>& pool) const {
    for (const Key& k : order)
      for (std::size_t i = 0; i < pool.size(); ++i)
        if (pool[i].action == k.action && pool[i].msg_uid == k.uid)
          return static_cast<int>(i);
    fault("fifo queue lost track of an enabled execution");
  }
};

// Picks the execution an activated node enacts. Messages that have waited
// b_msg stages are overdue and restrict the choice; within the pool,
// UniformRandom draws one index with one rng output, FifoQueue takes the
// earliest-enabled entry.
inline ActionExecution select_execution(const std::vector<ActionExecution>& execs,
                                        SelectionKind kind, FifoQueue* fifo, Rng& rng,
                                        std::int64_t stage, int b_msg) {
  require(!execs.empty(), "activated node has no enabled execution");
  std::vector<ActionExecution> pool;
  for (const auto& e : execs)
    if (e.has_message && stage - e.sent_stage >= b_msg) pool.push_back(e);
  const std::vector<ActionExecution>& from = pool.empty() ? execs : pool;
  switch (kind) {
    case SelectionKind::UniformRandom:
      return from[rng.below(from.size())];
    case SelectionKind::FifoQueue: {
      require(fifo != nullptr, "fifo policy needs queue state");
      fifo->refresh(execs);
      return from[static_cast<std::size_t>(fifo->pick(from))];
    }
  }
  fault("unknown selection policy");
}

// Read access to one simulation's full state, implemented by the live loop
// and by the trace replayer so observers work on both.
class SimView {
 public:
  virtual ~SimView() = default;
  virtual const Topology& topology() const = 0;
  virtual const TransitStore& transit() const = 0;
  virtual const DisconnectBuffers& detectors() const = 0;
  virtual const NodeVars& vars(NodeId u) const = 0;
  virtual std::int64_t stage() const = 0;
  virtual const RoundLedger& rounds() const = 0;
  virtual int k_range() const = 0;

  int node_count() const { return topology().node_count(); }
  int delta() const { return topology().delta(); }
};

// Hooks for the checker, the trace writer, and the workload driver.
class SimObserver {
 public:
  virtual ~SimObserver() = default;
  virtual void on_event(const SimEvent&) {}
  // Boundary state after dynamics and workload calls, before executions;
  // `enabled` is indexed by node.
  virtual void on_stage_start(const SimView&, const std::vector<std::vector<ActionExecution>>&) {}
  virtual void on_execution(const SimView&, NodeId, const ActionExecution&, const ActionEffect&) {}
  virtual void on_stage_end(const SimView&) {}
};

class Sim;

class WorkloadDriver {
 public:
  virtual ~WorkloadDriver() = default;
  virtual void at_boundary(Sim&) {}
  virtual void after_execution(Sim&, NodeId, const ActionExecution&, const ActionEffect&) {}
};

class Sim : public SimView {
 public:
  Sim(int n, int delta, int k_range, ActivationPolicy activation, SelectionPolicy selection,
      AdversaryPolicy adversary, int b_msg, std::uint64_t seed)
      : topo_(n, delta),
        transit_(n),
        detectors_(n),
        vars_(static_cast<std::size_t>(n)),
        pending_lock_(static_cast<std::size_t>(n), false),
        pending_unlock_(static_cast<std::size_t>(n), false),
        activation_(activation),
        selection_(selection),
        adversary_(adversary),
        k_range_(k_range),
        b_msg_(b_msg),
        rng_sched_(Rng::derive(seed, "sched")),
        rng_adv_(Rng::derive(seed, "adversary")),
        streak_(static_cast<std::size_t>(n), 0),
        fifo_(static_cast<std::size_t>(n)),
        executed_prev_(static_cast<std::size_t>(n), false),
        enabled_scratch_(static_cast<std::size_t>(n)) {
    require(k_range >= 1, "K must be >= 1");
    require(b_msg >= 1, "b_msg must be >= 1");
    require(activation.b_act >= 1, "b_act must be >= 1");
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      vars_[i] = new_node_vars(delta);
      rng_node_.push_back(Rng::derive(seed, "node", i));
    }
  }

  int k_range() const override { return k_range_; }
  int b_msg() const { return b_msg_; }
  const ActivationPolicy& activation() const { return activation_; }
  std::int64_t stage() const override { return stage_; }
  const Topology& topology() const override { return topo_; }
  Topology& topology() { return topo_; }
  const TransitStore& transit() const override { return transit_; }
  const DisconnectBuffers& detectors() const override { return detectors_; }
  const NodeVars& vars(NodeId u) const override { return vars_[static_cast<std::size_t>(u)]; }
  const RoundLedger& rounds() const override { return ledger_; }
  bool lock_pending(NodeId u) const { return pending_lock_[static_cast<std::size_t>(u)]; }
  bool unlock_pending(NodeId u) const { return pending_unlock_[static_cast<std::size_t>(u)]; }

  // Workload entry points; each records a trace event.
  void call_lock(NodeId u) {
    require(!pending_lock_[static_cast<std::size_t>(u)], "lock call already pending");
    pending_lock_[static_cast<std::size_t>(u)] = true;
    emit(SimEvent::workload(stage_, u, true));
  }
  void call_unlock(NodeId u) {
    require(!pending_unlock_[static_cast<std::size_t>(u)], "unlock call already pending");
    pending_unlock_[static_cast<std::size_t>(u)] = true;
    emit(SimEvent::workload(stage_, u, false));
  }

  // Deliverable inbox of node u: messages injected before this stage whose
  // carrying edge is live, plus the self-queue.
  std::vector<InboxEntry> inbox_of(NodeId u) const {
    std::vector<InboxEntry> in;
    const int n = topo_.node_count();
    for (NodeId from = 0; from < n; ++from) {
      const auto& ch = transit_.channel(from, u);
      if (ch.empty()) continue;
      Port p = from == u ? kSelfPort : topo_.port_at(u, from);
      if (from != u && p < 0) continue;  // dead edge; messages should be gone
      for (const TransitMsg& m : ch)
        if (m.sent_stage < stage_) in.push_back({m.msg, p, m.uid, m.sent_stage});
    }
    return in;
  }

  std::vector<ActionExecution> enabled_of(NodeId u) const {
    return enabled_action_executions(vars_[static_cast<std::size_t>(u)], inbox_of(u),
                                     detectors_.peek(u), pending_lock_[static_cast<std::size_t>(u)],
                                     pending_unlock_[static_cast<std::size_t>(u)]);
  }

  void run_stage(WorkloadDriver* workload, SimObserver* observer) {
    events_.clear();
    flushed_ = 0;

    // (1) Edge dynamics at the boundary.
    auto changes = adversary_step(topo_, transit_, detectors_, adversary_, rng_adv_, &vars_);
    for (const EdgeChange& ch : changes) emit(SimEvent::edge(stage_, ch));

    // (2) Workload calls.
    if (workload) workload->at_boundary(*this);

    // (3) Guards.
    for (NodeId u = 0; u < node_count(); ++u) enabled_scratch_[static_cast<std::size_t>(u)] = enabled_of(u);
    std::vector<bool> enabled_now(static_cast<std::size_t>(node_count()));
    for (NodeId u = 0; u < node_count(); ++u)
      enabled_now[static_cast<std::size_t>(u)] = !enabled_scratch_[static_cast<std::size_t>(u)].empty();

    // (4) Round accounting, then the stage record.
    if (stage_ == 0)
      ledger_.init(enabled_now, 0);
    else
      ledger_.advance(executed_prev_, enabled_now, stage_);
    emit(SimEvent::stage_boundary(stage_, ledger_.round()));

    flush_events(observer);
    if (observer) observer->on_stage_start(*this, enabled_scratch_);

    // (5) Activation.
    std::vector<NodeId> activated;
    for (NodeId u = 0; u < node_count(); ++u) {
      const std::size_t i = static_cast<std::size_t>(u);
      if (!enabled_now[i]) {
        streak_[i] = 0;
        continue;
      }
      bool forced = streak_[i] >= activation_.b_act - 1;
      bool act = false;
      switch (activation_.kind) {
        case ActivationKind::All:
          act = true;
          break;
        case ActivationKind::RandomSubset:
          act = rng_sched_.bernoulli(activation_.p) || forced;
          break;
        case ActivationKind::LazyAdversary:
          act = forced;
          break;
      }
      if (act) {
        activated.push_back(u);
        streak_[i] = 0;
      } else {
        ++streak_[i];
        require(streak_[i] < activation_.b_act, "fairness bound exceeded");
      }
    }

    // (6) Selection and execution. All executions read stage-start state:
    // a node's variables are written only by its own single execution, new
    // sends are stamped with this stage and become deliverable next stage,
    // and consumed messages are point-to-point so choices never collide.
    std::fill(executed_prev_.begin(), executed_prev_.end(), false);
    std::vector<std::pair<NodeId, ActionExecution>> chosen;
    for (NodeId u : activated) {
      const auto& execs = enabled_scratch_[static_cast<std::size_t>(u)];
      chosen.emplace_back(u, select_execution(execs, selection_.kind,
                                              &fifo_[static_cast<std::size_t>(u)], rng_sched_,
                                              stage_, b_msg_));
    }
    for (auto& [u, exec] : chosen) {
      const std::size_t i = static_cast<std::size_t>(u);
      if (exec.has_message) {
        NodeId from = exec.from_port == kSelfPort ? u : topo_.peer_on(u, exec.from_port);
        require(from >= 0, "message consumed from a dead port");
        transit_.consume(from, u, exec.msg_uid);
      }
      PortSet snapshot = detectors_.take(u);
      ActionEffect eff =
          apply_action(vars_[i], exec, snapshot, topo_.live_ports(u), k_range_,
                       priority_from_rng(rng_node_[i]));
      vars_[i] = eff.vars;
      check_node_invariants(vars_[i], delta());
      if (eff.lock_call_consumed) pending_lock_[i] = false;
      if (eff.unlock_call_consumed) pending_unlock_[i] = false;
      for (const Send& s : eff.sends) send_from(u, s);
      executed_prev_[i] = true;
      emit(make_action_event(stage_, u, exec, eff));
      if (observer) observer->on_execution(*this, u, exec, eff);
      if (workload) workload->after_execution(*this, u, exec, eff);
    }

    flush_events(observer);
    if (observer) observer->on_stage_end(*this);
    ++stage_;
  }

  const std::vector<SimEvent>& stage_events() const { return events_; }

 private:
  void send_from(NodeId u, const Send& s) {
    if (s.port == kSelfPort) {
      transit_.send(u, u, s.msg, stage_);
      return;
    }
    NodeId to = topo_.peer_on(u, s.port);
    require(to >= 0, "send on a dead port");
    transit_.send(u, to, s.msg, stage_);
  }

  void emit(const SimEvent& e) { events_.push_back(e); }

  void flush_events(SimObserver* observer) {
    if (observer)
      for (; flushed_ < events_.size(); ++flushed_) observer->on_event(events_[flushed_]);
    else
      flushed_ = events_.size();
  }

  Topology topo_;
  TransitStore transit_;
  DisconnectBuffers detectors_;
  std::vector<NodeVars> vars_;
  std::vector<bool> pending_lock_, pending_unlock_;
  ActivationPolicy activation_;
  SelectionPolicy selection_;
  AdversaryPolicy adversary_;
  int k_range_;
  int b_msg_;
  Rng rng_sched_, rng_adv_;
  std::vector<Rng> rng_node_;
  RoundLedger ledger_;
  std::vector<int> streak_;
  std::vector<FifoQueue> fifo_;
  std::vector<bool> executed_prev_;
  std::vector<std::vector<ActionExecution>> enabled_scratch_;
  std::vector<SimEvent> events_;
  std::size_t flushed_ = 0;
  std::int64_t stage_ = 0;
};

}  // namespace lmx

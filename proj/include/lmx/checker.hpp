#pragma once

// Online verification over the event stream: mutual exclusion of lock sets,
// lock-request success detection with persistent-neighbor semantics,
// competition-trial segmentation with open/closed round classification,
// dependency-DAG construction, and the structural invariants that must hold
// continuously (transit bound, enabled-execution bound, initiator-Check
// stability, progress tracking).
//
// The checker is a pure observer: violations and defects are reported as
// records, never thrown. It runs identically over the live loop and over a
// replayed trace.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lmx/scheduler.hpp"

namespace lmx {

struct TrialRecord {
  std::int64_t fanout_stage = -1;   // CheckStart or losing CheckWin execution
  std::int64_t resolve_stage = -1;  // the CheckWin ending this trial
  enum class Outcome : std::uint8_t { Pending, Won, Lost, Aborted } outcome = Outcome::Pending;
  bool open = true;     // no intended target was held by another node
  bool shrunk = false;  // the target set lost members mid-trial
  int dag_k = -1;       // initiators on the longest dependency path at start
  std::int64_t open_round_span = 0;
};

// Per-request bookkeeping from the InitLock execution to retirement.
struct LockRequestRecord {
  NodeId node = -1;
  std::int64_t call_stage = -1;     // workload issued the primitive call
  std::int64_t issue_stage = -1;    // InitLock executed; persistent set anchored
  std::vector<NodeId> persistent;   // shrinks monotonically, never regrows
  std::int64_t success_stage = -1;  // earliest boundary with L(u) = {u} + persistent
  std::int64_t done_stage = -1;     // CheckDone executed
  std::int64_t released_stage = -1; // InitUnlock executed
  std::vector<TrialRecord> trials;
  int win_trial_index = -1;
  std::int64_t open_rounds = 0, closed_rounds = 0, total_rounds = 0;
  int last_target_size = 0;
  bool latch_checked = false;
  bool retired = false;

  bool is_persistent(NodeId v) const {
    return std::find(persistent.begin(), persistent.end(), v) != persistent.end();
  }
};

struct CheckerReport {
  std::int64_t stage = 0;
  std::string what;
};

struct DagNode {
  NodeId node = -1;
  bool initiator = false;
};

// The dependency DAG at one stage boundary: competing initiators on one
// side, their intended participants on the other, edges tracking who owes
// whom the next request-lock or win message.
struct DependencyDag {
  int n = 0;
  std::vector<bool> is_initiator;                 // per node
  std::vector<bool> is_participant;               // per node
  std::vector<std::vector<int>> out;              // vertex -> vertices, 2n of them
  bool acyclic = true;

  int initiator_vertex(NodeId u) const { return u; }
  int participant_vertex(NodeId u) const { return n + u; }

  int edge_count() const {
    int e = 0;
    for (const auto& v : out) e += static_cast<int>(v.size());
    return e;
  }
};

class Checker : public SimObserver {
 public:
  // `sink` may be null; defect and violation records also accumulate here.
  explicit Checker(int n, int delta, TraceSink* sink = nullptr)
      : n_(n),
        delta_(delta),
        sink_(sink),
        active_(static_cast<std::size_t>(n)),
        prev_slot_(static_cast<std::size_t>(n), std::optional<ActionId>{}),
        slot_executed_(static_cast<std::size_t>(n), false),
        tracked_(static_cast<std::size_t>(n)),
        requests_sent_(static_cast<std::size_t>(n) * n, 0),
        wins_sent_(static_cast<std::size_t>(n) * n, 0) {}

  // ---- observer interface -------------------------------------------------

  void on_event(const SimEvent& e) override {
    if (e.kind == EventKind::Edge && !e.connected) {
      // a severed edge removes the peer from any persistent set and resets
      // the pair's conversation counters
      drop_persistent(e.u, e.v);
      drop_persistent(e.v, e.u);
      reset_pair(e.u, e.v);
    } else if (e.kind == EventKind::Workload && e.lock_call) {
      pending_call_stage_[e.node] = e.stage;
    }
  }

  void on_stage_start(const SimView& sim, const std::vector<std::vector<ActionExecution>>& enabled) override {
    cur_stage_ = sim.stage();
    check_lock_sets(sim);
    check_enabled_bounds(sim, enabled);
    check_slot_stability(sim, enabled);
    track_progress(sim, enabled);
    dag_ = build_dag(sim);
    // Message-obligation cycles come and go while judgments are in flight;
    // only a cycle that persists marks a stuck system.
    if (!dag_.acyclic) {
      ++cyclic_boundaries_;
      ++cyclic_streak_;
      max_cyclic_streak_ = std::max(max_cyclic_streak_, cyclic_streak_);
      if (cyclic_streak_ == cycle_persistence_limit_)
        violation(sim.stage(), "dependency cycle persists; system is stuck");
    } else {
      cyclic_streak_ = 0;
    }
    assign_trial_k(sim);
    update_trial_openness(sim);
    detect_success(sim);
  }

  void on_execution(const SimView& sim, NodeId u, const ActionExecution& exec,
                    const ActionEffect& eff) override {
    resolve_tracked(sim, u, exec);
    count_pair_messages(sim, u, eff);
    if (!exec.has_message) slot_executed_[static_cast<std::size_t>(u)] = true;

    LockRequestRecord* rec = active_[static_cast<std::size_t>(u)] ? &*active_[static_cast<std::size_t>(u)] : nullptr;
    switch (exec.action) {
      case ActionId::InitLock: {
        if (rec) report(sim.stage(), "init-lock while a request record is active");
        LockRequestRecord r;
        r.node = u;
        r.call_stage = pending_call_stage_.count(u) ? pending_call_stage_[u] : sim.stage();
        pending_call_stage_.erase(u);
        r.issue_stage = sim.stage();
        for (Port p : eff.vars.targets) {
          NodeId v = sim.topology().peer_on(u, p);
          if (v >= 0) r.persistent.push_back(v);
        }
        std::sort(r.persistent.begin(), r.persistent.end());
        r.last_target_size = static_cast<int>(eff.vars.targets.size());
        active_[static_cast<std::size_t>(u)] = std::move(r);
        break;
      }
      case ActionId::CheckStart: {
        if (!rec) { report(sim.stage(), "check-start without an active request"); break; }
        if (!rec->trials.empty() && rec->trials.back().outcome == TrialRecord::Outcome::Pending)
          report(sim.stage(), "check-start with an unresolved trial");
        open_trial(*rec, sim.stage());
        break;
      }
      case ActionId::CheckWin: {
        if (!rec || rec->trials.empty() ||
            rec->trials.back().outcome != TrialRecord::Outcome::Pending) {
          report(sim.stage(), "check-win without a pending trial");
          break;
        }
        TrialRecord& t = rec->trials.back();
        t.resolve_stage = sim.stage();
        t.open_round_span = sim.rounds().round_of_stage(sim.stage()) -
                            sim.rounds().round_of_stage(t.fanout_stage) + 1;
        const bool lost = eff.drawn_priority >= 0;
        t.outcome = lost ? TrialRecord::Outcome::Lost : TrialRecord::Outcome::Won;
        if (lost) {
          open_trial(*rec, sim.stage());
        } else {
          rec->win_trial_index = static_cast<int>(rec->trials.size()) - 1;
        }
        break;
      }
      case ActionId::CheckDone: {
        if (!rec) { report(sim.stage(), "check-done without an active request"); break; }
        rec->done_stage = sim.stage();
        cross_check_done(sim, u, *rec, eff);
        break;
      }
      case ActionId::InitUnlock: {
        if (!rec || rec->done_stage < 0)
          report(sim.stage(), "init-unlock without a completed lock");
        else
          rec->released_stage = sim.stage();
        break;
      }
      case ActionId::CheckUnlocked: {
        if (rec) retire(sim, *rec);
        active_[static_cast<std::size_t>(u)].reset();
        break;
      }
      default:
        break;
    }

    // cleanup inside this execution may have dropped targets
    rec = active_[static_cast<std::size_t>(u)] ? &*active_[static_cast<std::size_t>(u)] : nullptr;
    if (rec && exec.action != ActionId::InitLock) {
      if (!rec->trials.empty() && rec->trials.back().outcome == TrialRecord::Outcome::Pending &&
          static_cast<int>(eff.vars.targets.size()) < rec->last_target_size)
        rec->trials.back().shrunk = true;
      rec->last_target_size = static_cast<int>(eff.vars.targets.size());
    }
  }



  // Run-end bookkeeping: abort pending trials, flag requests whose lock
  // never completed. A granted request cut off mid-unlock still counts as
  // complete.
  void finish(const SimView& sim) {
    for (NodeId u = 0; u < n_; ++u) {
      auto& slot = active_[static_cast<std::size_t>(u)];
      if (!slot) continue;
      if (!slot->trials.empty() && slot->trials.back().outcome == TrialRecord::Outcome::Pending)
        slot->trials.back().outcome = TrialRecord::Outcome::Aborted;
      retire(sim, *slot, /*incomplete=*/slot->done_stage < 0);
      slot.reset();
    }
  }

  // ---- results -------------------------------------------------------------

  const std::vector<LockRequestRecord>& completed() const { return completed_; }
  const std::vector<CheckerReport>& violations() const { return violations_; }
  const std::vector<CheckerReport>& defects() const { return defects_; }
  std::int64_t incomplete_requests() const { return incomplete_requests_; }
  const DependencyDag& last_dag() const { return dag_; }

  double progress_mean_rounds() const {
    return progress_samples_ ? static_cast<double>(progress_round_sum_) / progress_samples_ : 0.0;
  }
  std::int64_t progress_samples() const { return progress_samples_; }
  int max_enabled_seen() const { return max_enabled_seen_; }
  std::int64_t cyclic_boundaries() const { return cyclic_boundaries_; }
  std::int64_t max_cyclic_streak() const { return max_cyclic_streak_; }
  void set_cycle_persistence_limit(std::int64_t v) { cycle_persistence_limit_ = v; }

  // Effective lock of node v: the stored variable unless it refers to a
  // port severed since v last acted, which v's next CleanUp will clear. A
  // stale label can alias a reconnected edge, so the raw value is not
  // meaningful until reconciled.
  static Lock effective_lock(const SimView& sim, NodeId v) {
    Lock l = sim.vars(v).lock;
    if (l.is_held() && !l.is_self() && sim.detectors().peek(v).contains(l.port()))
      return Lock::unlocked();
    return l;
  }

  // Lock holder of node v under the effective view: v itself, a neighbor,
  // or none.
  static NodeId holder_of(const SimView& sim, NodeId v) {
    Lock l = effective_lock(sim, v);
    if (!l.is_held()) return -1;
    if (l.is_self()) return v;
    return sim.topology().peer_on(v, l.port());
  }

  DependencyDag build_dag(const SimView& sim) const {
    DependencyDag d;
    d.n = sim.node_count();
    d.is_initiator.assign(static_cast<std::size_t>(d.n), false);
    d.is_participant.assign(static_cast<std::size_t>(d.n), false);
    d.out.assign(static_cast<std::size_t>(2 * d.n), {});
    for (NodeId u = 0; u < d.n; ++u) {
      if (sim.vars(u).state != NodeState::Compete) continue;
      d.is_initiator[static_cast<std::size_t>(u)] = true;
      for (Port p : sim.vars(u).targets) {
        NodeId v = sim.topology().peer_on(u, p);
        if (v < 0) continue;
        d.is_participant[static_cast<std::size_t>(v)] = true;
        const int req = requests_sent_[pair_index(u, v)];
        const int win = wins_sent_[pair_index(v, u)];
        if (req > win)
          d.out[static_cast<std::size_t>(d.initiator_vertex(u))].push_back(d.participant_vertex(v));
        else if (win >= 1)
          d.out[static_cast<std::size_t>(d.participant_vertex(v))].push_back(d.initiator_vertex(u));
      }
    }
    // Kahn's algorithm for the acyclicity assertion
    std::vector<int> indeg(static_cast<std::size_t>(2 * d.n), 0);
    for (const auto& adj : d.out)
      for (int w : adj) ++indeg[static_cast<std::size_t>(w)];
    std::vector<int> q;
    for (int v = 0; v < 2 * d.n; ++v)
      if (indeg[static_cast<std::size_t>(v)] == 0) q.push_back(v);
    std::size_t seen = 0;
    while (!q.empty()) {
      int v = q.back();
      q.pop_back();
      ++seen;
      for (int w : d.out[static_cast<std::size_t>(v)])
        if (--indeg[static_cast<std::size_t>(w)] == 0) q.push_back(w);
    }
    d.acyclic = seen == static_cast<std::size_t>(2 * d.n);
    return d;
  }

  // Initiators along the longest dependency path from initiator u, and the
  // bipartite-alternation check height <= 2k.
  int initiators_on_longest_path(const DependencyDag& d, NodeId u) const {
    if (!d.acyclic) return -1;
    std::vector<int> memo_init(static_cast<std::size_t>(2 * d.n), -1);
    std::vector<int> memo_len(static_cast<std::size_t>(2 * d.n), -1);
    longest_path(d, d.initiator_vertex(u), memo_init, memo_len);
    int k = memo_init[static_cast<std::size_t>(d.initiator_vertex(u))];
    int len = memo_len[static_cast<std::size_t>(d.initiator_vertex(u))];
    if (len > 2 * k)
      violations_.push_back({cur_stage_, "dag height exceeds twice the initiator count"});
    return k;
  }

 private:
  void longest_path(const DependencyDag& d, int v, std::vector<int>& memo_init,
                    std::vector<int>& memo_len) const {
    if (memo_init[static_cast<std::size_t>(v)] >= 0) return;
    int own = v < d.n ? 1 : 0;
    int best_init = 0, best_len = 0;
    for (int w : d.out[static_cast<std::size_t>(v)]) {
      longest_path(d, w, memo_init, memo_len);
      best_init = std::max(best_init, memo_init[static_cast<std::size_t>(w)]);
      best_len = std::max(best_len, memo_len[static_cast<std::size_t>(w)]);
    }
    memo_init[static_cast<std::size_t>(v)] = own + best_init;
    memo_len[static_cast<std::size_t>(v)] = 1 + best_len;
  }

  std::size_t pair_index(NodeId a, NodeId b) const {
    return static_cast<std::size_t>(a) * n_ + static_cast<std::size_t>(b);
  }

  void reset_pair(NodeId a, NodeId b) {
    requests_sent_[pair_index(a, b)] = 0;
    requests_sent_[pair_index(b, a)] = 0;
    wins_sent_[pair_index(a, b)] = 0;
    wins_sent_[pair_index(b, a)] = 0;
  }

  void drop_persistent(NodeId u, NodeId gone) {
    auto& slot = active_[static_cast<std::size_t>(u)];
    if (!slot) return;
    auto& p = slot->persistent;
    p.erase(std::remove(p.begin(), p.end(), gone), p.end());
  }

  void count_pair_messages(const SimView& sim, NodeId u, const ActionEffect& eff) {
    for (const Send& s : eff.sends) {
      NodeId to = s.port == kSelfPort ? u : sim.topology().peer_on(u, s.port);
      if (to < 0) continue;
      if (s.msg.kind == MsgKind::RequestLock) {
        int& req = requests_sent_[pair_index(u, to)];
        ++req;
        if (req != wins_sent_[pair_index(to, u)] + 1)
          report(sim.stage(), "request-lock / win alternation broken");
      } else if (s.msg.kind == MsgKind::Win) {
        int& win = wins_sent_[pair_index(u, to)];
        ++win;
        if (win != requests_sent_[pair_index(to, u)])
          report(sim.stage(), "win sent without a matching request-lock");
      }
    }
  }

  // ---- boundary checks ------------------------------------------------------

  void check_lock_sets(const SimView& sim) {
    // lock sets are pairwise disjoint iff no node is claimed twice; with a
    // single lock variable per node this verifies the holder mapping
    lockset_scratch_.assign(static_cast<std::size_t>(n_), -1);
    for (NodeId v = 0; v < n_; ++v) {
      NodeId h = holder_of(sim, v);
      if (h < 0) continue;
      Lock l = effective_lock(sim, v);
      if (!l.is_self() && sim.topology().peer_on(v, l.port()) < 0)
        report(sim.stage(), "effective lock points at a dead port");
      if (lockset_scratch_[static_cast<std::size_t>(v)] >= 0)
        violation(sim.stage(), "lock sets intersect");
      lockset_scratch_[static_cast<std::size_t>(v)] = h;
    }
  }

  void check_enabled_bounds(const SimView& sim, const std::vector<std::vector<ActionExecution>>& enabled) {
    const int bound = 2 * sim.delta() + 4;
    for (NodeId u = 0; u < n_; ++u) {
      const auto& e = enabled[static_cast<std::size_t>(u)];
      max_enabled_seen_ = std::max(max_enabled_seen_, static_cast<int>(e.size()));
      if (static_cast<int>(e.size()) > bound)
        violation(sim.stage(), "more than 2*delta+4 enabled action executions");
      int slot = 0;
      for (const auto& x : e)
        if (!x.has_message && x.action != ActionId::CheckPriorities) ++slot;
      if (slot > 1) violation(sim.stage(), "two initiator-slot actions enabled at once");
    }
  }

  void check_slot_stability(const SimView& sim, const std::vector<std::vector<ActionExecution>>& enabled) {
    for (NodeId u = 0; u < n_; ++u) {
      std::optional<ActionId> cur;
      for (const auto& x : enabled[static_cast<std::size_t>(u)])
        if (!x.has_message && x.action != ActionId::CheckPriorities) cur = x.action;
      auto& prev = prev_slot_[static_cast<std::size_t>(u)];
      if (prev && !slot_executed_[static_cast<std::size_t>(u)] && cur != prev)
        violation(sim.stage(), "enabled initiator action was disabled before executing");
      prev = cur;
      slot_executed_[static_cast<std::size_t>(u)] = false;
    }
  }

  // Progress per the fairness analysis: every enabled action execution is
  // executed or disabled within 2*delta+4 rounds of becoming enabled, in
  // expectation. Tracked per (action, message) key.
  void track_progress(const SimView& sim, const std::vector<std::vector<ActionExecution>>& enabled) {
    const std::int64_t round = sim.rounds().round();
    for (NodeId u = 0; u < n_; ++u) {
      auto& book = tracked_[static_cast<std::size_t>(u)];
      const auto& execs = enabled[static_cast<std::size_t>(u)];
      for (auto it = book.begin(); it != book.end();) {
        bool still = false;
        for (const auto& x : execs)
          if (x.action == it->action && x.msg_uid == it->uid) still = true;
        if (!still) {
          progress_round_sum_ += round - it->first_round;
          ++progress_samples_;
          it = book.erase(it);
        } else {
          ++it;
        }
      }
      for (const auto& x : execs) {
        bool known = false;
        for (const auto& t : book)
          if (t.action == x.action && t.uid == x.msg_uid) known = true;
        if (!known) book.push_back({x.action, x.msg_uid, round});
      }
    }
  }

  void resolve_tracked(const SimView& sim, NodeId u, const ActionExecution& exec) {
    auto& book = tracked_[static_cast<std::size_t>(u)];
    for (auto it = book.begin(); it != book.end(); ++it) {
      if (it->action == exec.action && it->uid == exec.msg_uid) {
        progress_round_sum_ += sim.rounds().round() - it->first_round;
        ++progress_samples_;
        book.erase(it);
        return;
      }
    }
  }

  void open_trial(LockRequestRecord& rec, std::int64_t stage) {
    TrialRecord t;
    t.fanout_stage = stage;
    rec.trials.push_back(t);
    k_pending_.push_back(rec.node);
  }

  void assign_trial_k(const SimView&) {
    for (NodeId u : k_pending_) {
      auto& slot = active_[static_cast<std::size_t>(u)];
      if (!slot || slot->trials.empty()) continue;
      TrialRecord& t = slot->trials.back();
      if (t.dag_k >= 0 || t.outcome != TrialRecord::Outcome::Pending) continue;
      if (dag_.is_initiator[static_cast<std::size_t>(u)])
        t.dag_k = initiators_on_longest_path(dag_, u);
    }
    k_pending_.clear();
  }

  void update_trial_openness(const SimView& sim) {
    for (NodeId u = 0; u < n_; ++u) {
      auto& slot = active_[static_cast<std::size_t>(u)];
      if (!slot || slot->trials.empty()) continue;
      TrialRecord& t = slot->trials.back();
      if (t.outcome != TrialRecord::Outcome::Pending) continue;
      // the intended lock set covers the initiator itself plus its targets
      NodeId self_holder = holder_of(sim, u);
      if (self_holder == u)
        report(sim.stage(), "initiator self-locked before its trial ended");
      else if (self_holder >= 0)
        t.open = false;
      for (Port p : sim.vars(u).targets) {
        NodeId m = sim.topology().peer_on(u, p);
        if (m < 0) continue;
        NodeId h = holder_of(sim, m);
        if (h < 0) continue;
        if (h == u) {
          report(sim.stage(), "target locked by the initiator before its trial ended");
        } else {
          t.open = false;
        }
      }
    }
  }

  // The lock request of u succeeds at the first boundary where u's lock set
  // is exactly itself plus its persistent neighbors.
  void detect_success(const SimView& sim) {
    for (NodeId u = 0; u < n_; ++u) {
      auto& slot = active_[static_cast<std::size_t>(u)];
      if (!slot || slot->success_stage >= 0) continue;
      // members claimed by u under the effective view
      bool self_in = holder_of(sim, u) == u && effective_lock(sim, u).is_self();
      if (!self_in) {
        check_done_latch(sim, *slot);
        continue;
      }
      std::size_t claimed = 0;
      bool exact = true;
      for (NodeId v = 0; v < n_; ++v) {
        if (v == u) continue;
        if (holder_of(sim, v) == u) {
          if (slot->is_persistent(v))
            ++claimed;
          else
            exact = false;  // an extra member blocks the equality
        }
      }
      if (exact && claimed == slot->persistent.size()) slot->success_stage = sim.stage();
      check_done_latch(sim, *slot);
    }
  }

  void check_done_latch(const SimView& sim, LockRequestRecord& rec) {
    // semantic success must latch by the boundary after CheckDone
    if (rec.done_stage >= 0 && rec.success_stage < 0 && sim.stage() > rec.done_stage &&
        !rec.latch_checked) {
      rec.latch_checked = true;
      report(sim.stage(), "check-done completed but the lock-set equality never latched");
    }
  }

  void cross_check_done(const SimView& sim, NodeId u, LockRequestRecord& rec,
                        const ActionEffect& eff) {
    // the lock set at completion is the node itself plus exactly the
    // persistent neighbors
    std::vector<NodeId> returned;
    for (Port p : eff.returned_lock_set) {
      NodeId v = sim.topology().peer_on(u, p);
      if (v >= 0) returned.push_back(v);
    }
    std::sort(returned.begin(), returned.end());
    if (!eff.vars.lock.is_self() || returned != rec.persistent)
      report(sim.stage(), "check-done state disagrees with the persistent set");
  }

  void retire(const SimView& sim, LockRequestRecord& rec, bool incomplete = false) {
    if (rec.done_stage < 0 || incomplete) ++incomplete_requests_;
    finalize_rounds(sim, rec);
    rec.retired = true;
    completed_.push_back(rec);
  }

  // Rounds spanned by [issue, done); a round is closed iff its overlap with
  // the request lies entirely inside closed-trial stage intervals.
  void finalize_rounds(const SimView& sim, LockRequestRecord& rec) {
    const std::int64_t end_stage = rec.done_stage >= 0 ? rec.done_stage : sim.stage();
    if (end_stage <= rec.issue_stage || rec.issue_stage < 0) return;
    const RoundLedger& led = sim.rounds();
    std::vector<std::pair<std::int64_t, std::int64_t>> closed;
    for (const TrialRecord& t : rec.trials)
      if (!t.open) {
        std::int64_t hi = t.resolve_stage >= 0 ? t.resolve_stage : end_stage;
        closed.emplace_back(t.fanout_stage, hi);
      }
    const std::int64_t r_first = led.round_of_stage(rec.issue_stage);
    const std::int64_t r_last = led.round_of_stage(end_stage - 1);
    rec.total_rounds = r_last - r_first + 1;
    for (std::int64_t r = r_first; r <= r_last; ++r) {
      std::int64_t lo = std::max(led.round_start(r), rec.issue_stage);
      std::int64_t hi = std::min(
          r + 1 < static_cast<std::int64_t>(led.start_stages().size()) ? led.round_start(r + 1)
                                                                        : end_stage,
          end_stage);
      bool covered = lo < hi;
      for (std::int64_t s = lo; s < hi && covered; ++s) {
        bool in_closed = false;
        for (const auto& [a, b] : closed)
          if (s >= a && s < b) in_closed = true;
        if (!in_closed) covered = false;
      }
      if (covered)
        ++rec.closed_rounds;
      else
        ++rec.open_rounds;
    }
  }

  void report(std::int64_t stage, std::string what) {
    defects_.push_back({stage, what});
    if (sink_) sink_->on_event(SimEvent::defect(stage, "defect: " + what));
  }

  void violation(std::int64_t stage, std::string what) {
    violations_.push_back({stage, what});
    if (sink_) sink_->on_event(SimEvent::defect(stage, "violation: " + what));
  }

  struct Tracked {
    ActionId action;
    std::uint64_t uid;
    std::int64_t first_round;
  };

  int n_, delta_;
  TraceSink* sink_;
  std::vector<std::optional<LockRequestRecord>> active_;
  std::vector<LockRequestRecord> completed_;
  std::vector<std::optional<ActionId>> prev_slot_;
  std::vector<bool> slot_executed_;
  std::vector<std::vector<Tracked>> tracked_;
  std::vector<int> requests_sent_, wins_sent_;  // ordered node pairs
  std::vector<NodeId> k_pending_;
  std::vector<NodeId> lockset_scratch_;
  std::map<NodeId, std::int64_t> pending_call_stage_;
  DependencyDag dag_;
  mutable std::vector<CheckerReport> violations_;
  std::vector<CheckerReport> defects_;
  std::int64_t cur_stage_ = 0;
  std::int64_t cyclic_boundaries_ = 0;
  std::int64_t cyclic_streak_ = 0;
  std::int64_t max_cyclic_streak_ = 0;
  std::int64_t cycle_persistence_limit_ = 500;
  std::int64_t progress_round_sum_ = 0;
  std::int64_t progress_samples_ = 0;
  std::int64_t incomplete_requests_ = 0;
  int max_enabled_seen_ = 0;
};

}  // namespace lmx

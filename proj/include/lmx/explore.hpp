#pragma once

// Bounded exhaustive exploration of tiny instances: breadth-first over all
// activation subsets, all action-execution choices, all delivery choices,
// and all priority values, up to a stage-depth bound. Every reached state
// is checked for mutual exclusion and the structural invariants. This is
// the ground truth the sampled simulator is compared against; it runs the
// exact same transition functions.
//
// Message ages are abstracted away (the delivery adversary is unrestricted
// here, strictly stronger than any finite delay bound), and the one
// supported dynamics event is a scripted disconnect triggered the first
// time a chosen node starts competing, which keeps expansion independent
// of depth so states can be deduplicated across levels.

#include <algorithm>
#include <cstdint>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "lmx/config.hpp"
#include "lmx/protocol.hpp"

namespace lmx {

struct ExploreConfig {
  int nodes = 2;
  int delta = 1;
  double c = 2.0;  // K = c * delta^2
  InitialTopology topology = InitialTopology::Complete;
  int depth_max = 14;
  std::int64_t state_budget = 4000000;
  std::vector<NodeId> requesters;  // nodes with an initial Lock call; empty = all
  bool unlock_after = true;        // follow a completed lock with Unlock

  // scripted dynamics: sever {script_u, script_v} at the first boundary
  // where script_watch is competing
  NodeId script_u = -1, script_v = -1, script_watch = -1;

  int k_range() const {
    return std::max<int>(1, static_cast<int>(std::llround(c * delta * delta)));
  }
  bool has_script() const { return script_u >= 0; }
};

struct ExploreResult {
  bool complete = false;         // full bounded space visited
  bool budget_exceeded = false;  // stopped early: partial coverage
  std::int64_t states_visited = 0;
  std::int64_t transitions = 0;
  int depth_reached = 0;
  std::int64_t locked_states = 0;    // states where some request has completed
  std::int64_t terminal_states = 0;  // quiescent states with all work done
  std::vector<std::string> violations;
  std::vector<std::string> counterexample;  // stage decisions to first violation
};

namespace detail_explore {

struct ExploreState {
  std::vector<NodeVars> vars;
  std::vector<std::vector<Message>> channels;  // ordered pair (from * n + to)
  std::vector<PortSet> detectors;
  std::vector<bool> pending_lock, pending_unlock;
  bool script_done = false;
};

inline std::string encode(const ExploreState& s, int n, int delta) {
  std::string out;
  out.reserve(static_cast<std::size_t>(n) * (16 + 2 * (delta + 2)) +
              s.channels.size() * 5 + 2);
  auto byte = [&out](int v) { out.push_back(static_cast<char>(v & 0xff)); };
  for (int u = 0; u < n; ++u) {
    const NodeVars& v = s.vars[static_cast<std::size_t>(u)];
    byte(v.lock.raw() + 1);
    byte(static_cast<int>(v.state));
    byte(static_cast<int>(v.phase));
    byte(v.awarded + 1);
    byte(static_cast<int>(v.targets.raw()));
    byte(static_cast<int>(v.replies.raw()));
    byte(static_cast<int>(v.on_hold.raw()));
    byte(static_cast<int>(v.applicants.raw()));
    byte(static_cast<int>(v.candidates.raw()));
    int vp = 0, vv = 0;
    for (const auto& [port, won] : v.verdicts) {
      vp |= 1 << port;
      if (won) vv |= 1 << port;
    }
    byte(vp);
    byte(vv);
    for (Port p = 0; p <= delta; ++p) {
      const int* pr = v.priorities.find(p);
      byte(pr ? *pr + 1 : 0);
    }
    byte((s.pending_lock[static_cast<std::size_t>(u)] ? 1 : 0) |
         (s.pending_unlock[static_cast<std::size_t>(u)] ? 2 : 0));
    byte(static_cast<int>(s.detectors[static_cast<std::size_t>(u)].raw()));
  }
  byte(s.script_done ? 1 : 0);
  for (const auto& ch : s.channels) {
    byte(static_cast<int>(ch.size()));
    for (const Message& m : ch) {
      byte(static_cast<int>(m.kind));
      byte(m.kind == MsgKind::RequestLock ? m.priority + 1
           : m.kind == MsgKind::Win       ? (m.verdict ? 2 : 1)
                                          : 0);
    }
  }
  return out;
}

// Canonical channel order so identical multisets encode identically.
inline void canonicalize(ExploreState& s) {
  for (auto& ch : s.channels)
    std::sort(ch.begin(), ch.end(), [](const Message& a, const Message& b) {
      if (a.kind != b.kind) return a.kind < b.kind;
      if (a.priority != b.priority) return a.priority < b.priority;
      return a.verdict < b.verdict;
    });
}

}  // namespace detail_explore

class Explorer {
 public:
  explicit Explorer(const ExploreConfig& cfg)
      : cfg_(cfg), topo_before_(cfg.nodes, cfg.delta), topo_after_(cfg.nodes, cfg.delta) {
    RunConfig topo_cfg;
    topo_cfg.nodes = cfg.nodes;
    topo_cfg.delta = cfg.delta;
    topo_cfg.topology = cfg.topology;
    build_initial_topology(topo_before_, topo_cfg);
    build_initial_topology(topo_after_, topo_cfg);
    if (cfg.has_script()) {
      require(topo_after_.live(cfg.script_u, cfg.script_v), "scripted edge not live");
      topo_after_.disconnect(cfg.script_u, cfg.script_v);
    }
  }

  ExploreResult run() {
    using detail_explore::ExploreState;
    ExploreResult res;
    ExploreState init = initial_state();
    detail_explore::canonicalize(init);
    push_state(init, -1, "init");
    std::size_t level_begin = 0, level_end = states_.size();
    for (int depth = 0; depth < cfg_.depth_max && !stop_; ++depth) {
      res.depth_reached = depth;
      for (std::size_t i = level_begin; i < level_end && !stop_; ++i) expand(i);
      level_begin = level_end;
      level_end = states_.size();
      if (level_begin == level_end) break;  // closed under transitions
    }
    res.states_visited = static_cast<std::int64_t>(states_.size());
    res.transitions = transitions_;
    res.locked_states = locked_states_;
    res.terminal_states = terminal_states_;
    res.budget_exceeded = budget_exceeded_;
    res.complete = !budget_exceeded_ && res.violations.empty();
    res.violations = violations_;
    if (!violations_.empty()) res.counterexample = unwind(first_violation_state_);
    return res;
  }

  // Visited encodings, for cross-checking sampled runs against the space.
  const std::unordered_map<std::string, std::int64_t>& visited() const { return index_; }

  detail_explore::ExploreState initial_state() const {
    detail_explore::ExploreState s;
    s.vars.assign(static_cast<std::size_t>(cfg_.nodes), new_node_vars(cfg_.delta));
    s.channels.assign(static_cast<std::size_t>(cfg_.nodes) * cfg_.nodes, {});
    s.detectors.assign(static_cast<std::size_t>(cfg_.nodes), {});
    s.pending_lock.assign(static_cast<std::size_t>(cfg_.nodes), cfg_.requesters.empty());
    s.pending_unlock.assign(static_cast<std::size_t>(cfg_.nodes), false);
    for (NodeId u : cfg_.requesters) s.pending_lock[static_cast<std::size_t>(u)] = true;
    return s;
  }

  const Topology& topology_of(const detail_explore::ExploreState& s) const {
    return s.script_done ? topo_after_ : topo_before_;
  }

 private:
  using ExploreState = detail_explore::ExploreState;

  void push_state(const ExploreState& s, std::int64_t parent, std::string how) {
    if (static_cast<std::int64_t>(states_.size()) >= cfg_.state_budget) {
      budget_exceeded_ = true;
      stop_ = true;
      return;
    }
    std::string enc = detail_explore::encode(s, cfg_.nodes, cfg_.delta);
    auto [it, fresh] = index_.try_emplace(std::move(enc), static_cast<std::int64_t>(states_.size()));
    if (!fresh) return;
    states_.push_back(&it->first);  // key storage is stable
    parents_.push_back(parent);
    how_.push_back(std::move(how));
  }

  ExploreState decode(const std::string& enc) const {
    ExploreState s;
    std::size_t pos = 0;
    auto byte = [&enc, &pos]() { return static_cast<unsigned char>(enc[pos++]); };
    const int n = cfg_.nodes;
    s.vars.resize(static_cast<std::size_t>(n));
    s.detectors.resize(static_cast<std::size_t>(n));
    s.pending_lock.resize(static_cast<std::size_t>(n));
    s.pending_unlock.resize(static_cast<std::size_t>(n));
    for (int u = 0; u < n; ++u) {
      NodeVars& v = s.vars[static_cast<std::size_t>(u)];
      int lock = static_cast<int>(byte()) - 1;
      v.lock = lock < 0 ? Lock::unlocked() : Lock::by(lock);
      v.state = static_cast<NodeState>(byte());
      v.phase = static_cast<Phase>(byte());
      v.awarded = static_cast<int>(byte()) - 1;
      v.targets = PortSet::from_raw(byte());
      v.replies = PortSet::from_raw(byte());
      v.on_hold = PortSet::from_raw(byte());
      v.applicants = PortSet::from_raw(byte());
      v.candidates = PortSet::from_raw(byte());
      int vp = byte(), vv = byte();
      for (Port p = 0; p <= cfg_.delta; ++p)
        if (vp & (1 << p)) v.verdicts.put(p, (vv & (1 << p)) != 0);
      for (Port p = 0; p <= cfg_.delta; ++p) {
        int pr = byte();
        if (pr) v.priorities.put(p, pr - 1);
      }
      int flags = byte();
      s.pending_lock[static_cast<std::size_t>(u)] = flags & 1;
      s.pending_unlock[static_cast<std::size_t>(u)] = flags & 2;
      s.detectors[static_cast<std::size_t>(u)] = PortSet::from_raw(byte());
    }
    s.script_done = byte() != 0;
    s.channels.resize(static_cast<std::size_t>(n) * n);
    for (auto& ch : s.channels) {
      int count = byte();
      for (int i = 0; i < count; ++i) {
        int kind = byte(), payload = byte();
        Message m;
        m.kind = static_cast<MsgKind>(kind);
        if (m.kind == MsgKind::RequestLock)
          m.priority = payload - 1;
        else if (m.kind == MsgKind::Win)
          m.verdict = payload == 2;
        ch.push_back(m);
      }
    }
    return s;
  }

  void expand(std::size_t index) {
    ExploreState s = decode(*states_[index]);
    expand_state(s, static_cast<std::int64_t>(index));
  }

  void expand_state(ExploreState& s, std::int64_t parent) {
    // scripted dynamics at the boundary
    if (cfg_.has_script() && !s.script_done &&
        s.vars[static_cast<std::size_t>(cfg_.script_watch)].state == NodeState::Compete) {
      apply_script(s);
      check_state(s, parent, "scripted disconnect");
    }
    const Topology& topo = topology_of(s);
    const int n = cfg_.nodes;

    // enabled executions per node
    std::vector<std::vector<ActionExecution>> enabled(static_cast<std::size_t>(n));
    std::vector<NodeId> enabled_nodes;
    for (NodeId u = 0; u < n; ++u) {
      std::vector<InboxEntry> inbox;
      for (NodeId from = 0; from < n; ++from) {
        const auto& ch = s.channels[static_cast<std::size_t>(from) * n + u];
        if (ch.empty()) continue;
        Port p = from == u ? kSelfPort : topo.port_at(u, from);
        if (from != u && p < 0) continue;
        for (std::size_t mi = 0; mi < ch.size(); ++mi)
          inbox.push_back({ch[mi], p, pack_uid(from, u, mi), 0});
      }
      enabled[static_cast<std::size_t>(u)] =
          enabled_action_executions(s.vars[static_cast<std::size_t>(u)], inbox,
                                    s.detectors[static_cast<std::size_t>(u)],
                                    s.pending_lock[static_cast<std::size_t>(u)],
                                    s.pending_unlock[static_cast<std::size_t>(u)]);
      if (static_cast<int>(enabled[static_cast<std::size_t>(u)].size()) > 2 * cfg_.delta + 4)
        record_violation(parent, "more than 2*delta+4 enabled executions", "");
      if (!enabled[static_cast<std::size_t>(u)].empty()) enabled_nodes.push_back(u);
    }

    // A state with no enabled execution anywhere is terminal: nothing can
    // ever run again. That is a deadlock unless every request concluded
    // and the system is quiescent.
    if (enabled_nodes.empty()) {
      if (is_quiescent(s))
        ++terminal_states_;
      else
        record_violation(parent, "deadlock: no enabled execution but work remains", "");
      return;
    }

    // all activation subsets (the empty subset only re-reaches this state)
    const std::size_t subsets = std::size_t{1} << enabled_nodes.size();
    for (std::size_t mask = 1; mask < subsets && !stop_; ++mask) {
      std::vector<NodeId> active;
      for (std::size_t b = 0; b < enabled_nodes.size(); ++b)
        if (mask & (std::size_t{1} << b)) active.push_back(enabled_nodes[b]);
      enumerate_choices(s, topo, enabled, active, 0, {}, parent);
    }
  }

  // depth-first product of per-node execution choices, then priority values
  void enumerate_choices(const ExploreState& s, const Topology& topo,
                         const std::vector<std::vector<ActionExecution>>& enabled,
                         const std::vector<NodeId>& active, std::size_t pos,
                         std::vector<ActionExecution> chosen, std::int64_t parent) {
    if (stop_) return;
    if (pos < active.size()) {
      for (const ActionExecution& e : enabled[static_cast<std::size_t>(active[pos])]) {
        auto next = chosen;
        next.push_back(e);
        enumerate_choices(s, topo, enabled, active, pos + 1, std::move(next), parent);
      }
      return;
    }
    enumerate_draws(s, topo, active, chosen, 0, {}, parent);
  }

  void enumerate_draws(const ExploreState& s, const Topology& topo,
                       const std::vector<NodeId>& active,
                       const std::vector<ActionExecution>& chosen, std::size_t pos,
                       std::vector<int> draws, std::int64_t parent) {
    if (stop_) return;
    if (pos < chosen.size()) {
      if (draws_priority(s, active[pos], chosen[pos])) {
        for (int p = 0; p < cfg_.k_range(); ++p) {
          auto next = draws;
          next.push_back(p);
          enumerate_draws(s, topo, active, chosen, pos + 1, std::move(next), parent);
        }
      } else {
        auto next = draws;
        next.push_back(-1);
        enumerate_draws(s, topo, active, chosen, pos + 1, std::move(next), parent);
      }
      return;
    }
    apply_stage(s, topo, active, chosen, draws, parent);
  }

  bool draws_priority(const ExploreState& s, NodeId u, const ActionExecution& e) const {
    if (e.action == ActionId::CheckStart) return true;
    if (e.action != ActionId::CheckWin) return false;
    // a losing CheckWin redraws; the branch is determined by the verdicts
    for (const auto& [port, won] : s.vars[static_cast<std::size_t>(u)].verdicts)
      if (!won) return true;
    return false;
  }

  void apply_stage(const ExploreState& s, const Topology& topo,
                   const std::vector<NodeId>& active,
                   const std::vector<ActionExecution>& chosen, const std::vector<int>& draws,
                   std::int64_t parent) {
    ++transitions_;
    ExploreState next = s;
    std::string how;
    for (std::size_t i = 0; i < active.size(); ++i) {
      const NodeId u = active[i];
      const auto ui = static_cast<std::size_t>(u);
      const ActionExecution& exec = chosen[i];
      if (exec.has_message) {
        auto [from, to, mi] = unpack_uid(exec.msg_uid);
        auto& ch = next.channels[static_cast<std::size_t>(from) * cfg_.nodes + to];
        // position may shift after earlier consumes; match by value
        bool removed = false;
        for (std::size_t k = 0; k < ch.size() && !removed; ++k)
          if (ch[k] == exec.message) {
            ch.erase(ch.begin() + static_cast<std::ptrdiff_t>(k));
            removed = true;
          }
        require(removed, "explore: consumed message vanished");
      }
      PortSet snapshot = next.detectors[ui];
      next.detectors[ui] = {};
      ActionEffect eff =
          apply_action(s.vars[ui], exec, snapshot, topo.live_ports(u), cfg_.k_range(),
                       priority_fixed(draws[i]));
      check_node_invariants(eff.vars, cfg_.delta);
      next.vars[ui] = eff.vars;
      if (eff.lock_call_consumed) next.pending_lock[ui] = false;
      if (eff.unlock_call_consumed) next.pending_unlock[ui] = false;
      if (eff.has_returned_lock_set) {
        ++locked_states_;
        if (cfg_.unlock_after) next.pending_unlock[ui] = true;
      }
      for (const Send& snd : eff.sends) {
        NodeId to = snd.port == kSelfPort ? u : topo.peer_on(u, snd.port);
        require(to >= 0, "explore: send on dead port");
        auto& ch = next.channels[ui * static_cast<std::size_t>(cfg_.nodes) + to];
        ch.push_back(snd.msg);
        if (ch.size() > 2) record_violation(parent, "transit bound exceeded", how);
      }
      how += how.empty() ? "" : " ";
      how += std::to_string(u);
      how += ':';
      how += to_string(exec.action);
      if (draws[i] >= 0) {
        how += "/p=";
        how += std::to_string(draws[i]);
      }
    }
    detail_explore::canonicalize(next);
    check_state(next, parent, how);
    push_state(next, parent, how);
  }

  void check_state(const ExploreState& s, std::int64_t parent, const std::string& how) {
    const Topology& topo = topology_of(s);
    const int n = cfg_.nodes;
    // effective lock view and belief consistency: a locked initiator's
    // live, unsevered targets must point their lock back at it
    for (NodeId u = 0; u < n; ++u) {
      const NodeVars& v = s.vars[static_cast<std::size_t>(u)];
      Lock eff = v.lock;
      if (eff.is_held() && !eff.is_self() &&
          s.detectors[static_cast<std::size_t>(u)].contains(eff.port()))
        eff = Lock::unlocked();
      if (eff.is_held() && !eff.is_self() && topo.peer_on(u, eff.port()) < 0)
        record_violation(parent, "effective lock points at a dead port", how);
      if (v.state == NodeState::Locked) {
        if (!eff.is_self()) {
          record_violation(parent, "locked initiator does not hold itself", how);
          continue;
        }
        for (Port p : v.targets) {
          if (p == kSelfPort || s.detectors[static_cast<std::size_t>(u)].contains(p)) continue;
          NodeId w = topo.peer_on(u, p);
          if (w < 0) continue;
          const NodeVars& wv = s.vars[static_cast<std::size_t>(w)];
          bool points_back = wv.lock.is_held() && !wv.lock.is_self() &&
                             !s.detectors[static_cast<std::size_t>(w)].contains(wv.lock.port()) &&
                             topo.peer_on(w, wv.lock.port()) == u;
          if (!points_back)
            record_violation(parent, "mutual exclusion: held target not locked by holder", how);
        }
      }
    }
    // no node may be claimed by two lock sets: structural with one lock
    // variable, revalidated through the holder mapping
    for (NodeId w = 0; w < n; ++w) {
      const NodeVars& wv = s.vars[static_cast<std::size_t>(w)];
      if (!wv.lock.is_held() || wv.lock.is_self()) continue;
      if (s.detectors[static_cast<std::size_t>(w)].contains(wv.lock.port())) continue;
      NodeId holder = topo.peer_on(w, wv.lock.port());
      if (holder < 0) continue;
      // the holder, if it believes it is locked, must count w among its targets
      const NodeVars& hv = s.vars[static_cast<std::size_t>(holder)];
      if (hv.state == NodeState::Locked && !hv.targets.contains(topo.port_at(holder, w)))
        record_violation(parent, "lock holder does not know its member", how);
    }
  }

  void record_violation(std::int64_t parent, const std::string& what, const std::string& how) {
    violations_.push_back(how.empty() ? what : what + " after [" + how + "]");
    if (first_violation_state_ < 0) first_violation_state_ = parent;
    stop_ = true;
  }

  std::vector<std::string> unwind(std::int64_t index) const {
    std::vector<std::string> path;
    while (index >= 0) {
      path.push_back(how_[static_cast<std::size_t>(index)]);
      index = parents_[static_cast<std::size_t>(index)];
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

  bool is_quiescent(const ExploreState& s) const {
    for (int u = 0; u < cfg_.nodes; ++u) {
      const NodeVars& v = s.vars[static_cast<std::size_t>(u)];
      if (v.state != NodeState::Idle || !v.lock.is_unlocked()) return false;
      if (s.pending_lock[static_cast<std::size_t>(u)] ||
          s.pending_unlock[static_cast<std::size_t>(u)])
        return false;
      if (!v.candidates.empty() || !v.on_hold.empty() || !v.priorities.empty()) return false;
    }
    for (const auto& ch : s.channels)
      if (!ch.empty()) return false;
    return true;
  }

  void apply_script(ExploreState& s) {
    s.script_done = true;
    const int n = cfg_.nodes;
    Port pu = topo_before_.port_at(cfg_.script_u, cfg_.script_v);
    Port pv = topo_before_.port_at(cfg_.script_v, cfg_.script_u);
    s.channels[static_cast<std::size_t>(cfg_.script_u) * n + cfg_.script_v].clear();
    s.channels[static_cast<std::size_t>(cfg_.script_v) * n + cfg_.script_u].clear();
    s.detectors[static_cast<std::size_t>(cfg_.script_u)].add(pu);
    s.detectors[static_cast<std::size_t>(cfg_.script_v)].add(pv);
  }

  std::uint64_t pack_uid(NodeId from, NodeId to, std::size_t index) const {
    return 1 + (static_cast<std::uint64_t>(from) * cfg_.nodes + to) * 8 + index;
  }
  std::tuple<NodeId, NodeId, std::size_t> unpack_uid(std::uint64_t uid) const {
    std::uint64_t v = uid - 1;
    std::size_t index = v % 8;
    std::uint64_t pair = v / 8;
    return {static_cast<NodeId>(pair / cfg_.nodes), static_cast<NodeId>(pair % cfg_.nodes),
            index};
  }

  ExploreConfig cfg_;
  Topology topo_before_, topo_after_;
  std::vector<const std::string*> states_;
  std::vector<std::int64_t> parents_;
  std::vector<std::string> how_;
  std::unordered_map<std::string, std::int64_t> index_;
  std::vector<std::string> violations_;
  std::int64_t first_violation_state_ = -1;
  std::int64_t transitions_ = 0;
  std::int64_t locked_states_ = 0;
  std::int64_t terminal_states_ = 0;
  bool stop_ = false;
  bool budget_exceeded_ = false;
};

inline ExploreResult explore_exhaustive(const ExploreConfig& cfg) {
  Explorer ex(cfg);
  return ex.run();
}

}  // namespace lmx

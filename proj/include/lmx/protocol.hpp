#pragma once

// Pure-function implementation of the locking protocol: the fifteen actions,
// their guards, and the CleanUp helper. Given a node's variables, its
// disconnection snapshot, and at most one incoming message, each action
// produces updated variables plus outgoing sends. Nothing here touches the
// network or the scheduler, so the sampled simulator and the exhaustive
// explorer run the exact same transition code.
//
// The initiator side is the classic prepare / compete / win / locked /
// unlock cycle. The participant side judges the candidate priorities that
// have actually arrived instead of barrier-waiting on applicants and on
// judged losers' retries (the barrier forms cross-node wait cycles and
// deadlocks; see the liveness regression tests), with an explicit award
// marking the winner whose set-lock is outstanding so no second award or
// self-award can overlap it.

#include <functional>
#include <optional>
#include <vector>

#include "lmx/core.hpp"
#include "lmx/rng.hpp"

namespace lmx {

enum class ActionId : std::uint8_t {
  InitLock,
  ReceivePrepare,
  ReceiveReady,
  CheckStart,
  ReceiveRequest,
  CheckPriorities,
  ReceiveWin,
  CheckWin,
  ReceiveSetLock,
  ReceiveAckLock,
  CheckDone,
  InitUnlock,
  ReceiveRelease,
  ReceiveAckUnlock,
  CheckUnlocked,
};

inline constexpr int kActionCount = 15;

enum class Role : std::uint8_t { Initiator, Participant };

inline Role role_of(ActionId a) {
  switch (a) {
    case ActionId::ReceivePrepare:
    case ActionId::ReceiveRequest:
    case ActionId::CheckPriorities:
    case ActionId::ReceiveSetLock:
    case ActionId::ReceiveRelease:
      return Role::Participant;
    default:
      return Role::Initiator;
  }
}

inline bool is_receive(ActionId a) {
  switch (a) {
    case ActionId::ReceivePrepare:
    case ActionId::ReceiveReady:
    case ActionId::ReceiveRequest:
    case ActionId::ReceiveWin:
    case ActionId::ReceiveSetLock:
    case ActionId::ReceiveAckLock:
    case ActionId::ReceiveRelease:
    case ActionId::ReceiveAckUnlock:
      return true;
    default:
      return false;
  }
}

inline bool is_check(ActionId a) {
  switch (a) {
    case ActionId::CheckStart:
    case ActionId::CheckPriorities:
    case ActionId::CheckWin:
    case ActionId::CheckDone:
    case ActionId::CheckUnlocked:
      return true;
    default:
      return false;
  }
}

inline bool is_initiator_check(ActionId a) {
  return is_check(a) && role_of(a) == Role::Initiator;
}

// InitLock / InitUnlock: triggered by a pending primitive call, not a guard
// over messages. They occupy the same exclusive slot as the initiator
// Checks because each requires a distinct state value.
inline bool is_init(ActionId a) {
  return a == ActionId::InitLock || a == ActionId::InitUnlock;
}

inline ActionId receive_action_for(MsgKind k) {
  switch (k) {
    case MsgKind::Prepare: return ActionId::ReceivePrepare;
    case MsgKind::Ready: return ActionId::ReceiveReady;
    case MsgKind::RequestLock: return ActionId::ReceiveRequest;
    case MsgKind::Win: return ActionId::ReceiveWin;
    case MsgKind::SetLock: return ActionId::ReceiveSetLock;
    case MsgKind::AckLock: return ActionId::ReceiveAckLock;
    case MsgKind::ReleaseLock: return ActionId::ReceiveRelease;
    case MsgKind::AckUnlock: return ActionId::ReceiveAckUnlock;
  }
  fault("unknown message kind");
}

inline const char* to_string(ActionId a) {
  switch (a) {
    case ActionId::InitLock: return "init-lock";
    case ActionId::ReceivePrepare: return "recv-prepare";
    case ActionId::ReceiveReady: return "recv-ready";
    case ActionId::CheckStart: return "check-start";
    case ActionId::ReceiveRequest: return "recv-request";
    case ActionId::CheckPriorities: return "check-priorities";
    case ActionId::ReceiveWin: return "recv-win";
    case ActionId::CheckWin: return "check-win";
    case ActionId::ReceiveSetLock: return "recv-set-lock";
    case ActionId::ReceiveAckLock: return "recv-ack-lock";
    case ActionId::CheckDone: return "check-done";
    case ActionId::InitUnlock: return "init-unlock";
    case ActionId::ReceiveRelease: return "recv-release";
    case ActionId::ReceiveAckUnlock: return "recv-ack-unlock";
    case ActionId::CheckUnlocked: return "check-unlocked";
  }
  return "?";
}

inline std::optional<ActionId> action_from_string(std::string_view s) {
  for (int i = 0; i < kActionCount; ++i) {
    ActionId a = static_cast<ActionId>(i);
    if (s == to_string(a)) return a;
  }
  return std::nullopt;
}

// One message sitting in a node's deliverable inbox. `uid` identifies the
// transit entry so the scheduler can consume exactly the chosen message;
// `sent_stage` feeds the maximum-delay fairness bound.
struct InboxEntry {
  Message msg;
  Port from_port = kSelfPort;
  std::uint64_t uid = 0;
  std::int64_t sent_stage = 0;
};

// An enabled action execution: an action plus, for Receive actions, the
// specific in-transit message it would consume.
struct ActionExecution {
  ActionId action = ActionId::InitLock;
  bool has_message = false;
  Message message;
  Port from_port = kSelfPort;
  std::uint64_t msg_uid = 0;
  std::int64_t sent_stage = 0;

  static ActionExecution plain(ActionId a) { return {a, false, {}, kSelfPort, 0, 0}; }
  static ActionExecution receive(const InboxEntry& e) {
    return {receive_action_for(e.msg.kind), true, e.msg, e.from_port, e.uid, e.sent_stage};
  }
};

struct Send {
  Message msg;
  Port port = kSelfPort;
};

// Result of one action execution.
struct ActionEffect {
  NodeVars vars;
  std::vector<Send> sends;
  bool lock_call_consumed = false;
  bool unlock_call_consumed = false;
  bool has_returned_lock_set = false;  // produced only by CheckDone
  PortSet returned_lock_set;
  int drawn_priority = -1;  // set by CheckStart and a losing CheckWin
};

// Priorities are drawn uniformly from {0..K-1}, consuming exactly one
// 64-bit output so replays are bit-identical.
inline int draw_priority(Rng& rng, int k_range) {
  require(k_range >= 1, "priority range K must be >= 1");
  return static_cast<int>(rng.below(static_cast<std::uint64_t>(k_range)));
}

// Where the drawn priority comes from: the live simulator passes an Rng
// lambda, the exhaustive explorer passes one fixed value per branch, and
// trace replay feeds back the recorded value.
using PrioritySource = std::function<int(int k_range)>;

inline PrioritySource priority_from_rng(Rng& rng) {
  return [&rng](int k) { return draw_priority(rng, k); };
}

inline PrioritySource priority_fixed(int value) {
  return [value](int) { return value; };
}

namespace detail {

// A CleanUp hold-promotion may answer ready on the same port the action
// itself is about to fan out to, so one execution can send two messages of
// distinct kinds to one port (never two of the same kind). This is the
// source of the two-messages-in-transit bound per directed pair.
inline void add_send(ActionEffect& eff, Message m, Port p) {
  for (const Send& s : eff.sends)
    require(s.port != p || s.msg.kind != m.kind,
            "duplicate send of one message kind to one port in one execution");
  eff.sends.push_back({m, p});
}

// Once no candidate is left, everyone on hold becomes an applicant and is
// answered ready; the phase follows the applicant set.
inline void promote_holds(ActionEffect& eff) {
  NodeVars& v = eff.vars;
  if (!v.candidates.empty()) return;
  for (Port l : v.on_hold) add_send(eff, Message::ready(), l);
  v.applicants = v.applicants.plus(v.on_hold);
  v.on_hold.clear();
  v.phase = v.applicants.empty() ? Phase::None : Phase::Prepare;
}

}  // namespace detail

// CleanUp: runs at the start of every action execution (ReceiveSetLock
// excepted, which runs it after taking the lock). Drops every variable
// referring to a severed port, then, if no competition is running, promotes
// all held initiators to applicants and answers them ready.
inline ActionEffect clean_up(const NodeVars& vars, PortSet d_snapshot) {
  require(!d_snapshot.contains(kSelfPort), "self-port in disconnection snapshot");
  ActionEffect eff;
  eff.vars = vars;
  NodeVars& v = eff.vars;
  for (Port l : d_snapshot) {
    if (v.lock.is_held() && v.lock.port() == l) v.lock = Lock::unlocked();
    if (v.awarded == l) v.awarded = -1;
    v.targets.remove(l);
    v.replies.remove(l);
    v.verdicts.erase(l);
    v.on_hold.remove(l);
    v.applicants.remove(l);
    v.candidates.remove(l);
    v.priorities.erase(l);
  }
  detail::promote_holds(eff);
  return eff;
}

inline PortMap<bool> all_false(PortSet candidates) {
  PortMap<bool> decision;
  for (Port l : candidates) decision.put(l, false);
  return decision;
}

// Outcome of a participant's competition: if the node is unlocked and one
// candidate holds the unique highest priority, that port wins and every
// other candidate loses; otherwise everyone loses.
inline PortMap<bool> priority_decision(const PortMap<int>& priorities, Lock lock,
                                       PortSet candidates) {
  PortMap<bool> decision;
  Port winner = -1;
  if (lock.is_unlocked() && !priorities.empty()) {
    int best = -1, best_count = 0;
    Port best_port = -1;
    for (const auto& [port, p] : priorities) {
      if (p > best) {
        best = p;
        best_count = 1;
        best_port = port;
      } else if (p == best) {
        ++best_count;
      }
    }
    if (best_count == 1) winner = best_port;
  }
  for (Port l : candidates) decision.put(l, l == winner);
  // The pseudocode notifies the winner even if a stale priority entry is
  // not backed by a candidate; kept literal.
  if (winner >= 0 && !candidates.contains(winner)) decision.put(winner, true);
  return decision;
}

// Guard evaluation. `d_live` is the current (not yet consumed) content of
// the disconnection buffer; all guards disregard ports in it. The result
// holds at most one initiator-slot action plus CheckPriorities plus one
// execution per deliverable message, so its size is bounded by 2*delta + 4.
inline std::vector<ActionExecution> enabled_action_executions(
    const NodeVars& v, const std::vector<InboxEntry>& inbox, PortSet d_live,
    bool pending_lock_call, bool pending_unlock_call) {
  std::vector<ActionExecution> out;
  auto sets_equal = [&](PortSet a, PortSet b) { return a.minus(d_live) == b.minus(d_live); };

  switch (v.state) {
    case NodeState::Idle:
      if (pending_lock_call) out.push_back(ActionExecution::plain(ActionId::InitLock));
      break;
    case NodeState::Prepare:
      if (sets_equal(v.replies, v.targets))
        out.push_back(ActionExecution::plain(ActionId::CheckStart));
      break;
    case NodeState::Compete:
      if (v.verdicts.size_minus(d_live) == v.targets.minus(d_live).size())
        out.push_back(ActionExecution::plain(ActionId::CheckWin));
      break;
    case NodeState::Win:
      if (sets_equal(v.replies, v.targets))
        out.push_back(ActionExecution::plain(ActionId::CheckDone));
      break;
    case NodeState::Locked:
      if (pending_unlock_call) out.push_back(ActionExecution::plain(ActionId::InitUnlock));
      break;
    case NodeState::Unlock:
      if (sets_equal(v.replies, v.targets))
        out.push_back(ActionExecution::plain(ActionId::CheckUnlocked));
      break;
  }

  // Judgment fires on the priorities present once no request-lock is
  // still waiting in the inbox, so requests that have already arrived are
  // judged in one pool and the random priorities arbitrate. Waiting for
  // applicants or for judged losers' next requests, as the batched rule
  // does, closes cross-node wait cycles and deadlocks the system in
  // reachable states (the inbox gate waits only on the node's own
  // deliveries, which fairness bounds); the award interlock keeps one
  // winner at a time per participant. A judgment with no live candidacy
  // left is also enabled: it reconciles disconnections and promotes the
  // held initiators (without it, a dead award wedges a node that has no
  // other action).
  bool request_waiting = false;
  for (const InboxEntry& e : inbox)
    if (e.msg.kind == MsgKind::RequestLock) request_waiting = true;
  PortSet unresolved = v.candidates;
  if (v.awarded >= 0) unresolved.remove(v.awarded);
  const bool judgeable = v.priorities.size_minus(d_live) >= 1 &&
                         unresolved.minus(d_live).size() == v.priorities.size_minus(d_live);
  const bool moribund = v.candidates.minus(d_live).empty();
  if (v.phase == Phase::Compete && !request_waiting && (judgeable || moribund))
    out.push_back(ActionExecution::plain(ActionId::CheckPriorities));

  for (const InboxEntry& e : inbox) out.push_back(ActionExecution::receive(e));
  return out;
}

// Executes one enabled action. `live_ports` is the node's current set of
// connected port labels (used only by InitLock to form the closed
// neighborhood). The caller guarantees the execution was enabled under the
// same inputs; guard re-checks here fault on violation.
inline ActionEffect apply_action(const NodeVars& vars, const ActionExecution& exec,
                                 PortSet d_snapshot, PortSet live_ports, int k_range,
                                 const PrioritySource& draw) {
  if (is_receive(exec.action)) {
    require(exec.has_message, "receive action without a message");
    require(receive_action_for(exec.message.kind) == exec.action,
            "message kind does not match receive action");
  } else {
    require(!exec.has_message, "non-receive action carries a message");
  }

  // ReceiveSetLock is the one action that takes the lock before cleanup.
  if (exec.action == ActionId::ReceiveSetLock) {
    NodeVars pre = vars;
    pre.lock = Lock::by(exec.from_port);
    pre.candidates.remove(exec.from_port);
    if (pre.awarded == exec.from_port) pre.awarded = -1;
    ActionEffect eff = clean_up(pre, d_snapshot);
    detail::add_send(eff, Message::ack_lock(), exec.from_port);
    return eff;
  }

  ActionEffect eff = clean_up(vars, d_snapshot);
  NodeVars& v = eff.vars;
  const Port from = exec.from_port;

  auto request_fanout = [&] {
    int p = draw(k_range);
    require(p >= 0 && p < k_range, "drawn priority outside {0..K-1}");
    eff.drawn_priority = p;
    for (Port l : v.targets) detail::add_send(eff, Message::request_lock(p), l);
  };

  switch (exec.action) {
    case ActionId::InitLock:
      require(v.state == NodeState::Idle, "init-lock while a request is active");
      v.state = NodeState::Prepare;
      v.targets = live_ports;
      v.targets.add(kSelfPort);
      for (Port l : v.targets) detail::add_send(eff, Message::prepare(), l);
      eff.lock_call_consumed = true;
      break;

    case ActionId::ReceivePrepare:
      if (v.phase == Phase::Compete) {
        v.on_hold.add(from);
      } else {
        v.applicants.add(from);
        v.phase = Phase::Prepare;
        detail::add_send(eff, Message::ready(), from);
      }
      break;

    case ActionId::ReceiveReady:
      v.replies.add(from);
      break;

    case ActionId::CheckStart:
      require(v.state == NodeState::Prepare, "check-start outside prepare state");
      v.state = NodeState::Compete;
      v.replies.clear();
      v.verdicts.clear();
      request_fanout();
      break;

    case ActionId::ReceiveRequest:
      require(exec.message.priority >= 0 && exec.message.priority < k_range,
              "request-lock priority outside {0..K-1}");
      // a re-request from the awarded winner is a decline: it lost some
      // other competition and is trying again everywhere
      if (v.awarded == from) v.awarded = -1;
      v.applicants.remove(from);
      v.candidates.add(from);
      v.priorities.put(from, exec.message.priority);
      v.phase = Phase::Compete;
      break;

    case ActionId::CheckPriorities: {
      PortSet pool = v.priorities.keys().minus(d_snapshot);
      PortMap<bool> decision =
          v.awarded >= 0 ? all_false(pool) : priority_decision(v.priorities, v.lock, pool);
      for (const auto& [port, won] : decision) {
        detail::add_send(eff, Message::win(won), port);
        if (won)
          v.awarded = port;
        else
          v.candidates.remove(port);  // judged losers rejoin with their retry
      }
      v.priorities.clear();
      detail::promote_holds(eff);
      break;
    }

    case ActionId::ReceiveWin:
      v.verdicts.put(from, exec.message.verdict);
      break;

    case ActionId::CheckWin: {
      require(v.state == NodeState::Compete, "check-win outside compete state");
      bool lost = false;
      for (const auto& [port, won] : v.verdicts)
        if (!won) lost = true;
      if (lost) {
        request_fanout();
      } else {
        v.state = NodeState::Win;
        v.replies.clear();
        for (Port l : v.targets) detail::add_send(eff, Message::set_lock(), l);
      }
      v.verdicts.clear();
      break;
    }

    case ActionId::ReceiveAckLock:
      v.replies.add(from);
      break;

    case ActionId::CheckDone:
      require(v.state == NodeState::Win, "check-done outside win state");
      v.state = NodeState::Locked;
      v.replies.clear();
      eff.has_returned_lock_set = true;
      eff.returned_lock_set = v.targets;
      break;

    case ActionId::InitUnlock:
      require(v.state == NodeState::Locked, "init-unlock outside locked state");
      v.state = NodeState::Unlock;
      v.replies.clear();
      for (Port l : v.targets) detail::add_send(eff, Message::release_lock(), l);
      eff.unlock_call_consumed = true;
      break;

    case ActionId::ReceiveRelease:
      v.lock = Lock::unlocked();
      detail::add_send(eff, Message::ack_unlock(), from);
      break;

    case ActionId::ReceiveAckUnlock:
      v.replies.add(from);
      break;

    case ActionId::CheckUnlocked:
      require(v.state == NodeState::Unlock, "check-unlocked outside unlock state");
      v.state = NodeState::Idle;
      v.replies.clear();
      break;

    case ActionId::ReceiveSetLock:
      fault("unreachable");
  }
  return eff;
}

}  // namespace lmx

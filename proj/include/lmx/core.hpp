#pragma once

// Protocol-level value types shared by every other header: port sets keyed
// by label, the lock variable, node state/phase enums, the eight message
// kinds, and the full per-node variable block. No behavior beyond
// construction and validation lives here.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lmx {

// Contract violations inside the simulator are faults, never silently
// ignored. The CLI maps them to exit code 2.
class SimFault : public std::runtime_error {
 public:
  explicit SimFault(const std::string& what) : std::runtime_error(what) {}
};

[[noreturn]] inline void fault(const std::string& what) { throw SimFault(what); }

inline void require(bool cond, const char* what) {
  if (!cond) fault(what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) fault(what);
}

// Port labels. 0 is the node's self-port; 1..delta address live edges.
using Port = int;
inline constexpr Port kSelfPort = 0;
inline constexpr int kMaxDelta = 62;

// A set of port labels with deterministic ascending iteration. Backed by a
// bitmask, so copies are trivial and set algebra is branch-free.
class PortSet {
 public:
  constexpr PortSet() = default;

  static PortSet of(std::initializer_list<Port> ports) {
    PortSet s;
    for (Port p : ports) s.add(p);
    return s;
  }

  void add(Port p) { bits_ |= bit(p); }
  void remove(Port p) { bits_ &= ~bit(p); }
  bool contains(Port p) const { return (bits_ & bit(p)) != 0; }
  bool empty() const { return bits_ == 0; }
  int size() const { return __builtin_popcountll(bits_); }
  void clear() { bits_ = 0; }

  PortSet minus(PortSet other) const { return PortSet(bits_ & ~other.bits_); }
  PortSet plus(PortSet other) const { return PortSet(bits_ | other.bits_); }
  PortSet intersect(PortSet other) const { return PortSet(bits_ & other.bits_); }

  bool operator==(const PortSet&) const = default;

  std::uint64_t raw() const { return bits_; }
  static PortSet from_raw(std::uint64_t raw) { return PortSet(raw); }

  class iterator {
   public:
    explicit iterator(std::uint64_t rest) : rest_(rest) {}
    Port operator*() const { return __builtin_ctzll(rest_); }
    iterator& operator++() {
      rest_ &= rest_ - 1;
      return *this;
    }
    bool operator!=(const iterator& o) const { return rest_ != o.rest_; }

   private:
    std::uint64_t rest_;
  };
  iterator begin() const { return iterator(bits_); }
  iterator end() const { return iterator(0); }

 private:
  explicit constexpr PortSet(std::uint64_t bits) : bits_(bits) {}
  static std::uint64_t bit(Port p) {
    require(p >= 0 && p <= kMaxDelta + 1, "port label out of range");
    return 1ull << p;
  }
  std::uint64_t bits_ = 0;
};

// Keyed map port -> payload holding at most one entry per label, iterated in
// ascending label order. Covers the win-verdict and priority books.
template <typename T>
class PortMap {
 public:
  void put(Port p, T value) {
    for (auto& e : entries_) {
      if (e.first == p) {
        e.second = value;
        return;
      }
    }
    entries_.emplace_back(p, value);
    for (std::size_t i = entries_.size(); i > 1 && entries_[i - 1].first < entries_[i - 2].first; --i)
      std::swap(entries_[i - 1], entries_[i - 2]);
  }

  void erase(Port p) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].first == p) {
        entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(i));
        return;
      }
    }
  }

  const T* find(Port p) const {
    for (auto& e : entries_)
      if (e.first == p) return &e.second;
    return nullptr;
  }

  bool contains(Port p) const { return find(p) != nullptr; }
  int size() const { return static_cast<int>(entries_.size()); }
  bool empty() const { return entries_.empty(); }
  void clear() { entries_.clear(); }

  PortSet keys() const {
    PortSet s;
    for (auto& e : entries_) s.add(e.first);
    return s;
  }

  // Entries whose label is not in `d`; |W \ D| style counting.
  int size_minus(PortSet d) const {
    int n = 0;
    for (auto& e : entries_)
      if (!d.contains(e.first)) ++n;
    return n;
  }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  bool operator==(const PortMap&) const = default;

 private:
  std::vector<std::pair<Port, T>> entries_;
};

// The lock variable: unlocked, self-held, or held by the neighbor on a port.
// Mirrors the wire encoding {-1, 0, 1..delta}.
class Lock {
 public:
  constexpr Lock() = default;

  static Lock unlocked() { return Lock(); }
  static Lock self() { return Lock(0); }
  static Lock by(Port p) {
    require(p >= 0, "lock port must be >= 0");
    return Lock(p);
  }

  bool is_unlocked() const { return value_ < 0; }
  bool is_self() const { return value_ == 0; }
  bool is_held() const { return value_ >= 0; }
  // Valid only when held; 0 means self.
  Port port() const {
    require(value_ >= 0, "lock port read while unlocked");
    return value_;
  }
  int raw() const { return value_; }

  bool operator==(const Lock&) const = default;

 private:
  explicit constexpr Lock(int v) : value_(v) {}
  int value_ = -1;
};

// Initiator lock states, advancing Idle -> Prepare -> Compete -> Win ->
// Locked -> Unlock -> Idle (Compete repeats on a lost competition).
enum class NodeState : std::uint8_t { Idle, Prepare, Compete, Win, Locked, Unlock };

// Participant phases.
enum class Phase : std::uint8_t { None, Prepare, Compete };

inline const char* to_string(NodeState s) {
  switch (s) {
    case NodeState::Idle: return "idle";
    case NodeState::Prepare: return "prepare";
    case NodeState::Compete: return "compete";
    case NodeState::Win: return "win";
    case NodeState::Locked: return "locked";
    case NodeState::Unlock: return "unlock";
  }
  return "?";
}

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::None: return "none";
    case Phase::Prepare: return "prepare";
    case Phase::Compete: return "compete";
  }
  return "?";
}

enum class MsgKind : std::uint8_t {
  Prepare,
  Ready,
  RequestLock,
  Win,
  SetLock,
  AckLock,
  ReleaseLock,
  AckUnlock,
};

inline const char* to_string(MsgKind k) {
  switch (k) {
    case MsgKind::Prepare: return "prepare";
    case MsgKind::Ready: return "ready";
    case MsgKind::RequestLock: return "request-lock";
    case MsgKind::Win: return "win";
    case MsgKind::SetLock: return "set-lock";
    case MsgKind::AckLock: return "ack-lock";
    case MsgKind::ReleaseLock: return "release-lock";
    case MsgKind::AckUnlock: return "ack-unlock";
  }
  return "?";
}

// One protocol message. RequestLock carries a priority, Win carries a
// verdict, the other six kinds have no payload.
struct Message {
  MsgKind kind = MsgKind::Prepare;
  int priority = -1;
  bool verdict = false;

  static Message prepare() { return {MsgKind::Prepare, -1, false}; }
  static Message ready() { return {MsgKind::Ready, -1, false}; }
  static Message request_lock(int p) {
    require(p >= 0, "request-lock priority must be >= 0");
    return {MsgKind::RequestLock, p, false};
  }
  static Message win(bool b) { return {MsgKind::Win, -1, b}; }
  static Message set_lock() { return {MsgKind::SetLock, -1, false}; }
  static Message ack_lock() { return {MsgKind::AckLock, -1, false}; }
  static Message release_lock() { return {MsgKind::ReleaseLock, -1, false}; }
  static Message ack_unlock() { return {MsgKind::AckUnlock, -1, false}; }

  bool operator==(const Message&) const = default;
};

// The full variable block of one node. Equality is structural: two nodes
// with identical variables are indistinguishable.
struct NodeVars {
  Lock lock;
  NodeState state = NodeState::Idle;
  Phase phase = Phase::None;
  PortSet targets;        // neighbor ports the node intends to lock
  PortSet replies;        // ports that answered ready / ack-lock / ack-unlock
  PortMap<bool> verdicts; // win outcomes received, keyed by port
  PortSet on_hold;        // initiators parked for the next competition
  PortSet applicants;     // initiators that may join the current competition
  PortSet candidates;     // initiators competing right now
  PortMap<int> priorities; // candidate priorities, keyed by port
  // Candidate awarded win(true) whose set-lock has not arrived yet; no
  // other candidate may be awarded and no self-lock taken while set.
  Port awarded = -1;

  bool operator==(const NodeVars&) const = default;
};

// Initial state per the protocol: everything unset and empty.
inline NodeVars new_node_vars(int delta) {
  require(delta >= 1, "delta must be >= 1");
  require(delta <= kMaxDelta, "delta exceeds supported maximum");
  return NodeVars{};
}

// Structural invariants that must hold after every action execution.
inline void check_node_invariants(const NodeVars& v, int delta) {
  PortSet domain;
  for (Port p = 0; p <= delta; ++p) domain.add(p);
  auto in_domain = [&](PortSet s) { return s.minus(domain).empty(); };
  require(in_domain(v.targets) && in_domain(v.replies) && in_domain(v.on_hold) &&
              in_domain(v.applicants) && in_domain(v.candidates) &&
              in_domain(v.verdicts.keys()) && in_domain(v.priorities.keys()),
          "node set contains label outside {0..delta}");
  require(v.applicants.intersect(v.candidates).empty(), "applicant and candidate overlap");
  require(v.on_hold.intersect(v.applicants).empty(), "hold and applicant overlap");
  require(v.on_hold.intersect(v.candidates).empty(), "hold and candidate overlap");
  require(v.lock.raw() <= delta, "lock points past delta");
  require(v.awarded <= delta, "awarded port past delta");
}

}  // namespace lmx

#pragma once

// The time-varying graph: port assignment under the degree bound, the
// in-transit message store with loss-on-disconnect, per-node disconnection
// buffers, and the concrete adversary policies driving edge dynamics.

#include <cstdint>
#include <vector>

#include "lmx/core.hpp"
#include "lmx/protocol.hpp"
#include "lmx/rng.hpp"

namespace lmx {

using NodeId = int;

struct EdgeChange {
  bool connected = false;  // false = disconnected
  NodeId u = -1, v = -1;
  Port port_u = -1, port_v = -1;
};

// Port assignments and live edges. Each endpoint of a new edge takes its
// lowest-numbered open port; labels stay fixed until disconnection and the
// two endpoints' labels are independent.
class Topology {
 public:
  Topology(int n, int delta) : n_(n), delta_(delta) {
    require(n >= 1, "node count must be >= 1");
    require(delta >= 1 && delta <= kMaxDelta, "delta out of range");
    peer_on_port_.assign(static_cast<std::size_t>(n) * (delta + 1), -1);
  }

  int node_count() const { return n_; }
  int delta() const { return delta_; }

  bool live(NodeId u, NodeId v) const { return port_at(u, v) >= 0; }

  // Port label at u for the live edge {u, v}; -1 if not live.
  Port port_at(NodeId u, NodeId v) const {
    for (Port p = 1; p <= delta_; ++p)
      if (peer(u, p) == v) return p;
    return -1;
  }

  NodeId peer_on(NodeId u, Port p) const { return peer(u, p); }

  int degree(NodeId u) const {
    int d = 0;
    for (Port p = 1; p <= delta_; ++p)
      if (peer(u, p) >= 0) ++d;
    return d;
  }

  PortSet live_ports(NodeId u) const {
    PortSet s;
    for (Port p = 1; p <= delta_; ++p)
      if (peer(u, p) >= 0) s.add(p);
    return s;
  }

  Port free_port(NodeId u) const {
    for (Port p = 1; p <= delta_; ++p)
      if (peer(u, p) < 0) return p;
    return -1;
  }

  // Connects {u, v} on each endpoint's lowest open port. Returns false
  // (refusal, not a fault) if either node is saturated.
  bool connect(NodeId u, NodeId v, EdgeChange* out = nullptr) {
    require(u != v, "self-edge");
    require(!live(u, v), "edge already live");
    Port pu = free_port(u), pv = free_port(v);
    if (pu < 0 || pv < 0) return false;
    peer(u, pu) = v;
    peer(v, pv) = u;
    if (out) *out = {true, u, v, pu, pv};
    return true;
  }

  // Severs a live edge, freeing both ports. Disconnecting a dead edge is a
  // simulator fault.
  EdgeChange disconnect(NodeId u, NodeId v) {
    Port pu = port_at(u, v), pv = port_at(v, u);
    require(pu >= 0 && pv >= 0, "disconnect of a non-live edge");
    peer(u, pu) = -1;
    peer(v, pv) = -1;
    return {false, u, v, pu, pv};
  }

 private:
  NodeId& peer(NodeId u, Port p) {
    return peer_on_port_[static_cast<std::size_t>(u) * (delta_ + 1) + p];
  }
  NodeId peer(NodeId u, Port p) const {
    return peer_on_port_[static_cast<std::size_t>(u) * (delta_ + 1) + p];
  }

  int n_, delta_;
  std::vector<NodeId> peer_on_port_;  // (node, port) -> peer, -1 when open
};

// One message in transit on a directed channel.
struct TransitMsg {
  Message msg;
  std::uint64_t uid = 0;
  std::int64_t sent_stage = 0;
};

// Per ordered node pair, the multiset of in-transit messages; the diagonal
// holds each node's self-queue (port 0), which is exempt from loss.
class TransitStore {
 public:
  explicit TransitStore(int n) : n_(n), channels_(static_cast<std::size_t>(n) * n) {}

  // The protocol keeps at most two messages in transit per directed pair;
  // a third indicates a transition bug, asserted on every send.
  std::uint64_t send(NodeId from, NodeId to, Message m, std::int64_t stage) {
    std::uint64_t uid = ++next_uid_;
    auto& ch = mutable_channel(from, to);
    ch.push_back({m, uid, stage});
    require(ch.size() <= 2, "more than two messages in transit on a directed pair");
    return uid;
  }

  const std::vector<TransitMsg>& channel(NodeId from, NodeId to) const {
    return channels_[static_cast<std::size_t>(from) * n_ + to];
  }

  // Removes and returns the entry with the given uid; faults if absent.
  TransitMsg consume(NodeId from, NodeId to, std::uint64_t uid) {
    auto& ch = mutable_channel(from, to);
    for (std::size_t i = 0; i < ch.size(); ++i) {
      if (ch[i].uid == uid) {
        TransitMsg m = ch[i];
        ch.erase(ch.begin() + static_cast<std::ptrdiff_t>(i));
        return m;
      }
    }
    fault("consume of a message not in transit");
  }

  // Both directions dropped on disconnect.
  int drop_pair(NodeId u, NodeId v) {
    int lost = static_cast<int>(channel(u, v).size() + channel(v, u).size());
    mutable_channel(u, v).clear();
    mutable_channel(v, u).clear();
    return lost;
  }

  int in_transit(NodeId from, NodeId to) const {
    return static_cast<int>(channel(from, to).size());
  }

  std::int64_t total() const {
    std::int64_t t = 0;
    for (const auto& ch : channels_) t += static_cast<std::int64_t>(ch.size());
    return t;
  }

 private:
  std::vector<TransitMsg>& mutable_channel(NodeId from, NodeId to) {
    return channels_[static_cast<std::size_t>(from) * n_ + to];
  }

  int n_;
  std::uint64_t next_uid_ = 0;
  std::vector<std::vector<TransitMsg>> channels_;
};

// Per-node disconnection detector buffers with snapshot-and-reset reads.
class DisconnectBuffers {
 public:
  explicit DisconnectBuffers(int n) : buffers_(static_cast<std::size_t>(n)) {}

  void record(NodeId u, Port p) {
    require(p != kSelfPort, "self-port never disconnects");
    buffers_[static_cast<std::size_t>(u)].add(p);
  }

  // Guards evaluate against the live buffer without consuming it.
  PortSet peek(NodeId u) const { return buffers_[static_cast<std::size_t>(u)]; }

  // Action start: snapshot and reset.
  PortSet take(NodeId u) {
    PortSet s = buffers_[static_cast<std::size_t>(u)];
    buffers_[static_cast<std::size_t>(u)].clear();
    return s;
  }

 private:
  std::vector<PortSet> buffers_;
};

enum class AdversaryKind : std::uint8_t { Static, RandomChurn, TargetedDisconnect };

struct AdversaryPolicy {
  AdversaryKind kind = AdversaryKind::Static;
  // RandomChurn: per-stage per-pair toggle probability. TargetedDisconnect:
  // per-stage probability of severing one frontier edge.
  double rate = 0.0;
};

inline AdversaryPolicy adversary_static() { return {AdversaryKind::Static, 0.0}; }
inline AdversaryPolicy adversary_churn(double q) { return {AdversaryKind::RandomChurn, q}; }
inline AdversaryPolicy adversary_targeted(double q) {
  return {AdversaryKind::TargetedDisconnect, q};
}

// Severs one live edge: transit dropped both ways, both detectors updated.
inline EdgeChange sever_edge(Topology& topo, TransitStore& transit,
                             DisconnectBuffers& detectors, NodeId u, NodeId v) {
  EdgeChange ch = topo.disconnect(u, v);
  transit.drop_pair(u, v);
  detectors.record(u, ch.port_u);
  detectors.record(v, ch.port_v);
  return ch;
}

// One adversary move at a stage boundary. RandomChurn draws one Bernoulli
// per unordered pair in lexicographic order every stage (fixed randomness
// consumption), toggling the pair on a hit; connects refused by the degree
// bound are dropped. TargetedDisconnect severs, with probability `rate`, a
// live edge inside some mid-request node's intended lock set.
inline std::vector<EdgeChange> adversary_step(Topology& topo, TransitStore& transit,
                                              DisconnectBuffers& detectors,
                                              const AdversaryPolicy& policy, Rng& rng,
                                              const std::vector<NodeVars>* vars = nullptr) {
  std::vector<EdgeChange> changes;
  switch (policy.kind) {
    case AdversaryKind::Static:
      break;
    case AdversaryKind::RandomChurn: {
      const int n = topo.node_count();
      for (NodeId u = 0; u < n; ++u) {
        for (NodeId v = u + 1; v < n; ++v) {
          if (!rng.bernoulli(policy.rate)) continue;
          if (topo.live(u, v)) {
            changes.push_back(sever_edge(topo, transit, detectors, u, v));
          } else {
            EdgeChange ch;
            if (topo.connect(u, v, &ch)) changes.push_back(ch);
          }
        }
      }
      break;
    }
    case AdversaryKind::TargetedDisconnect: {
      if (!rng.bernoulli(policy.rate)) break;
      require(vars != nullptr, "targeted adversary needs node state view");
      std::vector<std::pair<NodeId, NodeId>> frontier;
      const int n = topo.node_count();
      for (NodeId u = 0; u < n; ++u) {
        if ((*vars)[static_cast<std::size_t>(u)].state == NodeState::Idle) continue;
        for (Port p : (*vars)[static_cast<std::size_t>(u)].targets) {
          if (p == kSelfPort) continue;
          NodeId v = topo.peer_on(u, p);
          if (v >= 0 && (u < v || !(*vars)[static_cast<std::size_t>(v)].targets.contains(
                                       topo.port_at(v, u))))
            frontier.emplace_back(u, v);
        }
      }
      if (frontier.empty()) break;
      auto [u, v] = frontier[rng.below(frontier.size())];
      changes.push_back(sever_edge(topo, transit, detectors, u, v));
      break;
    }
  }
  return changes;
}

}  // namespace lmx

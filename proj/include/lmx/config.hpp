#pragma once

// Run configuration: everything a run needs to be reproduced bit-for-bit.
// Serialized canonically into the trace header; a config file plus CLI
// overrides both funnel into this struct.

#include <cmath>
#include <cstdint>
#include <string>

#include "json.hpp"
#include "lmx/network.hpp"
#include "lmx/scheduler.hpp"

namespace lmx {

enum class InitialTopology : std::uint8_t { Empty, Complete, Path, Ring, Random };

inline const char* to_string(InitialTopology t) {
  switch (t) {
    case InitialTopology::Empty: return "empty";
    case InitialTopology::Complete: return "complete";
    case InitialTopology::Path: return "path";
    case InitialTopology::Ring: return "ring";
    case InitialTopology::Random: return "random";
  }
  return "?";
}

struct RunConfig {
  int nodes = 8;
  int delta = 2;
  double c = 4.0;  // priority range K = c * delta^2
  std::int64_t stages = 10000;
  std::uint64_t seed = 1;

  AdversaryPolicy adversary = adversary_static();
  ActivationPolicy activation;  // RandomSubset(0.5), b_act = 4
  SelectionPolicy selection;    // UniformRandom
  int b_msg = 8;

  // workload: geometric lock-request interarrival, fixed hold, and a tail
  // margin after which no new requests are issued so issued ones can drain
  double interarrival_mean = 100.0;
  std::int64_t hold = 3;
  std::int64_t call_cutoff_margin = 2500;

  InitialTopology topology = InitialTopology::Random;
  double initial_density = 0.5;  // Random topology: fraction of port budget

  int k_range() const {
    return std::max<int>(1, static_cast<int>(std::llround(c * delta * delta)));
  }

  void validate() const {
    require(nodes >= 1, "nodes must be >= 1");
    require(delta >= 1 && delta <= kMaxDelta, "delta out of range");
    require(c > 0, "c must be positive");
    require(stages >= 1, "stages must be >= 1");
    require(b_msg >= 1, "b-msg must be >= 1");
    require(activation.b_act >= 1, "b-act must be >= 1");
    require(interarrival_mean >= 1.0, "interarrival mean must be >= 1");
    require(hold >= 0, "hold must be >= 0");
    require(call_cutoff_margin >= 0, "cutoff margin must be >= 0");
    require(initial_density >= 0.0 && initial_density <= 1.0, "density in [0,1]");
    require(adversary.rate >= 0.0 && adversary.rate <= 1.0, "adversary rate in [0,1]");
    require(activation.p > 0.0 && activation.p <= 1.0, "activation probability in (0,1]");
  }
};

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["nodes"] = c.nodes;
  j["delta"] = c.delta;
  j["c"] = c.c;
  j["stages"] = c.stages;
  j["seed"] = c.seed;
  j["adversary"] = c.adversary.kind == AdversaryKind::Static        ? "static"
                   : c.adversary.kind == AdversaryKind::RandomChurn ? "churn"
                                                                    : "targeted";
  j["adversary_rate"] = c.adversary.rate;
  j["activation"] = c.activation.kind == ActivationKind::All           ? "all"
                    : c.activation.kind == ActivationKind::RandomSubset ? "subset"
                                                                        : "lazy";
  j["activation_p"] = c.activation.p;
  j["b_act"] = c.activation.b_act;
  j["selection"] = c.selection.kind == SelectionKind::UniformRandom ? "uniform" : "fifo";
  j["b_msg"] = c.b_msg;
  j["interarrival"] = c.interarrival_mean;
  j["hold"] = c.hold;
  j["cutoff_margin"] = c.call_cutoff_margin;
  j["topology"] = to_string(c.topology);
  j["density"] = c.initial_density;
  return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  c.nodes = j.value("nodes", c.nodes);
  c.delta = j.value("delta", c.delta);
  c.c = j.value("c", c.c);
  c.stages = j.value("stages", c.stages);
  c.seed = j.value("seed", c.seed);
  std::string adv = j.value("adversary", "static");
  double rate = j.value("adversary_rate", 0.0);
  if (adv == "static")
    c.adversary = adversary_static();
  else if (adv == "churn")
    c.adversary = adversary_churn(rate);
  else if (adv == "targeted")
    c.adversary = adversary_targeted(rate);
  else
    fault("unknown adversary kind: " + adv);
  std::string act = j.value("activation", "subset");
  if (act == "all")
    c.activation.kind = ActivationKind::All;
  else if (act == "subset")
    c.activation.kind = ActivationKind::RandomSubset;
  else if (act == "lazy")
    c.activation.kind = ActivationKind::LazyAdversary;
  else
    fault("unknown activation kind: " + act);
  c.activation.p = j.value("activation_p", c.activation.p);
  c.activation.b_act = j.value("b_act", c.activation.b_act);
  std::string sel = j.value("selection", "uniform");
  if (sel == "uniform")
    c.selection.kind = SelectionKind::UniformRandom;
  else if (sel == "fifo")
    c.selection.kind = SelectionKind::FifoQueue;
  else
    fault("unknown selection kind: " + sel);
  c.b_msg = j.value("b_msg", c.b_msg);
  c.interarrival_mean = j.value("interarrival", c.interarrival_mean);
  c.hold = j.value("hold", c.hold);
  c.call_cutoff_margin = j.value("cutoff_margin", c.call_cutoff_margin);
  std::string topo = j.value("topology", "random");
  if (topo == "empty")
    c.topology = InitialTopology::Empty;
  else if (topo == "complete")
    c.topology = InitialTopology::Complete;
  else if (topo == "path")
    c.topology = InitialTopology::Path;
  else if (topo == "ring")
    c.topology = InitialTopology::Ring;
  else if (topo == "random")
    c.topology = InitialTopology::Random;
  else
    fault("unknown topology: " + topo);
  c.initial_density = j.value("density", c.initial_density);
  return c;
}

inline std::string canonical_config(const RunConfig& c) { return to_json(c).dump(); }

// Builds the initial snapshot before stage 0. Random uses its own derived
// stream so the edge layout is part of (config, seed).
inline void build_initial_topology(Topology& topo, const RunConfig& cfg) {
  const int n = cfg.nodes;
  switch (cfg.topology) {
    case InitialTopology::Empty:
      break;
    case InitialTopology::Complete:
      for (NodeId u = 0; u < n; ++u)
        for (NodeId v = u + 1; v < n; ++v) topo.connect(u, v);
      break;
    case InitialTopology::Path:
      for (NodeId u = 0; u + 1 < n; ++u) require(topo.connect(u, u + 1), "path exceeds delta");
      break;
    case InitialTopology::Ring:
      require(n >= 3, "ring needs >= 3 nodes");
      for (NodeId u = 0; u < n; ++u) require(topo.connect(u, (u + 1) % n), "ring exceeds delta");
      break;
    case InitialTopology::Random: {
      Rng rng = Rng::derive(cfg.seed, "topology");
      std::int64_t want = static_cast<std::int64_t>(
          cfg.initial_density * n * cfg.delta / 2.0);
      std::int64_t placed = 0, attempts = 0;
      while (placed < want && attempts < 20 * want + 100) {
        ++attempts;
        NodeId u = static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(n)));
        NodeId v = static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(n)));
        if (u == v || topo.live(u, v)) continue;
        if (topo.connect(u, v)) ++placed;
      }
      break;
    }
  }
}

}  // namespace lmx

#pragma once

// Shared helpers for driving small simulations in tests.

#include <map>
#include <vector>

#include "lmx/checker.hpp"
#include "lmx/scheduler.hpp"

namespace lmx_test {

using namespace lmx;

// Per-node scripted lock calls: call stage and hold duration.
class ScriptedWorkload : public WorkloadDriver {
 public:
  ScriptedWorkload& node(NodeId u, std::int64_t call_stage, std::int64_t hold = 3) {
    scripts_[u] = {call_stage, hold};
    return *this;
  }

  void at_boundary(Sim& sim) override {
    for (auto& [u, sc] : scripts_)
      if (sc.call_stage == sim.stage()) sim.call_lock(u);
    for (auto it = unlock_at_.begin(); it != unlock_at_.end();) {
      if (it->second <= sim.stage()) {
        sim.call_unlock(it->first);
        it = unlock_at_.erase(it);
      } else {
        ++it;
      }
    }
  }

  void after_execution(Sim& sim, NodeId u, const ActionExecution& exec,
                       const ActionEffect& eff) override {
    if (eff.has_returned_lock_set) unlock_at_[u] = sim.stage() + scripts_[u].hold;
    if (exec.action == ActionId::CheckUnlocked) completed_cycles.push_back(u);
  }

  std::vector<NodeId> completed_cycles;

 private:
  struct Script {
    std::int64_t call_stage = 0;
    std::int64_t hold = 3;
  };
  std::map<NodeId, Script> scripts_;
  std::map<NodeId, std::int64_t> unlock_at_;
};

inline Sim make_checked_sim(int n, int delta, std::uint64_t seed,
                            ActivationKind act = ActivationKind::All,
                            AdversaryPolicy adv = adversary_static(), int c = 4) {
  ActivationPolicy a;
  a.kind = act;
  return Sim(n, delta, c * delta * delta, a, SelectionPolicy{}, adv, 8, seed);
}

}  // namespace lmx_test

#include "doctest.h"
#include "lmx/core.hpp"
#include "lmx/rng.hpp"

using namespace lmx;

TEST_CASE("port set keeps ascending order and set algebra") {
  PortSet s = PortSet::of({3, 1, 0});
  std::vector<Port> seen;
  for (Port p : s) seen.push_back(p);
  CHECK(seen == std::vector<Port>{0, 1, 3});
  CHECK(s.size() == 3);
  CHECK(s.contains(0));
  CHECK(!s.contains(2));
  CHECK(s.minus(PortSet::of({1})) == PortSet::of({0, 3}));
  CHECK(s.intersect(PortSet::of({1, 2})) == PortSet::of({1}));
  s.remove(3);
  CHECK(s == PortSet::of({0, 1}));
}

TEST_CASE("port map holds at most one entry per label") {
  PortMap<int> m;
  m.put(2, 10);
  m.put(1, 20);
  m.put(2, 30);
  CHECK(m.size() == 2);
  CHECK(*m.find(2) == 30);
  CHECK(m.keys() == PortSet::of({1, 2}));
  CHECK(m.size_minus(PortSet::of({2})) == 1);
  m.erase(1);
  CHECK(m.size() == 1);
  // ascending iteration
  m.put(0, 1);
  std::vector<Port> ks;
  for (const auto& [p, val] : m) ks.push_back(p);
  CHECK(ks == std::vector<Port>{0, 2});
}

TEST_CASE("lock variable encodes unlocked, self, and port holder") {
  CHECK(Lock::unlocked().is_unlocked());
  CHECK(Lock::self().is_self());
  CHECK(Lock::self().is_held());
  CHECK(Lock::by(0) == Lock::self());
  Lock l = Lock::by(3);
  CHECK(l.is_held());
  CHECK(!l.is_self());
  CHECK(l.port() == 3);
}

TEST_CASE("new node vars matches the initial variable table") {
  NodeVars v = new_node_vars(3);
  CHECK(v.lock.is_unlocked());
  CHECK(v.state == NodeState::Idle);
  CHECK(v.phase == Phase::None);
  CHECK(v.targets.empty());
  CHECK(v.replies.empty());
  CHECK(v.verdicts.empty());
  CHECK(v.on_hold.empty());
  CHECK(v.applicants.empty());
  CHECK(v.candidates.empty());
  CHECK(v.priorities.empty());
  CHECK_NOTHROW(check_node_invariants(v, 3));

  // minimal delta has label domain {0, 1}
  NodeVars v1 = new_node_vars(1);
  CHECK(v1 == NodeVars{});

  CHECK_THROWS_AS(new_node_vars(0), SimFault);
  CHECK_THROWS_AS(new_node_vars(-2), SimFault);
}

TEST_CASE("node vars equality is structural") {
  NodeVars a = new_node_vars(2);
  NodeVars b = new_node_vars(2);
  CHECK(a == b);
  b.targets.add(1);
  CHECK(a != b);
  a.targets.add(1);
  CHECK(a == b);
}

TEST_CASE("invariant checks reject overlapping role sets") {
  NodeVars v = new_node_vars(3);
  v.applicants.add(1);
  v.candidates.add(1);
  CHECK_THROWS_AS(check_node_invariants(v, 3), SimFault);
  v = new_node_vars(3);
  v.on_hold.add(2);
  v.applicants.add(2);
  CHECK_THROWS_AS(check_node_invariants(v, 3), SimFault);
  v = new_node_vars(3);
  v.targets.add(5);  // outside {0..3}
  CHECK_THROWS_AS(check_node_invariants(v, 3), SimFault);
}

TEST_CASE("rng streams with equal seeds are identical, derive separates tags") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng s1 = Rng::derive(7, "sched");
  Rng s2 = Rng::derive(7, "sched");
  Rng other = Rng::derive(7, "adversary");
  CHECK(s1.next_u64() == s2.next_u64());
  CHECK(s1.next_u64() != other.next_u64());
}

TEST_CASE("rng below is in range and roughly uniform") {
  Rng r(123);
  int counts[7] = {0};
  for (int i = 0; i < 70000; ++i) {
    auto v = r.below(7);
    REQUIRE(v < 7);
    ++counts[v];
  }
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}

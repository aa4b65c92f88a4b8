#include "doctest.h"
#include "lmx/network.hpp"

using namespace lmx;

TEST_CASE("connect assigns each endpoint its lowest open port") {
  Topology t(3, 2);
  // occupy port 1 of node 1 first
  REQUIRE(t.connect(1, 2));
  CHECK(t.port_at(1, 2) == 1);
  CHECK(t.port_at(2, 1) == 1);

  // now node 0 has {1,2} free, node 1 only {2}
  REQUIRE(t.connect(0, 1));
  CHECK(t.port_at(0, 1) == 1);
  CHECK(t.port_at(1, 0) == 2);
  CHECK(t.degree(1) == 2);
  CHECK(t.live_ports(1) == PortSet::of({1, 2}));
}

TEST_CASE("connect refuses when a node has no open port") {
  Topology t(4, 1);
  REQUIRE(t.connect(0, 1));
  CHECK(!t.connect(0, 2));  // node 0 saturated: refusal, not fault
  CHECK(!t.live(0, 2));
  CHECK(t.connect(2, 3));
}

TEST_CASE("reconnect gets a fresh assignment and may reuse the old label") {
  Topology t(2, 2);
  REQUIRE(t.connect(0, 1));
  CHECK(t.port_at(0, 1) == 1);
  t.disconnect(0, 1);
  CHECK(!t.live(0, 1));
  REQUIRE(t.connect(0, 1));
  CHECK(t.port_at(0, 1) == 1);  // lowest-free rule reuses the label
}

TEST_CASE("disconnect drops transit both ways and feeds both detectors") {
  Topology t(2, 2);
  TransitStore ts(2);
  DisconnectBuffers db(2);
  REQUIRE(t.connect(0, 1));
  ts.send(0, 1, Message::prepare(), 0);
  ts.send(1, 0, Message::ready(), 0);
  CHECK(ts.in_transit(0, 1) == 1);

  EdgeChange ch = sever_edge(t, ts, db, 0, 1);
  CHECK(!ch.connected);
  CHECK(ts.in_transit(0, 1) == 0);
  CHECK(ts.in_transit(1, 0) == 0);
  CHECK(db.peek(0) == PortSet::of({ch.port_u}));
  CHECK(db.peek(1) == PortSet::of({ch.port_v}));

  // snapshot-and-reset semantics
  CHECK(db.take(0) == PortSet::of({ch.port_u}));
  CHECK(db.peek(0).empty());

  // double disconnect is a fault
  CHECK_THROWS_AS(t.disconnect(0, 1), SimFault);
}

TEST_CASE("disconnect with no transit only updates detectors") {
  Topology t(2, 1);
  TransitStore ts(2);
  DisconnectBuffers db(2);
  REQUIRE(t.connect(0, 1));
  sever_edge(t, ts, db, 0, 1);
  CHECK(db.peek(0) == PortSet::of({1}));
  CHECK(ts.total() == 0);
}

TEST_CASE("send appends to the directed channel, self queue survives churn") {
  Topology t(2, 1);
  TransitStore ts(2);
  DisconnectBuffers db(2);
  REQUIRE(t.connect(0, 1));
  ts.send(0, 1, Message::prepare(), 3);
  CHECK(ts.in_transit(0, 1) == 1);
  CHECK(ts.channel(0, 1)[0].sent_stage == 3);

  ts.send(0, 0, Message::prepare(), 3);  // port 0 self queue
  sever_edge(t, ts, db, 0, 1);
  CHECK(ts.in_transit(0, 1) == 0);
  CHECK(ts.in_transit(0, 0) == 1);  // never lost
}

TEST_CASE("consume removes exactly the chosen message") {
  TransitStore ts(2);
  auto a = ts.send(0, 1, Message::win(true), 0);
  auto b = ts.send(0, 1, Message::win(false), 0);
  TransitMsg m = ts.consume(0, 1, b);
  CHECK(m.msg.verdict == false);
  CHECK(ts.in_transit(0, 1) == 1);
  CHECK(ts.channel(0, 1)[0].uid == a);
  CHECK_THROWS_AS(ts.consume(0, 1, b), SimFault);
}

TEST_CASE("static and zero-rate adversaries change nothing") {
  Topology t(4, 2);
  TransitStore ts(4);
  DisconnectBuffers db(4);
  Rng rng(1);
  CHECK(adversary_step(t, ts, db, adversary_static(), rng).empty());
  CHECK(adversary_step(t, ts, db, adversary_churn(0.0), rng).empty());
}

TEST_CASE("random churn realizes the configured toggle frequency") {
  const int n = 8, delta = 3, stages = 1000;
  const double q = 0.05;
  Topology t(n, delta);
  TransitStore ts(n);
  DisconnectBuffers db(n);
  Rng rng(20240817);
  std::int64_t toggles = 0;
  for (int s = 0; s < stages; ++s) {
    auto changes = adversary_step(t, ts, db, adversary_churn(q), rng);
    toggles += static_cast<std::int64_t>(changes.size());
    for (NodeId u = 0; u < n; ++u) {
      REQUIRE(t.degree(u) <= delta);
      REQUIRE(t.live_ports(u).size() == t.degree(u));
    }
  }
  const double pairs = n * (n - 1) / 2.0;
  double freq = static_cast<double>(toggles) / (pairs * stages);
  CHECK(freq == doctest::Approx(q).epsilon(0.2));  // 0.05 +- 0.01
}

TEST_CASE("targeted adversary severs only frontier edges") {
  Topology t(3, 2);
  TransitStore ts(3);
  DisconnectBuffers db(3);
  REQUIRE(t.connect(0, 1));
  REQUIRE(t.connect(1, 2));
  std::vector<NodeVars> vars(3, new_node_vars(2));
  Rng rng(5);

  // nobody mid-request: nothing to sever
  auto none = adversary_step(t, ts, db, adversary_targeted(1.0), rng, &vars);
  CHECK(none.empty());

  // node 0 requesting over its port to node 1
  vars[0].state = NodeState::Compete;
  vars[0].targets = PortSet::of({0, t.port_at(0, 1)});
  auto cut = adversary_step(t, ts, db, adversary_targeted(1.0), rng, &vars);
  REQUIRE(cut.size() == 1);
  CHECK(!t.live(0, 1));
  CHECK(t.live(1, 2));
}

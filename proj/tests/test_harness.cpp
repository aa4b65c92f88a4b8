#include <cstdio>

#include "doctest.h"
#include "lmx/report.hpp"
#include "lmx/runner.hpp"
#include "lmx/stats.hpp"

using namespace lmx;

namespace {

RunConfig small_config() {
  RunConfig cfg;
  cfg.nodes = 4;
  cfg.delta = 2;
  cfg.stages = 600;
  cfg.seed = 11;
  cfg.adversary = adversary_churn(0.02);
  cfg.interarrival_mean = 30;
  cfg.call_cutoff_margin = 200;
  cfg.topology = InitialTopology::Random;
  return cfg;
}

}  // namespace

TEST_CASE("an isolated node's request succeeds with the singleton lock set") {
  RunConfig cfg;
  cfg.nodes = 1;
  cfg.delta = 1;
  cfg.stages = 120;
  cfg.seed = 3;
  cfg.adversary = adversary_static();
  cfg.interarrival_mean = 10;
  cfg.call_cutoff_margin = 60;
  RunResult res = run(cfg);
  CHECK(res.clean());
  REQUIRE(!res.requests.empty());
  for (const auto& r : res.requests) {
    CHECK(r.done_stage >= 0);
    CHECK(r.persistent.empty());
    CHECK(r.success_stage >= 0);
  }
}

TEST_CASE("two connected nodes requesting both eventually succeed cleanly") {
  RunConfig cfg;
  cfg.nodes = 2;
  cfg.delta = 1;
  cfg.stages = 800;
  cfg.seed = 7;
  cfg.interarrival_mean = 20;
  cfg.call_cutoff_margin = 300;
  cfg.topology = InitialTopology::Complete;
  RunResult res = run(cfg);
  CHECK(res.clean());
  CHECK(res.incomplete_requests == 0);
  int done = 0;
  for (const auto& r : res.requests)
    if (r.done_stage >= 0) ++done;
  CHECK(done >= 10);
}

TEST_CASE("identical config and seed produce byte-identical traces") {
  auto trace_of = [](std::uint64_t seed) {
    RunConfig cfg = small_config();
    cfg.seed = seed;
    LineSink sink(trace_header(canonical_config(cfg)));
    run(cfg, &sink);
    return sink.str();
  };
  std::string a = trace_of(99), b = trace_of(99), c = trace_of(100);
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("request csv regenerated from the trace is bit-identical") {
  RunConfig cfg = small_config();
  LineSink sink(trace_header(canonical_config(cfg)));
  RunResult live = run(cfg, &sink);
  std::string live_csv = requests_to_csv(cfg, live.requests);

  RunResult replayed = replay_trace(sink.lines());
  std::string replay_csv = requests_to_csv(replayed.config, replayed.requests);
  CHECK(live.requests.size() == replayed.requests.size());
  CHECK(live_csv == replay_csv);
  CHECK(replayed.violation_count == live.violation_count);
  CHECK(replayed.defect_count == live.defect_count);
}

TEST_CASE("unlock is called exactly once per granted lock, after the hold") {
  RunConfig cfg = small_config();
  cfg.stages = 800;
  RunResult res = run(cfg);
  CHECK(res.clean());
  int granted = 0;
  for (const auto& r : res.requests) {
    if (r.done_stage < 0) continue;
    ++granted;
    CHECK(r.released_stage >= r.done_stage + cfg.hold);
  }
  CHECK(granted > 0);
}

TEST_CASE("fifo selection policy also runs clean") {
  RunConfig cfg = small_config();
  cfg.selection.kind = SelectionKind::FifoQueue;
  cfg.stages = 400;
  RunResult res = run(cfg);
  CHECK(res.clean());
  CHECK(!res.requests.empty());
}

TEST_CASE("lazy activation with the targeted adversary still completes requests") {
  RunConfig cfg = small_config();
  cfg.activation.kind = ActivationKind::LazyAdversary;
  cfg.adversary = adversary_targeted(0.05);
  cfg.stages = 1500;
  cfg.call_cutoff_margin = 800;
  RunResult res = run(cfg);
  CHECK(res.clean());
  int done = 0;
  for (const auto& r : res.requests)
    if (r.done_stage >= 0) ++done;
  CHECK(done > 0);
}

TEST_CASE("aggregate summarizes and the report renders") {
  RunResult res = run(small_config());
  CellStats cell = aggregate({res});
  CHECK(cell.completed > 0);
  CHECK(cell.open_rounds.mean > 0);
  CHECK(cell.win_frequency.mean > 0);
  std::string table = render_report({cell});
  CHECK(table.find("n=4") != std::string::npos);

  // empty cell list: header only, no rows
  std::string empty = render_report({});
  CHECK(empty.find("n=") == std::string::npos);
}

TEST_CASE("config json round trip is lossless") {
  RunConfig cfg = small_config();
  cfg.selection.kind = SelectionKind::FifoQueue;
  cfg.activation.kind = ActivationKind::LazyAdversary;
  cfg.topology = InitialTopology::Ring;
  RunConfig back = config_from_json(to_json(cfg));
  CHECK(canonical_config(back) == canonical_config(cfg));
}

TEST_CASE("mean and frequency intervals behave") {
  MeanCI m = mean_ci({2, 4, 6, 8});
  CHECK(m.mean == doctest::Approx(5.0));
  CHECK(m.lo < 5.0);
  CHECK(m.hi > 5.0);

  MeanCI f = frequency_ci(50, 100);
  CHECK(f.mean == doctest::Approx(0.5));
  CHECK(f.lo > 0.39);
  CHECK(f.hi < 0.61);
}

TEST_CASE("log-log fit recovers an exact power law") {
  std::vector<double> xs = {4, 8, 16, 32};
  std::vector<double> ys;
  for (double x : xs) ys.push_back(3.0 * std::pow(x, 1.25));
  LinearFit f = fit_loglog(xs, ys);
  CHECK(f.slope == doctest::Approx(1.25).epsilon(1e-9));
}

TEST_CASE("closed-form bounds match independently computed values") {
  // (1 - 1/16)^8 / 8 and friends, computed externally
  CHECK(win_probability_bound(2, 16) == doctest::Approx(0.074589934229152277).epsilon(1e-12));
  CHECK(win_probability_bound(3, 36) == doctest::Approx(0.033458562593517024).epsilon(1e-12));
  CHECK(expected_trials_bound(2, 16) == doctest::Approx(13.406634693199207).epsilon(1e-12));
  CHECK(request_rounds_bound(16, 2, 4.0) == doctest::Approx(27891.205923420621).epsilon(1e-12));
  CHECK(trial_rounds_bound(3, 2) == doctest::Approx(2 * 2 * (10 * 3 + 20)));
}

TEST_CASE("trace lines round-trip through parse") {
  Rng rng(8);
  for (int i = 0; i < 500; ++i) {
    SimEvent e;
    switch (rng.below(5)) {
      case 0:
        e = SimEvent::stage_boundary(static_cast<std::int64_t>(rng.below(100000)),
                                     static_cast<std::int64_t>(rng.below(5000)));
        break;
      case 1: {
        EdgeChange ch{rng.bernoulli(0.5), static_cast<NodeId>(rng.below(32)),
                      static_cast<NodeId>(rng.below(32)), static_cast<Port>(1 + rng.below(4)),
                      static_cast<Port>(1 + rng.below(4))};
        e = SimEvent::edge(static_cast<std::int64_t>(rng.below(100000)), ch);
        break;
      }
      case 2:
        e = SimEvent::workload(static_cast<std::int64_t>(rng.below(100000)),
                               static_cast<NodeId>(rng.below(32)), rng.bernoulli(0.5));
        break;
      case 3: {
        ActionExecution exec;
        exec.action = static_cast<ActionId>(rng.below(15));
        if (is_receive(exec.action)) {
          exec.has_message = true;
          exec.from_port = static_cast<Port>(rng.below(5));
          MsgKind k = MsgKind::Prepare;
          for (int m = 0; m < 8; ++m)
            if (receive_action_for(static_cast<MsgKind>(m)) == exec.action)
              k = static_cast<MsgKind>(m);
          exec.message.kind = k;
          if (k == MsgKind::RequestLock) exec.message.priority = static_cast<int>(rng.below(36));
          if (k == MsgKind::Win) exec.message.verdict = rng.bernoulli(0.5);
        }
        ActionEffect eff;
        if (!exec.has_message && rng.bernoulli(0.3))
          eff.drawn_priority = static_cast<int>(rng.below(36));
        e = make_action_event(static_cast<std::int64_t>(rng.below(100000)),
                              static_cast<NodeId>(rng.below(32)), exec, eff);
        break;
      }
      default:
        e = SimEvent::defect(static_cast<std::int64_t>(rng.below(100000)), "note text");
        break;
    }
    auto back = parse_line(to_line(e), e.stage);
    REQUIRE(back.has_value());
    CHECK(back->kind == e.kind);
    CHECK(back->stage == e.stage);
    if (e.kind == EventKind::Action) {
      CHECK(back->node == e.node);
      CHECK(back->action == e.action);
      CHECK(back->has_msg == e.has_msg);
      CHECK(back->payload == e.payload);
      if (e.has_msg) {
        CHECK(back->msg_kind == e.msg_kind);
        CHECK(back->from_port == e.from_port);
      }
    }
    if (e.kind == EventKind::Edge) {
      CHECK(back->u == e.u);
      CHECK(back->v == e.v);
      CHECK(back->connected == e.connected);
    }
    if (e.kind == EventKind::Stage) CHECK(back->round == e.round);
    if (e.kind == EventKind::Workload) {
      CHECK(back->node == e.node);
      CHECK(back->lock_call == e.lock_call);
    }
  }
}

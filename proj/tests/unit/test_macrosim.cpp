#include <gtest/gtest.h>

#include <limits>
#include <set>

#include "flowroute/errors.hpp"
#include "flowroute/macrosim.hpp"
#include "flowroute/scenario.hpp"
#include "oracles.hpp"
#include "trials.hpp"

using namespace flowroute;

namespace {

RoadNetwork single_edge_chain(std::size_t n, double cap, double sigma, double beta) {
  std::vector<EdgeSpec> specs;
  for (std::size_t i = 0; i < n; ++i) specs.push_back({i, i, i + 1, 100, 10, cap, sigma, beta});
  return RoadNetwork::build(specs);
}

RoadNetwork grid(std::uint32_t rows, std::uint32_t cols, std::uint64_t seed, std::int64_t max_cap = 20) {
  ScenarioSpec s;
  s.rows = rows;
  s.cols = cols;
  s.seed = seed;
  s.min_capacity = 2;
  s.max_capacity = max_cap;
  s.queries = 1;
  return generate(s).network;
}

const BprLatency kBpr;

}  // namespace

TEST(Macrosim, LoneRouteGetsFreeFlow) {
  const auto net = single_edge_chain(3, 1, 0.15, 4);
  const std::vector<PathRequest> p{{7, {0, 1, 2, 3}, 500}};
  const auto sim = simulate_full(net, kBpr, p);
  ASSERT_EQ(sim.result.routes.size(), 1u);
  EXPECT_EQ(sim.result.routes[0].times, (std::vector<Ms>{500, 10500, 20500, 30500}));
  EXPECT_EQ(sim.result.total_travel_ms, 30000);
}

TEST(Macrosim, EmptyInput) {
  const auto net = single_edge_chain(1, 1, 0.15, 4);
  const auto sim = simulate_full(net, kBpr, {});
  EXPECT_EQ(sim.result.total_travel_ms, 0);
  EXPECT_EQ(sim.store.route_count(), 0u);
}

TEST(Macrosim, SecondVehicleSeesFirst) {
  // capacity 1, sigma 1, beta 1: the second entrant takes twice free flow
  const auto net = single_edge_chain(1, 1, 1.0, 1.0);
  const std::vector<PathRequest> p{{1, {0, 1}, 0}, {2, {0, 1}, 4000}};
  const auto sim = simulate_full(net, kBpr, p);
  EXPECT_EQ(sim.result.routes[0].travel_ms, 10000);
  EXPECT_EQ(sim.result.routes[1].travel_ms, 20000);
}

TEST(Macrosim, SimultaneousEntriesOrderedById) {
  const auto net = single_edge_chain(1, 1, 1.0, 1.0);
  const std::vector<PathRequest> p{{9, {0, 1}, 0}, {3, {0, 1}, 0}};
  const auto sim = simulate_full(net, kBpr, p);
  EXPECT_EQ(sim.store.route(3).travel_time(), 10000);
  EXPECT_EQ(sim.store.route(9).travel_time(), 20000);
}

TEST(Macrosim, ExitBeforeEntryAtSameInstant) {
  const auto net = single_edge_chain(1, 1, 1.0, 1.0);
  const std::vector<PathRequest> p{{1, {0, 1}, 0}, {2, {0, 1}, 10000}};
  const auto sim = simulate_full(net, kBpr, p);
  EXPECT_EQ(sim.store.route(2).travel_time(), 10000);
}

TEST(Macrosim, InputErrors) {
  const auto net = single_edge_chain(2, 1, 1.0, 1.0);
  EXPECT_THROW(simulate_full(net, kBpr, std::vector<PathRequest>{{1, {0, 2}, 0}}), InvalidPathError);
  EXPECT_THROW(simulate_full(net, kBpr, std::vector<PathRequest>{{1, {0, 9}, 0}}), NotFoundError);
  EXPECT_THROW(simulate_full(net, kBpr, std::vector<PathRequest>{{1, {0, 1}, 0}, {1, {1, 2}, 0}}),
               DuplicateError);
  EXPECT_THROW(simulate_full(net, kBpr, std::vector<PathRequest>{{1, {0, 1}, -1}}), InputError);
}

TEST(Macrosim, FullSimulationMatchesNaiveOracle) {
  const auto net = grid(4, 4, 3, 4);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const auto paths = trials::random_paths(net, rng, 120, 0, 200'000, 8);
    const auto sim = simulate_full(net, kBpr, paths);
    ASSERT_EQ(oracle::schedules_of(sim.store), oracle::simulate(net, kBpr, paths)) << seed;
    sim.store.validate();
  }
}

TEST(Macrosim, SimulationDoesNotDependOnInputOrder) {
  const auto net = grid(4, 4, 5);
  Rng rng(77);
  auto paths = trials::random_paths(net, rng, 200, 0, 100'000, 8);
  const auto a = simulate_full(net, kBpr, paths);
  std::reverse(paths.begin(), paths.end());
  const auto b = simulate_full(net, kBpr, paths);
  EXPECT_TRUE(a.store == b.store);
}

TEST(Macrosim, InsertRipplePattern) {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::kRipplePattern;
  const auto sc = generate(spec);
  std::vector<PathRequest> base;
  StaticRouter router(sc.network);
  for (const auto& q : sc.queries) base.push_back({q.id, router.route(q), q.departure});
  auto sim = simulate_full(sc.network, kBpr, base);
  const EdgeIndex ab = *sc.network.find_edge(0, 1);
  auto exit_on_ab = [&](const RouteStore& s, RouteId id) {
    for (const auto& t : s.traversals(ab))
      if (t.route_id == id) return t.exit;
    return Ms{-1};
  };
  EXPECT_EQ(exit_on_ab(sim.store, 1), 12000);
  EXPECT_EQ(exit_on_ab(sim.store, 3), 26000);
  EXPECT_EQ(exit_on_ab(sim.store, 4), 29000);

  const auto& q = sc.pending_queries.at(0);
  const std::vector<PathRequest> ins{{q.id, router.route(q), q.departure}};
  auto store = sim.store;
  const auto report = insert_routes(store, sc.network, kBpr, ins);
  EXPECT_EQ(exit_on_ab(store, 100), 10000);
  EXPECT_EQ(exit_on_ab(store, 1), 17000);
  EXPECT_EQ(exit_on_ab(store, 3), 26000);
  EXPECT_EQ(exit_on_ab(store, 4), 34000);
  std::vector<RouteId> changed;
  for (const auto& c : report.changed_routes) changed.push_back(c.id);
  EXPECT_EQ(changed, (std::vector<RouteId>{1, 4, 100}));

  // recompute_edge on the pre-insert state reports exactly r1 and r4
  auto probe = sim.store;
  probe.add_route(StoredRoute{100, {0, 1}, {ab}, {0}, {10000}});
  const auto diff = recompute_edge(probe, sc.network, kBpr, ab, 0);
  std::vector<RouteId> ids;
  for (const auto& t : diff) ids.push_back(t.route_id);
  EXPECT_EQ(ids, (std::vector<RouteId>{1, 4}));

  auto expect = ins;
  expect.insert(expect.end(), base.begin(), base.end());
  EXPECT_TRUE(simulate_full(sc.network, kBpr, expect).store == store);
}

TEST(Macrosim, RerouteOntoSharedEdgeDelaysOthers) {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::kRipplePattern;
  const auto sc = generate(spec);
  // r1 on A,C,E; r3 on A,B,D,E shortly after
  std::vector<PathRequest> base{{1, {0, 2, 4}, 2000}, {3, {0, 1, 3, 4}, 5000}};
  auto store = simulate_full(sc.network, kBpr, base).store;
  const Ms before = store.route(3).travel_time();
  const auto report = reroute(store, sc.network, kBpr, 1, {0, 1, 4}, 2000);
  EXPECT_GT(store.route(3).travel_time(), before);
  base[0].vertices = {0, 1, 4};
  EXPECT_TRUE(simulate_full(sc.network, kBpr, base).store == store);
  std::vector<EdgeId> affected;
  for (EdgeIndex e : report.affected_edges) affected.push_back(sc.network.edge(e).id);
  // (A,B), (B,D), (D,E) carry r3's delay; (A,C), (C,E) lose r1; (B,E) gains it
  EXPECT_EQ(affected, (std::vector<EdgeId>{0, 1, 2, 3, 4, 5}));
}

TEST(Macrosim, RerouteToIdenticalPathIsNoop) {
  const auto net = grid(3, 3, 1);
  Rng rng(4);
  const auto paths = trials::random_paths(net, rng, 30, 0, 50'000, 5);
  auto store = simulate_full(net, kBpr, paths).store;
  const auto copy = store;
  const auto report = reroute(store, net, kBpr, 5, paths[5].vertices, paths[5].departure);
  EXPECT_TRUE(report.changed_routes.empty());
  EXPECT_TRUE(store == copy);
}

TEST(Macrosim, DeleteOnlyRouteAndReinsert) {
  const auto net = single_edge_chain(2, 1, 1.0, 1.0);
  const std::vector<PathRequest> p{{1, {0, 1, 2}, 0}};
  auto store = simulate_full(net, kBpr, p).store;
  const auto copy = store;
  const std::vector<RouteId> del{1};
  delete_routes(store, net, kBpr, del);
  EXPECT_EQ(store.route_count(), 0u);
  for (EdgeIndex e = 0; e < 2; ++e) EXPECT_TRUE(store.timeline(e).empty());
  insert_routes(store, net, kBpr, p);
  EXPECT_TRUE(store == copy);
  EXPECT_THROW(delete_routes(store, net, kBpr, std::vector<RouteId>{42}), NotFoundError);
  EXPECT_THROW(insert_routes(store, net, kBpr, p), DuplicateError);
}

TEST(Macrosim, InsertIntoEmptyEqualsSingletonSimulation) {
  const auto net = grid(3, 3, 2);
  RouteStore store(net.edge_count());
  const std::vector<PathRequest> p{{3, {0, 1, 4, 5}, 1234}};
  insert_routes(store, net, kBpr, p);
  EXPECT_TRUE(store == simulate_full(net, kBpr, p).store);
}

TEST(Macrosim, FailedBatchLeavesStoreUntouched) {
  const auto net = grid(3, 3, 2);
  Rng rng(1);
  const auto paths = trials::random_paths(net, rng, 20, 0, 50'000, 5);
  auto store = simulate_full(net, kBpr, paths).store;
  const auto copy = store;
  UpdateBatch bad;
  bad.deletes = {3};
  bad.inserts = {{100, {0, 1, 2}, 0}, {101, {0, 8}, 0}};
  EXPECT_THROW(apply_batch(store, net, kBpr, bad), InvalidPathError);
  EXPECT_TRUE(store == copy);
}

TEST(Macrosim, RandomBatchesMatchFullResimulation) {
  const auto net = grid(6, 6, 9, 6);
  trials::TrialConfig cfg;
  cfg.routes = 250;
  cfg.max_batch = 40;
  cfg.window = 400'000;
  for (std::uint64_t seed = 100; seed < 140; ++seed) {
    const auto r = trials::run_trial(net, kBpr, seed, cfg);
    ASSERT_TRUE(r.ok) << r.message;
  }
}

TEST(Macrosim, TinyCheckpointSpacingStillExact) {
  const auto net = grid(4, 4, 9, 3);
  trials::TrialConfig cfg;
  cfg.routes = 150;
  cfg.checkpoint_spacing = 2;
  cfg.window = 200'000;
  for (std::uint64_t seed = 1; seed < 11; ++seed) {
    const auto r = trials::run_trial(net, kBpr, seed, cfg);
    ASSERT_TRUE(r.ok) << r.message;
  }
}

TEST(Macrosim, WorkerCountDoesNotChangeResult) {
  const auto net = grid(6, 6, 21, 6);
  trials::TrialConfig cfg;
  cfg.routes = 300;
  for (std::uint64_t seed = 1; seed < 6; ++seed) {
    cfg.workers = 1;
    const auto a = trials::run_trial(net, kBpr, seed, cfg);
    cfg.workers = 8;
    const auto b = trials::run_trial(net, kBpr, seed, cfg);
    ASSERT_TRUE(a.ok && b.ok) << a.message << b.message;
    EXPECT_EQ(a.hash, b.hash);
  }
}

TEST(Macrosim, ParallelInsertEqualsSequential) {
  const auto net = grid(5, 5, 8, 4);
  Rng rng(6);
  const auto base = trials::random_paths(net, rng, 300, 0, 300'000, 8);
  const auto extra = trials::random_paths(net, rng, 60, 1000, 300'000, 8);
  auto s1 = simulate_full(net, kBpr, base).store;
  auto s8 = s1;
  insert_routes(s1, net, kBpr, extra);
  insert_routes_batch_parallel(s8, net, kBpr, extra, 8);
  EXPECT_TRUE(s1 == s8);
}

TEST(Macrosim, RecomputeEdgeMatchesSingleEdgeReplay) {
  // One edge, arbitrary entries: replaying from t0 equals a from-scratch
  // single-edge replay.
  const auto net = single_edge_chain(1, 2, 0.8, 2);
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    RouteStore store(1);
    std::vector<oracle::Interval> entries;
    for (RouteId id = 0; id < 60; ++id) {
      const Ms t = static_cast<Ms>(rng.below(100'000));
      // deliberately wrong exits; recompute must fix them
      store.add_route(StoredRoute{id, {0, 1}, {0}, {t}, {t + 1 + static_cast<Ms>(rng.below(5000))}});
      entries.push_back({id, 0, t, 0});
    }
    recompute_edge(store, net, kBpr, 0, std::numeric_limits<Ms>::min());
    const auto want = oracle::replay_edge(net.edge(0).attrs, kBpr, 0, entries);
    for (const auto& w : want) ASSERT_EQ(store.route(w.route_id).exit[0], w.exit);
  }
}

TEST(Macrosim, RecomputeAfterLastEntryIsEmpty) {
  const auto net = single_edge_chain(1, 1, 1.0, 1.0);
  const std::vector<PathRequest> p{{1, {0, 1}, 0}, {2, {0, 1}, 10}};
  auto store = simulate_full(net, kBpr, p).store;
  EXPECT_TRUE(recompute_edge(store, net, kBpr, 0, 1'000'000).empty());
}

TEST(Macrosim, PropagateWalksChainInTimeOrder) {
  // One route over three edges; an extra vehicle on the first edge delays it
  // and the change must flow through all three.
  const auto net = single_edge_chain(3, 1, 1.0, 1.0);
  const std::vector<PathRequest> p{{1, {0, 1, 2, 3}, 100}};
  auto store = simulate_full(net, kBpr, p).store;
  store.add_route(StoredRoute{50, {0, 1}, {0}, {0}, {10000}});  // blocker, not yet propagated
  const std::vector<DirtyMark> marks{{0, 0}};
  UpdateOptions opts;
  opts.trace = true;
  const auto report = propagate(store, net, kBpr, marks, opts);
  ASSERT_EQ(report.replay_trace.size(), 3u);
  EXPECT_EQ(report.replay_trace[0].second, 0u);
  EXPECT_EQ(report.replay_trace[1].second, 1u);
  EXPECT_EQ(report.replay_trace[2].second, 2u);
  EXPECT_LT(report.replay_trace[0].first, report.replay_trace[1].first);
  EXPECT_LT(report.replay_trace[1].first, report.replay_trace[2].first);
  EXPECT_EQ(store.route(1).schedule(), (std::vector<Ms>{100, 20100, 30100, 40100}));
}

TEST(Macrosim, ReportJson) {
  const auto net = single_edge_chain(1, 1, 1.0, 1.0);
  RouteStore store(1);
  const std::vector<PathRequest> p{{1, {0, 1}, 0}};
  const auto report = insert_routes(store, net, kBpr, p);
  EXPECT_EQ(report_json(report, net, false),
            "{\"changed_routes\":1,\"affected_edges\":[0],\"recomputed_traversals\":" +
                std::to_string(report.recomputed_traversals) + ",\"wall_ms\":0}");
}

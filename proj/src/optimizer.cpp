#include "flowroute/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "flowroute/errors.hpp"
#include "worker_pool.hpp"

namespace flowroute {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

Ms free_flow_total(const RoadNetwork& network, const StoredRoute& r) {
  Ms total = 0;
  for (EdgeIndex e : r.edges) total += network.edge(e).attrs.free_flow_ms;
  return total;
}

// (route, travel, free-flow) sorted by travel/free-flow descending, then id.
std::vector<RouteId> latency_ranking(const SelectionContext& ctx) {
  struct Row {
    RouteId id;
    Ms travel;
    Ms ff;
  };
  std::vector<Row> rows;
  for (RouteId id : ctx.store.route_ids()) {
    const auto& r = ctx.store.route(id);
    rows.push_back({id, r.travel_time(), free_flow_total(ctx.network, r)});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    const auto lhs = static_cast<long double>(a.travel) * static_cast<long double>(b.ff);
    const auto rhs = static_cast<long double>(b.travel) * static_cast<long double>(a.ff);
    if (lhs != rhs) return lhs > rhs;
    return a.id < b.id;
  });
  std::vector<RouteId> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.id);
  return out;
}

class RandomStrategy final : public SelectionStrategy {
 public:
  std::vector<RouteId> select(const SelectionContext& ctx, std::size_t quota,
                              Rng& rng) const override {
    auto ids = ctx.store.route_ids();
    quota = std::min(quota, ids.size());
    // partial Fisher-Yates
    for (std::size_t i = 0; i < quota; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(ids.size() - i));
      std::swap(ids[i], ids[j]);
    }
    ids.resize(quota);
    return ids;
  }
};

class LatencyStrategy final : public SelectionStrategy {
 public:
  std::vector<RouteId> select(const SelectionContext& ctx, std::size_t quota,
                              Rng&) const override {
    auto ids = latency_ranking(ctx);
    ids.resize(std::min(quota, ids.size()));
    return ids;
  }
};

class PathStrategy final : public SelectionStrategy {
 public:
  std::vector<RouteId> select(const SelectionContext& ctx, std::size_t quota,
                              Rng&) const override {
    const auto hot = congested_edges(ctx.store, ctx.network, ctx.config.congestion_threshold);
    std::vector<char> is_hot(ctx.network.edge_count(), 0);
    for (const auto& c : hot) is_hot[c.edge] = 1;
    // latency rank breaks ties between equal congested-edge counts
    const auto by_latency = latency_ranking(ctx);
    std::vector<std::pair<std::size_t, RouteId>> rows;  // (count, id) in latency order
    rows.reserve(by_latency.size());
    for (RouteId id : by_latency) {
      const auto& r = ctx.store.route(id);
      std::size_t n = 0;
      for (EdgeIndex e : r.edges) n += is_hot[e];
      rows.emplace_back(n, id);
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<RouteId> out;
    for (std::size_t i = 0; i < rows.size() && out.size() < quota; ++i) out.push_back(rows[i].second);
    return out;
  }
};

class CongestionStrategy final : public SelectionStrategy {
 public:
  std::vector<RouteId> select(const SelectionContext& ctx, std::size_t quota,
                              Rng&) const override {
    std::vector<RouteId> out;
    std::unordered_set<RouteId> taken;
    const auto hot = congested_edges(ctx.store, ctx.network, ctx.config.congestion_threshold);
    for (const auto& c : hot) {
      if (out.size() >= quota) break;
      // vehicles that met the most traffic on this edge go first
      std::vector<std::pair<FlowCount, RouteId>> users;
      for (const auto& t : ctx.store.traversals(c.edge)) {
        if (taken.contains(t.route_id)) continue;
        users.emplace_back(ctx.store.flow_before(c.edge, t.entry, t.route_id, t.hop), t.route_id);
      }
      std::sort(users.begin(), users.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
      });
      for (const auto& [flow, id] : users) {
        if (out.size() >= quota) break;
        if (taken.insert(id).second) out.push_back(id);
      }
    }
    if (out.size() < quota) {
      for (RouteId id : latency_ranking(ctx)) {
        if (out.size() >= quota) break;
        if (taken.insert(id).second) out.push_back(id);
      }
    }
    return out;
  }
};

}  // namespace

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kRandom: return "random";
    case Strategy::kLatency: return "latency";
    case Strategy::kPath: return "path";
    case Strategy::kCongestion: return "congestion";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  for (auto s : {Strategy::kRandom, Strategy::kLatency, Strategy::kPath, Strategy::kCongestion})
    if (to_string(s) == name) return s;
  throw InputError("unknown strategy '" + std::string(name) + "'");
}

void validate(const OptimizerConfig& c) {
  if (!(c.fraction > 0.0 && c.fraction <= 1.0))
    throw InputError("fraction must be in (0, 1]");
  if (!(c.congestion_threshold >= 0.0))
    throw InputError("congestion threshold must be non-negative");
  if (c.checkpoint_spacing == 0) throw InputError("checkpoint spacing must be positive");
}

std::vector<PathRequest> initial_assignment(const RoadNetwork& network, const LatencyModel&,
                                            std::span<const Query> queries) {
  StaticRouter router(network);
  std::vector<PathRequest> out;
  out.reserve(queries.size());
  for (const auto& q : queries) {
    validate_query(network, q);
    try {
      out.push_back(PathRequest{q.id, router.route(q), q.departure});
    } catch (const RoutingError&) {
      throw RoutingError("query " + std::to_string(q.id) + " is unroutable: no path from " +
                         std::to_string(q.origin) + " to " + std::to_string(q.destination));
    }
  }
  return out;
}

std::vector<CongestedEdge> congested_edges(const RouteStore& store, const RoadNetwork& network,
                                           double threshold, std::pair<Ms, Ms> horizon) {
  std::vector<CongestedEdge> out;
  const auto [h0, h1] = horizon;
  for (EdgeIndex e = 0; e < store.edge_count(); ++e) {
    const auto events = store.timeline(e).events();
    if (events.empty()) continue;
    FlowCount running = 0;
    FlowCount peak = 0;
    Ms peak_time = 0;
    bool seen = false;
    if (h0 > events.front().time) {
      peak = store.flow_at(e, h0);
      peak_time = h0;
      seen = true;
    }
    for (std::size_t i = 0; i < events.size();) {
      const Ms t = events[i].time;
      while (i < events.size() && events[i].time == t) running += events[i++].delta();
      if (t < h0) continue;
      if (t >= h1) break;
      if (!seen || running > peak) {
        peak = running;
        peak_time = t;
        seen = true;
      }
    }
    if (!seen || peak <= 0) continue;
    const double occ = static_cast<double>(peak) / network.edge(e).attrs.capacity;
    if (occ > threshold) out.push_back({e, occ, peak_time, peak});
  }
  std::sort(out.begin(), out.end(), [](const CongestedEdge& a, const CongestedEdge& b) {
    if (a.peak_occupancy != b.peak_occupancy) return a.peak_occupancy > b.peak_occupancy;
    return a.edge < b.edge;
  });
  return out;
}

std::unique_ptr<SelectionStrategy> make_strategy(Strategy s) {
  switch (s) {
    case Strategy::kRandom: return std::make_unique<RandomStrategy>();
    case Strategy::kLatency: return std::make_unique<LatencyStrategy>();
    case Strategy::kPath: return std::make_unique<PathStrategy>();
    case Strategy::kCongestion: return std::make_unique<CongestionStrategy>();
  }
  throw InputError("unknown strategy");
}

std::size_t selection_quota(double fraction, std::size_t n) {
  // guard against 0.1 * 2000 landing a hair above 200
  const double raw = fraction * static_cast<double>(n);
  auto q = static_cast<std::size_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
  return std::min(q, n);
}

std::vector<RouteId> select_for_reroute(const RouteStore& store, const RoadNetwork& network,
                                        const OptimizerConfig& config, Rng& rng) {
  validate(config);
  const auto strategy = make_strategy(config.strategy);
  const SelectionContext ctx{network, store, config};
  auto ids = strategy->select(ctx, selection_quota(config.fraction, store.route_count()), rng);
  std::sort(ids.begin(), ids.end());
  return ids;
}

OptimizeResult optimize(const RoadNetwork& network, const LatencyModel& latency,
                        std::span<const Query> queries, const OptimizerConfig& config,
                        const IterationObserver& observer) {
  validate(config);
  OptimizeResult result;
  auto start = Clock::now();

  auto paths = initial_assignment(network, latency, queries);
  auto sim = simulate_full(network, latency, paths, config.checkpoint_spacing);
  RouteStore store = std::move(sim.store);

  auto current_routes = [&store] {
    std::vector<PathRequest> out;
    for (RouteId id : store.route_ids()) {
      const auto& r = store.route(id);
      out.push_back(PathRequest{id, r.vertices, r.departure()});
    }
    return out;
  };

  IterationMetrics m0;
  m0.total_ms = sim.result.total_travel_ms;
  m0.best_ms = m0.total_ms;
  for (EdgeIndex e = 0; e < store.edge_count(); ++e)
    if (!store.traversals(e).empty()) ++m0.affected_edges;
  m0.wall_ms = elapsed_ms(start);
  result.trace.push_back(m0);
  result.best_routes = paths;
  result.best_result = std::move(sim.result);
  if (observer) observer(m0);

  const auto strategy = make_strategy(config.strategy);
  detail::WorkerPool pool(std::max(1u, config.workers));
  Rng rng(config.seed);
  const UpdateOptions update_options{std::max(1u, config.workers), false};

  auto plan = [&](RouteId id) {
    const auto& r = store.route(id);
    const Query q{id, r.vertices.front(), r.vertices.back(), r.departure()};
    return shortest_path_traffic(network, store, latency, q, id);
  };

  for (std::size_t it = 1; it <= config.iterations; ++it) {
    start = Clock::now();
    IterationMetrics m;
    m.iteration = it;

    std::vector<RouteId> selected;
    if (store.route_count() > 0) {
      const SelectionContext ctx{network, store, config};
      selected = strategy->select(ctx, selection_quota(config.fraction, store.route_count()), rng);
      std::sort(selected.begin(), selected.end());
    }
    m.selected = selected.size();

    std::unordered_map<RouteId, Ms> before;
    for (RouteId id : selected) before.emplace(id, store.route(id).travel_time());

    std::vector<RouteId> moved;
    std::vector<EdgeIndex> touched;
    if (!config.sequential_commits) {
      std::vector<std::vector<VertexId>> planned(selected.size());
      pool.run(selected.size(), [&](std::size_t i) { planned[i] = plan(selected[i]); });
      UpdateBatch batch;
      for (std::size_t i = 0; i < selected.size(); ++i) {
        const auto& r = store.route(selected[i]);
        if (planned[i] == r.vertices) continue;
        batch.deletes.push_back(selected[i]);
        batch.inserts.push_back(PathRequest{selected[i], std::move(planned[i]), r.departure()});
        moved.push_back(selected[i]);
      }
      if (!moved.empty()) {
        auto report = apply_batch(store, network, latency, batch, update_options);
        touched = std::move(report.affected_edges);
      }
    } else {
      for (RouteId id : selected) {
        auto path = plan(id);
        const auto& r = store.route(id);
        if (path == r.vertices) continue;
        UpdateBatch batch;
        batch.deletes.push_back(id);
        batch.inserts.push_back(PathRequest{id, std::move(path), r.departure()});
        moved.push_back(id);
        auto report = apply_batch(store, network, latency, batch, update_options);
        touched.insert(touched.end(), report.affected_edges.begin(), report.affected_edges.end());
      }
      std::sort(touched.begin(), touched.end());
      touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    }

    m.reroutes = moved.size();
    for (RouteId id : moved)
      if (store.route(id).travel_time() < before.at(id)) ++m.improved;
    m.affected_edges = touched.size();
    m.total_ms = store.total_travel_time();
    const Ms best = result.trace.back().best_ms;
    m.best_ms = std::min(best, m.total_ms);
    if (m.total_ms < best) {
      result.best_iteration = it;
      result.best_routes = current_routes();
      result.best_result = summarize(store);
    }
    m.wall_ms = elapsed_ms(start);
    result.trace.push_back(m);
    if (observer) observer(m);
  }

  result.final_routes = current_routes();
  result.final_result = summarize(store);
  return result;
}

}  // namespace flowroute

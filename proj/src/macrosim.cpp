#include "flowroute/macrosim.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <map>
#include <queue>
#include <span>
#include <sstream>
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

struct ResolvedPath {
  const PathRequest* request;
  std::vector<EdgeIndex> edges;
};

ResolvedPath resolve(const RoadNetwork& network, const PathRequest& p) {
  if (p.departure < 0)
    throw InputError("route " + std::to_string(p.id) + " has a negative departure");
  try {
    return {&p, network.resolve_path(p.vertices)};
  } catch (const InvalidPathError& e) {
    throw InvalidPathError("route " + std::to_string(p.id) + ": " + e.what());
  } catch (const NotFoundError& e) {
    throw NotFoundError("route " + std::to_string(p.id) + ": " + e.what());
  }
}

struct Label {
  Ms time;
  RouteId route;
  std::uint32_t hop;
  std::uint32_t slot;

  bool operator>(const Label& o) const {
    if (time != o.time) return time > o.time;
    if (route != o.route) return route > o.route;
    return hop > o.hop;
  }
};

}  // namespace

// ------------------------------------------------------------ full simulation

Simulation simulate_full(const RoadNetwork& network, const LatencyModel& latency,
                         std::span<const PathRequest> paths, std::size_t checkpoint_spacing) {
  std::vector<StoredRoute> routes;
  routes.reserve(paths.size());
  {
    std::unordered_set<RouteId> ids;
    ids.reserve(paths.size());
    for (const auto& p : paths) {
      if (!ids.insert(p.id).second) throw DuplicateError("duplicate route id " + std::to_string(p.id));
      auto resolved = resolve(network, p);
      StoredRoute r;
      r.id = p.id;
      r.vertices = p.vertices;
      r.entry.resize(resolved.edges.size());
      r.exit.resize(resolved.edges.size());
      r.edges = std::move(resolved.edges);
      routes.push_back(std::move(r));
    }
  }

  std::vector<FlowCount> on_edge(network.edge_count(), 0);
  std::priority_queue<Label, std::vector<Label>, std::greater<>> labels;
  for (std::uint32_t slot = 0; slot < routes.size(); ++slot)
    labels.push({paths[slot].departure, routes[slot].id, 0, slot});

  std::vector<Label> batch;
  while (!labels.empty()) {
    const Ms now = labels.top().time;
    batch.clear();
    while (!labels.empty() && labels.top().time == now) {
      batch.push_back(labels.top());
      labels.pop();
    }
    // Exits first so capacity freed at `now` is visible to entrants at `now`.
    for (const auto& l : batch) {
      if (l.hop > 0) --on_edge[routes[l.slot].edges[l.hop - 1]];
    }
    for (const auto& l : batch) {
      auto& r = routes[l.slot];
      if (l.hop == r.edges.size()) continue;
      const EdgeIndex e = r.edges[l.hop];
      const Ms duration = latency.travel_time(e, network.edge(e).attrs, on_edge[e], now);
      if (duration < 1) throw InvariantError("latency model returned a non-positive time");
      ++on_edge[e];
      r.entry[l.hop] = now;
      r.exit[l.hop] = now + duration;
      labels.push({now + duration, l.route, l.hop + 1, l.slot});
    }
  }

  Simulation sim{RouteStore::from_routes(network.edge_count(), std::move(routes), checkpoint_spacing),
                 {}};
  sim.result = summarize(sim.store);
  return sim;
}

SimulationResult summarize(const RouteStore& store) {
  SimulationResult result;
  const auto ids = store.route_ids();
  result.routes.reserve(ids.size());
  for (RouteId id : ids) {
    const auto& r = store.route(id);
    RouteOutcome out;
    out.id = id;
    out.vertices = r.vertices;
    out.times = r.schedule();
    out.travel_ms = r.travel_time();
    result.total_travel_ms += out.travel_ms;
    result.routes.push_back(std::move(out));
  }
  return result;
}

// ------------------------------------------------------------ incremental

namespace {

struct SyncRequest {
  RouteId route;
  std::uint32_t hop;
  auto operator<=>(const SyncRequest&) const = default;
};

struct ExitChange {
  RouteId route;
  std::uint32_t hop;
  Ms old_exit;
  Ms new_exit;
};

struct ReplayOutcome {
  std::vector<ExitChange> changes;
  std::vector<SyncRequest> syncs;
  std::size_t recomputed = 0;
};

// Settles a store after edits.
//
// Every edit on an edge registers a pending interval [start, end) outside of
// which no other traversal's observed flow can have changed. Edges are
// replayed in rounds of increasing start time; a replay walks the edge's
// traversals in entry order from the round time and stops once it passes the
// end of every interval it has absorbed, including intervals opened by exit
// changes it makes itself. Exit changes are chained into the route's next hop
// between rounds, which keeps the result independent of the order in which
// edges of one round are replayed.
class Propagator {
 public:
  Propagator(RouteStore& store, const RoadNetwork& network, const LatencyModel& latency,
             const UpdateOptions& options)
      : store_(store),
        network_(network),
        latency_(latency),
        options_(options),
        pending_(network.edge_count()),
        affected_(network.edge_count(), 0) {}

  void delete_route(RouteId id) {
    snapshot(id);
    const StoredRoute removed = store_.remove_route(id);
    for (std::uint32_t h = 0; h < removed.edges.size(); ++h) {
      touch(removed.edges[h]);
      mark(removed.edges[h], removed.entry[h], removed.exit[h]);
    }
  }

  void insert_route(const PathRequest& p, std::vector<EdgeIndex> edges) {
    originals_.try_emplace(p.id, std::nullopt);
    StoredRoute r;
    r.id = p.id;
    r.vertices = p.vertices;
    r.entry.resize(edges.size());
    r.exit.resize(edges.size());
    // Tentative free-flow schedule; propagation settles the real one.
    Ms t = p.departure;
    for (std::size_t h = 0; h < edges.size(); ++h) {
      const EdgeIndex e = edges[h];
      r.entry[h] = t;
      t += std::max<Ms>(1, latency_.travel_time(e, network_.edge(e).attrs, 0, t));
      r.exit[h] = t;
    }
    r.edges = std::move(edges);
    for (std::size_t h = 0; h < r.edges.size(); ++h) {
      touch(r.edges[h]);
      mark(r.edges[h], r.entry[h], r.exit[h]);
    }
    staged_.push_back(std::move(r));
  }

  void mark(EdgeIndex edge, Ms start, Ms end) {
    pending_[edge].emplace(start, end);
    heap_.push({start, edge});
  }

  void run() {
    store_.add_routes(std::move(staged_));
    staged_.clear();
    detail::WorkerPool pool(options_.workers);
    std::vector<EdgeIndex> round;
    std::vector<ReplayOutcome> outcomes;
    const std::size_t guard = 64 * (store_.route_count() + 16) * (network_.edge_count() + 16);
    while (!heap_.empty()) {
      const Ms now = heap_.top().first;
      round.clear();
      while (!heap_.empty() && heap_.top().first == now) {
        const EdgeIndex e = heap_.top().second;
        heap_.pop();
        if (pending_[e].contains(now)) round.push_back(e);
      }
      if (round.empty()) continue;
      std::sort(round.begin(), round.end());
      round.erase(std::unique(round.begin(), round.end()), round.end());
      if (++report_.rounds > guard) throw InvariantError("update propagation did not converge");

      // Reuse per-slot buffers across rounds.
      if (outcomes.size() < round.size()) outcomes.resize(round.size());
      for (std::size_t i = 0; i < round.size(); ++i) {
        outcomes[i].changes.clear();
        outcomes[i].syncs.clear();
        outcomes[i].recomputed = 0;
      }
      pool.run(round.size(), [&](std::size_t i) { replay(round[i], now, true, outcomes[i]); });
      for (std::size_t i = 0; i < round.size(); ++i) {
        if (options_.trace) report_.replay_trace.emplace_back(now, round[i]);
        ++report_.replayed_edges;
      }
      commit(std::span(outcomes.data(), round.size()));
    }
  }

  // Unbounded single-edge replay; chained hops are shifted, marks dropped.
  std::vector<Traversal> replay_once(EdgeIndex edge, Ms from) {
    std::vector<ReplayOutcome> outcomes(1);
    replay(edge, from, /*bounded=*/false, outcomes[0]);
    std::vector<Traversal> changed;
    for (const auto& c : outcomes[0].changes) {
      const auto& r = store_.route(c.route);
      changed.push_back({c.route, c.hop, r.entry[c.hop], c.new_exit});
    }
    commit(outcomes);
    return changed;
  }

  UpdateReport finish() {
    for (auto& [id, original] : originals_) {
      const StoredRoute* now = store_.find_route(id);
      const bool same = original && now && original->vertices == now->vertices &&
                        original->entry == now->entry && original->exit == now->exit;
      if (same || (!original && !now)) continue;
      RouteChange change{id, std::nullopt, std::nullopt};
      if (original) change.old_travel_ms = original->travel_time();
      if (now) change.new_travel_ms = now->travel_time();
      report_.changed_routes.push_back(change);
    }
    std::sort(report_.changed_routes.begin(), report_.changed_routes.end(),
              [](const RouteChange& a, const RouteChange& b) { return a.id < b.id; });
    for (EdgeIndex e = 0; e < affected_.size(); ++e)
      if (affected_[e]) report_.affected_edges.push_back(e);
    return std::move(report_);
  }

 private:
  void snapshot(RouteId id) {
    if (originals_.contains(id)) return;
    if (const auto* r = store_.find_route(id))
      originals_.emplace(id, *r);
    else
      originals_.emplace(id, std::nullopt);
  }

  void touch(EdgeIndex e) { affected_[e] = 1; }

  // Reads and writes only `edge`'s own list, timeline, pending set and the
  // exit slots of hops lying on it; safe to run for distinct edges at once.
  void replay(EdgeIndex edge, Ms from, bool bounded, ReplayOutcome& out) {
    auto& pending = pending_[edge];
    Ms horizon = bounded ? from : kMaxTime;
    auto absorb = [&](Ms upto) {
      while (!pending.empty() && pending.begin()->first <= upto) {
        horizon = std::max(horizon, pending.begin()->second);
        pending.erase(pending.begin());
      }
    };
    absorb(from);

    const auto& attrs = network_.edge(edge).attrs;
    const auto& timeline = store_.timeline(edge);
    const auto first = store_.traversals_from(edge, from);
    std::size_t index = store_.traversals(edge).size() - first.size();
    while (true) {
      const auto list = store_.traversals(edge);
      if (index >= list.size()) {
        if (bounded) absorb(kMaxTime);
        break;
      }
      const Traversal t = list[index];
      if (t.entry >= horizon) {
        absorb(t.entry);
        if (t.entry >= horizon) break;
      }
      const FlowCount flow = timeline.flow_before({t.entry, EventKind::kEntry, t.route_id, t.hop});
      const Ms duration = latency_.travel_time(edge, attrs, flow, t.entry);
      if (duration < 1) throw InvariantError("latency model returned a non-positive time");
      const Ms exit = t.entry + duration;
      ++out.recomputed;
      if (exit != t.exit) {
        store_.set_exit(t.route_id, t.hop, exit);
        out.changes.push_back({t.route_id, t.hop, t.exit, exit});
        if (bounded) horizon = std::max({horizon, t.exit, exit});
      }
      const auto& r = store_.route(t.route_id);
      if (t.hop + 1 < r.hop_count() && r.entry[t.hop + 1] != exit)
        out.syncs.push_back({t.route_id, t.hop});
      ++index;
    }
  }

  // Sequential part of a round: record originals, then pull each changed
  // route's next hop onto its predecessor's exit.
  void commit(std::span<const ReplayOutcome> outcomes) {
    restored_.clear();
    syncs_.clear();
    for (const auto& o : outcomes) {
      report_.recomputed_traversals += o.recomputed;
      for (const auto& c : o.changes) {
        touch(store_.route(c.route).edges[c.hop]);
        if (!originals_.contains(c.route)) restored_.push_back(c);
      }
      syncs_.insert(syncs_.end(), o.syncs.begin(), o.syncs.end());
    }
    // Same round, distinct edges: each (route, hop) appears at most once.
    std::sort(restored_.begin(), restored_.end(),
              [](const ExitChange& a, const ExitChange& b) { return a.route < b.route; });
    for (std::size_t i = 0; i < restored_.size();) {
      const RouteId id = restored_[i].route;
      StoredRoute copy = store_.route(id);
      for (; i < restored_.size() && restored_[i].route == id; ++i)
        copy.exit[restored_[i].hop] = restored_[i].old_exit;
      originals_.emplace(id, std::move(copy));
    }

    std::sort(syncs_.begin(), syncs_.end());
    syncs_.erase(std::unique(syncs_.begin(), syncs_.end()), syncs_.end());
    for (const auto& s : syncs_) chain(s.route, s.hop);
  }

  // Moves hop+1 to start at hop's exit, keeping its duration; later hops are
  // pushed along only as far as needed to keep entries strictly increasing.
  void chain(RouteId id, std::uint32_t hop) {
    const auto& r = store_.route(id);
    std::uint32_t j = hop + 1;
    if (j >= r.hop_count() || r.entry[j] == r.exit[hop]) return;
    snapshot(id);
    Ms new_entry = r.exit[hop];
    while (j < r.hop_count()) {
      const Ms old_entry = r.entry[j];
      const Ms old_exit = r.exit[j];
      const Ms new_exit = new_entry + (old_exit - old_entry);
      const EdgeIndex e = r.edges[j];
      store_.retime_hop(id, j, new_entry, new_exit);
      touch(e);
      mark(e, std::min(old_entry, new_entry), std::max(old_exit, new_exit));
      if (j + 1 >= r.hop_count() || r.entry[j + 1] > new_entry) break;
      new_entry = new_exit;
      ++j;
    }
  }

  RouteStore& store_;
  const RoadNetwork& network_;
  const LatencyModel& latency_;
  UpdateOptions options_;
  std::vector<std::multimap<Ms, Ms>> pending_;
  std::priority_queue<std::pair<Ms, EdgeIndex>, std::vector<std::pair<Ms, EdgeIndex>>,
                      std::greater<>>
      heap_;
  std::unordered_map<RouteId, std::optional<StoredRoute>> originals_;
  std::vector<StoredRoute> staged_;
  std::vector<ExitChange> restored_;  // commit scratch
  std::vector<SyncRequest> syncs_;  // inserts, added in one pass before run()
  std::vector<char> affected_;
  UpdateReport report_;
};

}  // namespace

UpdateReport apply_batch(RouteStore& store, const RoadNetwork& network,
                         const LatencyModel& latency, const UpdateBatch& batch,
                         const UpdateOptions& options) {
  const auto start = Clock::now();
  if (store.edge_count() != network.edge_count())
    throw InputError("store and network disagree on edge count");

  // Validate everything before touching the store.
  std::unordered_set<RouteId> deleting;
  for (RouteId id : batch.deletes) {
    if (!store.contains(id)) throw NotFoundError("unknown route id " + std::to_string(id));
    if (!deleting.insert(id).second)
      throw DuplicateError("route " + std::to_string(id) + " deleted twice");
  }
  std::vector<ResolvedPath> inserts;
  inserts.reserve(batch.inserts.size());
  std::unordered_set<RouteId> inserting;
  for (const auto& p : batch.inserts) {
    if (!inserting.insert(p.id).second || (store.contains(p.id) && !deleting.contains(p.id)))
      throw DuplicateError("duplicate route id " + std::to_string(p.id));
    inserts.push_back(resolve(network, p));
  }

  Propagator prop(store, network, latency, options);
  for (RouteId id : batch.deletes) prop.delete_route(id);
  for (auto& r : inserts) prop.insert_route(*r.request, std::move(r.edges));
  prop.run();
  UpdateReport report = prop.finish();
  report.wall_ms = elapsed_ms(start);
  return report;
}

UpdateReport insert_routes(RouteStore& store, const RoadNetwork& network,
                           const LatencyModel& latency, std::span<const PathRequest> paths) {
  return apply_batch(store, network, latency, {{}, {paths.begin(), paths.end()}});
}

UpdateReport insert_routes_batch_parallel(RouteStore& store, const RoadNetwork& network,
                                          const LatencyModel& latency,
                                          std::span<const PathRequest> paths, unsigned workers) {
  UpdateOptions options;
  options.workers = std::max(1u, workers);
  return apply_batch(store, network, latency, {{}, {paths.begin(), paths.end()}}, options);
}

UpdateReport delete_routes(RouteStore& store, const RoadNetwork& network,
                           const LatencyModel& latency, std::span<const RouteId> ids) {
  return apply_batch(store, network, latency, {{ids.begin(), ids.end()}, {}});
}

UpdateReport reroute(RouteStore& store, const RoadNetwork& network, const LatencyModel& latency,
                     RouteId id, std::vector<VertexId> new_path, Ms new_departure) {
  const auto& current = store.route(id);
  if (current.vertices == new_path && current.departure() == new_departure) {
    network.resolve_path(new_path);
    return {};
  }
  UpdateBatch batch;
  batch.deletes.push_back(id);
  batch.inserts.push_back({id, std::move(new_path), new_departure});
  return apply_batch(store, network, latency, batch);
}

std::vector<Traversal> recompute_edge(RouteStore& store, const RoadNetwork& network,
                                      const LatencyModel& latency, EdgeIndex edge, Ms from) {
  if (edge >= network.edge_count()) throw NotFoundError("unknown edge index " + std::to_string(edge));
  Propagator prop(store, network, latency, {});
  return prop.replay_once(edge, from);
}

UpdateReport propagate(RouteStore& store, const RoadNetwork& network, const LatencyModel& latency,
                       std::span<const DirtyMark> dirty, const UpdateOptions& options) {
  const auto start = Clock::now();
  Propagator prop(store, network, latency, options);
  for (const auto& d : dirty) {
    if (d.edge >= network.edge_count())
      throw InvariantError("dirty mark on unknown edge " + std::to_string(d.edge));
    prop.mark(d.edge, d.time, kMaxTime);
  }
  prop.run();
  UpdateReport report = prop.finish();
  report.wall_ms = elapsed_ms(start);
  return report;
}

std::string report_json(const UpdateReport& report, const RoadNetwork& network,
                        bool include_timing) {
  std::ostringstream out;
  out << "{\"changed_routes\":" << report.changed_routes.size() << ",\"affected_edges\":[";
  for (std::size_t i = 0; i < report.affected_edges.size(); ++i) {
    if (i) out << ',';
    out << network.edge(report.affected_edges[i]).id;
  }
  out << "],\"recomputed_traversals\":" << report.recomputed_traversals;
  out << ",\"wall_ms\":" << (include_timing ? report.wall_ms : 0.0) << '}';
  return out.str();
}

}  // namespace flowroute

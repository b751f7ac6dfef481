#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowroute/flow_store.hpp"
#include "flowroute/latency.hpp"
#include "flowroute/network.hpp"
#include "flowroute/types.hpp"

namespace flowroute {

/// A route to simulate: vertex sequence plus departure time.
struct PathRequest {
  RouteId id = 0;
  std::vector<VertexId> vertices;
  Ms departure = 0;

  bool operator==(const PathRequest&) const = default;
};

struct RouteOutcome {
  RouteId id = 0;
  std::vector<VertexId> vertices;
  std::vector<Ms> times;  // timestamp at each vertex
  Ms travel_ms = 0;
};

struct SimulationResult {
  std::vector<RouteOutcome> routes;  // ascending id
  Ms total_travel_ms = 0;
};

struct Simulation {
  RouteStore store;
  SimulationResult result;
};

/// Event-ordered macroscopic simulation from scratch.
///
/// Labels (t, route, hop) are processed in time order. At each timestamp all
/// exits are applied before any entry; entries at the same timestamp are
/// ordered by (route, hop). A vehicle entering an edge gets
/// latency(flow excluding itself) and is re-queued at its exit time.
///
/// Throws InvalidPathError / NotFoundError for malformed paths,
/// DuplicateError for repeated ids and InputError for negative departures.
Simulation simulate_full(const RoadNetwork& network, const LatencyModel& latency,
                         std::span<const PathRequest> paths,
                         std::size_t checkpoint_spacing = kDefaultCheckpointSpacing);

SimulationResult summarize(const RouteStore& store);

struct RouteChange {
  RouteId id = 0;
  std::optional<Ms> old_travel_ms;  // empty for inserted routes
  std::optional<Ms> new_travel_ms;  // empty for deleted routes
};

struct UpdateReport {
  std::vector<RouteChange> changed_routes;  // ascending id, each at most once
  std::vector<EdgeIndex> affected_edges;    // ascending
  std::size_t recomputed_traversals = 0;
  std::size_t replayed_edges = 0;  // edge replays performed
  std::size_t rounds = 0;
  double wall_ms = 0.0;
  /// (round time, edge) of every replay, in processing order. Filled only
  /// when UpdateOptions::trace is set.
  std::vector<std::pair<Ms, EdgeIndex>> replay_trace;
};

struct UpdateOptions {
  unsigned workers = 1;
  bool trace = false;
};

/// Deletes and insertions applied together; an id present in both is a
/// re-route.
struct UpdateBatch {
  std::vector<RouteId> deletes;
  std::vector<PathRequest> inserts;
};

/// Incremental update. The resulting store equals simulate_full on the final
/// route set, timestamp for timestamp.
UpdateReport apply_batch(RouteStore& store, const RoadNetwork& network,
                         const LatencyModel& latency, const UpdateBatch& batch,
                         const UpdateOptions& options = {});

UpdateReport insert_routes(RouteStore& store, const RoadNetwork& network,
                           const LatencyModel& latency, std::span<const PathRequest> paths);

/// Same outcome as insert_routes for any worker count.
UpdateReport insert_routes_batch_parallel(RouteStore& store, const RoadNetwork& network,
                                          const LatencyModel& latency,
                                          std::span<const PathRequest> paths, unsigned workers);

UpdateReport delete_routes(RouteStore& store, const RoadNetwork& network,
                           const LatencyModel& latency, std::span<const RouteId> ids);

UpdateReport reroute(RouteStore& store, const RoadNetwork& network, const LatencyModel& latency,
                     RouteId id, std::vector<VertexId> new_path, Ms new_departure);

struct DirtyMark {
  EdgeIndex edge = 0;
  Ms time = 0;  // earliest change
};

/// Replays every traversal of `edge` entering at or after `from`, in entry
/// order, against the current flow profile. Returns the traversals whose exit
/// changed (with their new exit). Next hops of changed routes are shifted to
/// stay chained but are not themselves re-resolved; use propagate for that.
std::vector<Traversal> recompute_edge(RouteStore& store, const RoadNetwork& network,
                                      const LatencyModel& latency, EdgeIndex edge, Ms from);

/// Drives marks to a settled store, processing the globally earliest change
/// first. Marks carry no extent, so each is replayed to the end of its edge.
UpdateReport propagate(RouteStore& store, const RoadNetwork& network, const LatencyModel& latency,
                       std::span<const DirtyMark> dirty, const UpdateOptions& options = {});

/// {"changed_routes":n,"affected_edges":[ids],"recomputed_traversals":n,"wall_ms":x}
std::string report_json(const UpdateReport& report, const RoadNetwork& network,
                        bool include_timing = true);

}  // namespace flowroute

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "flowroute/flow_store.hpp"
#include "flowroute/latency.hpp"
#include "flowroute/network.hpp"
#include "flowroute/types.hpp"

namespace flowroute {

struct Query {
  RouteId id = 0;
  VertexId origin = 0;
  VertexId destination = 0;
  Ms departure = 0;

  bool operator==(const Query&) const = default;
};

/// Throws InputError when origin == destination or either vertex is unknown.
void validate_query(const RoadNetwork& network, const Query& q);

/// Minimum total free-flow time; among equal-cost paths the lexicographically
/// smallest vertex sequence. Throws RoutingError when unreachable.
std::vector<VertexId> shortest_path_static(const RoadNetwork& network, const Query& q);

/// Caches one reverse free-flow tree per destination, so batches of queries
/// sharing destinations cost one Dijkstra each. Same answers as
/// shortest_path_static. Not thread-safe.
class StaticRouter {
 public:
  explicit StaticRouter(const RoadNetwork& network);
  std::vector<VertexId> route(const Query& q);
  /// Free-flow distance to `destination`, or nullopt when unreachable.
  std::optional<Ms> distance(VertexId origin, VertexId destination);

 private:
  const std::vector<Ms>& tree(VertexIndex destination);

  const RoadNetwork& network_;
  std::vector<std::vector<Ms>> trees_;  // by destination index; empty = not built
};

/// Flow as seen by a what-if traveller: the store with one route's own
/// traversals optionally left out.
struct TrafficView {
  const RouteStore* store = nullptr;
  std::optional<RouteId> exclude;

  FlowCount flow(EdgeIndex edge, Ms t) const;
};

/// Time-dependent label-setting search on arrival times: relaxing (a,b) at
/// arrival time t costs latency(flow_at(store, (a,b), t), t). Ties broken by
/// lexicographic vertex sequence, so on an empty store it agrees with
/// shortest_path_static. Optimal when latencies are FIFO; vehicles never wait
/// at vertices. `exclude` leaves that route's own flow out of the view.
std::vector<VertexId> shortest_path_traffic(const RoadNetwork& network, const RouteStore& store,
                                            const LatencyModel& latency, const Query& q,
                                            std::optional<RouteId> exclude = std::nullopt);

/// Travel time of `path` leaving at `departure`, evaluated hop by hop against
/// the current flow without mutating the store. With `as_route` set, ties at
/// identical entry times are broken exactly as the simulator does for a
/// vehicle with that id.
Ms route_travel_time(const RoadNetwork& network, const RouteStore& store,
                     const LatencyModel& latency, std::span<const VertexId> path, Ms departure,
                     std::optional<RouteId> as_route = std::nullopt);

}  // namespace flowroute

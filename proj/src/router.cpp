#include "flowroute/router.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <queue>
#include <string>

#include "flowroute/errors.hpp"

namespace flowroute {

namespace {

constexpr Ms kUnreached = std::numeric_limits<Ms>::max();
constexpr VertexIndex kNoVertex = std::numeric_limits<VertexIndex>::max();

using HeapItem = std::pair<Ms, VertexIndex>;
using MinHeap = std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>>;

[[noreturn]] void unreachable(const Query& q) {
  throw RoutingError("query " + std::to_string(q.id) + ": destination " +
                     std::to_string(q.destination) + " unreachable from " +
                     std::to_string(q.origin));
}

}  // namespace

void validate_query(const RoadNetwork& network, const Query& q) {
  network.vertex_index(q.origin);
  network.vertex_index(q.destination);
  if (q.origin == q.destination)
    throw InputError("query " + std::to_string(q.id) + " has identical origin and destination");
  if (q.departure < 0) throw InputError("query " + std::to_string(q.id) + " departs before 0");
}

// ------------------------------------------------------------ static

StaticRouter::StaticRouter(const RoadNetwork& network)
    : network_(network), trees_(network.vertex_count()) {}

const std::vector<Ms>& StaticRouter::tree(VertexIndex destination) {
  auto& dist = trees_[destination];
  if (!dist.empty()) return dist;
  dist.assign(network_.vertex_count(), kUnreached);
  MinHeap heap;
  dist[destination] = 0;
  heap.push({0, destination});
  while (!heap.empty()) {
    const auto [d, v] = heap.top();
    heap.pop();
    if (d != dist[v]) continue;
    for (EdgeIndex e : network_.in_edges(v)) {
      const auto& edge = network_.edge(e);
      const Ms cand = d + edge.attrs.free_flow_ms;
      if (cand < dist[edge.from]) {
        dist[edge.from] = cand;
        heap.push({cand, edge.from});
      }
    }
  }
  return dist;
}

std::optional<Ms> StaticRouter::distance(VertexId origin, VertexId destination) {
  const auto& dist = tree(network_.vertex_index(destination));
  const Ms d = dist[network_.vertex_index(origin)];
  if (d == kUnreached) return std::nullopt;
  return d;
}

std::vector<VertexId> StaticRouter::route(const Query& q) {
  validate_query(network_, q);
  const VertexIndex target = network_.vertex_index(q.destination);
  const auto& dist = tree(target);
  VertexIndex at = network_.vertex_index(q.origin);
  if (dist[at] == kUnreached) unreachable(q);
  std::vector<VertexId> path{q.origin};
  // Out-edges are sorted by target id, so the first edge on a shortest path
  // gives the lexicographically smallest continuation.
  while (at != target) {
    VertexIndex next = kNoVertex;
    for (EdgeIndex e : network_.out_edges(at)) {
      const auto& edge = network_.edge(e);
      if (dist[edge.to] != kUnreached && dist[edge.to] + edge.attrs.free_flow_ms == dist[at]) {
        next = edge.to;
        break;
      }
    }
    if (next == kNoVertex) unreachable(q);
    at = next;
    path.push_back(network_.vertex_id(at));
  }
  return path;
}

std::vector<VertexId> shortest_path_static(const RoadNetwork& network, const Query& q) {
  StaticRouter router(network);
  return router.route(q);
}

// ------------------------------------------------------------ traffic-aware

FlowCount TrafficView::flow(EdgeIndex edge, Ms t) const {
  FlowCount f = store->flow_at(edge, t);
  if (exclude) {
    if (const auto* r = store->find_route(*exclude)) {
      for (std::size_t h = 0; h < r->edges.size(); ++h) {
        if (r->edges[h] == edge && r->entry[h] <= t && t < r->exit[h]) --f;
      }
    }
  }
  return f;
}

namespace {

std::vector<VertexIndex> unwind(const std::vector<VertexIndex>& parent, VertexIndex v) {
  std::vector<VertexIndex> seq;
  for (; v != kNoVertex; v = parent[v]) seq.push_back(v);
  std::reverse(seq.begin(), seq.end());
  return seq;
}

}  // namespace

std::vector<VertexId> shortest_path_traffic(const RoadNetwork& network, const RouteStore& store,
                                            const LatencyModel& latency, const Query& q,
                                            std::optional<RouteId> exclude) {
  validate_query(network, q);
  const TrafficView view{&store, exclude};
  const VertexIndex source = network.vertex_index(q.origin);
  const VertexIndex target = network.vertex_index(q.destination);
  const auto n = network.vertex_count();
  std::vector<Ms> arrival(n, kUnreached);
  std::vector<VertexIndex> parent(n, kNoVertex);
  std::vector<char> settled(n, 0);
  MinHeap heap;
  arrival[source] = q.departure;
  heap.push({q.departure, source});

  while (!heap.empty()) {
    const auto [t, v] = heap.top();
    heap.pop();
    if (settled[v] || t != arrival[v]) continue;
    settled[v] = 1;
    if (v == target) break;
    for (EdgeIndex e : network.out_edges(v)) {
      const auto& edge = network.edge(e);
      const VertexIndex w = edge.to;
      if (settled[w]) continue;
      const Ms cand = t + latency.travel_time(e, edge.attrs, view.flow(e, t), t);
      bool take = cand < arrival[w];
      if (!take && cand == arrival[w]) {
        auto mine = unwind(parent, v);
        auto theirs = unwind(parent, parent[w]);
        mine.push_back(w);
        theirs.push_back(w);
        take = std::lexicographical_compare(mine.begin(), mine.end(), theirs.begin(), theirs.end());
      }
      if (take) {
        const bool improved = cand < arrival[w];
        arrival[w] = cand;
        parent[w] = v;
        if (improved) heap.push({cand, w});
      }
    }
  }
  if (arrival[target] == kUnreached) unreachable(q);
  std::vector<VertexId> path;
  for (VertexIndex v : unwind(parent, target)) path.push_back(network.vertex_id(v));
  return path;
}

Ms route_travel_time(const RoadNetwork& network, const RouteStore& store,
                     const LatencyModel& latency, std::span<const VertexId> path, Ms departure,
                     std::optional<RouteId> as_route) {
  const auto edges = network.resolve_path(path);
  Ms t = departure;
  for (std::uint32_t h = 0; h < edges.size(); ++h) {
    const EdgeIndex e = edges[h];
    const FlowCount flow =
        as_route ? store.flow_before(e, t, *as_route, h) : store.flow_at(e, t);
    t += latency.travel_time(e, network.edge(e).attrs, flow, t);
  }
  return t - departure;
}

}  // namespace flowroute

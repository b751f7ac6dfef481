#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <unordered_map>
#include <vector>

#include "flowroute/types.hpp"

namespace flowroute {

class RoadNetwork;

inline constexpr std::size_t kDefaultCheckpointSpacing = 256;

/// One vehicle's occupancy of one edge: the half-open interval [entry, exit).
struct Traversal {
  RouteId route_id = 0;
  std::uint32_t hop = 0;  // position of the edge within its route
  Ms entry = 0;
  Ms exit = 0;

  bool operator==(const Traversal&) const = default;
};

/// Inverted-list order: (entry, route_id, hop).
inline bool entry_order(const Traversal& a, const Traversal& b) {
  if (a.entry != b.entry) return a.entry < b.entry;
  if (a.route_id != b.route_id) return a.route_id < b.route_id;
  return a.hop < b.hop;
}

// Exit sorts before entry at the same millisecond.
enum class EventKind : std::uint8_t { kExit = 0, kEntry = 1 };

struct FlowEvent {
  Ms time = 0;
  EventKind kind = EventKind::kEntry;
  RouteId route_id = 0;
  std::uint32_t hop = 0;

  int delta() const noexcept { return kind == EventKind::kEntry ? 1 : -1; }

  auto operator<=>(const FlowEvent&) const = default;
};

/// Time-ordered flow-change events of one edge with cumulative-count
/// checkpoints every `spacing` events. Checkpoints are repaired eagerly on
/// every edit, so const queries never write and may run concurrently.
class FlowTimeline {
 public:
  explicit FlowTimeline(std::size_t spacing = kDefaultCheckpointSpacing);

  void insert(const FlowEvent& event);
  /// Throws NotFoundError if the event is absent.
  void erase(const FlowEvent& event);
  /// Inserts many events with one merge pass.
  void insert_many(std::vector<FlowEvent> events);
  /// erase(from) then insert(to), but only shifts the events lying between
  /// the two positions.
  void move(const FlowEvent& from, const FlowEvent& to);
  /// Replaces all events (sorted internally).
  void assign(std::vector<FlowEvent> events);

  /// Vehicles on the edge at `t`: entries at exactly t count, exits at t do not.
  FlowCount flow_at(Ms t) const;
  /// Sum of deltas of every event ordered strictly before `probe`. For an
  /// entry probe this is the flow that vehicle observes, excluding itself.
  FlowCount flow_before(const FlowEvent& probe) const;
  /// Sum of deltas of the first `count` events.
  FlowCount prefix(std::size_t count) const;

  std::span<const FlowEvent> events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }

  std::size_t checkpoint_spacing() const noexcept { return spacing_; }
  void set_checkpoint_spacing(std::size_t spacing);
  std::span<const FlowCount> checkpoints() const noexcept { return checkpoints_; }

  /// Smallest running prefix sum (0 when empty).
  FlowCount min_prefix() const;

  /// Equality over the event sequence only; checkpoints are derived.
  bool operator==(const FlowTimeline& other) const { return events_ == other.events_; }

 private:
  void rebuild_checkpoints(std::size_t from_block = 0);

  std::vector<FlowEvent> events_;
  std::vector<FlowCount> checkpoints_;  // checkpoints_[j] = prefix(j * spacing_)
  std::size_t spacing_;
};

/// A route as held by the store. Per-hop entry/exit are stored separately so
/// the update engine can hold tentative schedules; in a settled store
/// entry[h + 1] == exit[h].
struct StoredRoute {
  RouteId id = 0;
  std::vector<VertexId> vertices;
  std::vector<EdgeIndex> edges;
  std::vector<Ms> entry;
  std::vector<Ms> exit;

  std::size_t hop_count() const noexcept { return edges.size(); }
  Ms departure() const { return entry.front(); }
  Ms arrival() const { return exit.back(); }
  Ms travel_time() const { return arrival() - departure(); }
  /// Timestamps at each vertex: departure followed by each hop's exit.
  std::vector<Ms> schedule() const;

  bool operator==(const StoredRoute&) const = default;
};

/// Future-route state: routes by id, and for each edge an inverted list of
/// traversals ordered by entry plus the edge's flow timeline.
///
/// Single writer; readers may run concurrently between mutations.
class RouteStore {
 public:
  explicit RouteStore(std::size_t edge_count = 0,
                      std::size_t checkpoint_spacing = kDefaultCheckpointSpacing);

  /// Bulk construction from fully scheduled routes.
  static RouteStore from_routes(std::size_t edge_count, std::vector<StoredRoute> routes,
                                std::size_t checkpoint_spacing = kDefaultCheckpointSpacing);

  std::size_t edge_count() const noexcept { return edges_.size(); }

  // ---- per-edge queries ----
  FlowCount flow_at(EdgeIndex edge, Ms t) const;
  /// Flow a vehicle entering at `t` with the given identity would observe.
  FlowCount flow_before(EdgeIndex edge, Ms t, RouteId route_id, std::uint32_t hop) const;
  std::span<const Traversal> traversals(EdgeIndex edge) const;
  /// Traversals with entry >= t, ascending by (entry, route_id, hop).
  std::span<const Traversal> traversals_from(EdgeIndex edge, Ms t) const;
  const FlowTimeline& timeline(EdgeIndex edge) const;

  // ---- raw traversal edits (no route bookkeeping) ----
  /// Throws DuplicateError if (route_id, hop) is already on the edge and
  /// InputError if exit <= entry.
  void record_traversal(EdgeIndex edge, const Traversal& traversal);
  /// Throws NotFoundError.
  Traversal remove_traversal(EdgeIndex edge, RouteId route_id, std::uint32_t hop);

  // ---- route-level edits ----
  /// Registers the route and records every hop. Throws DuplicateError.
  void add_route(StoredRoute route);
  /// add_route for each, merging every edge's new traversals in one pass.
  /// Checks all routes before changing anything.
  void add_routes(std::vector<StoredRoute> routes);
  /// Throws NotFoundError.
  StoredRoute remove_route(RouteId id);
  /// Moves one hop to a new interval on its edge.
  void retime_hop(RouteId id, std::uint32_t hop, Ms entry, Ms exit);
  /// Same as retime_hop with the current entry. Touches only the hop's own
  /// edge and route slot, so distinct edges may be updated concurrently.
  void set_exit(RouteId id, std::uint32_t hop, Ms exit);

  const StoredRoute* find_route(RouteId id) const;
  /// Throws NotFoundError.
  const StoredRoute& route(RouteId id) const;
  bool contains(RouteId id) const { return routes_.contains(id); }
  std::size_t route_count() const noexcept { return routes_.size(); }
  std::vector<RouteId> route_ids() const;  // ascending
  Ms total_travel_time() const;

  std::size_t checkpoint_spacing() const noexcept { return spacing_; }
  void set_checkpoint_spacing(std::size_t spacing);

  /// Deterministic FNV-1a digest of routes and per-edge lists.
  std::uint64_t state_hash() const;
  /// Throws InvariantError describing the first violation found.
  void validate() const;
  /// CSV `route_id,hop_index,u,v,entry_ms,exit_ms` ordered by route and hop.
  void dump_csv(std::ostream& out, const RoadNetwork& network) const;

  bool operator==(const RouteStore& other) const;

 private:
  struct EdgeFlow {
    std::vector<Traversal> traversals;  // ordered by entry_order
    FlowTimeline timeline;
  };

  void check_edge(EdgeIndex edge) const;
  void insert_traversal(EdgeIndex edge, const Traversal& t);
  void erase_traversal(EdgeIndex edge, const Traversal& t);
  StoredRoute& mutable_route(RouteId id);

  std::vector<EdgeFlow> edges_;
  std::unordered_map<RouteId, StoredRoute> routes_;
  std::size_t spacing_;
};

}  // namespace flowroute

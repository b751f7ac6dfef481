#include "flowroute/flow_store.hpp"

#include <algorithm>
#include <ostream>
#include <string>
#include <unordered_map>

#include "flowroute/errors.hpp"
#include "flowroute/network.hpp"

namespace flowroute {

// ---------------------------------------------------------------- timeline

FlowTimeline::FlowTimeline(std::size_t spacing) : spacing_(std::max<std::size_t>(1, spacing)) {
  checkpoints_.push_back(0);
}

void FlowTimeline::insert(const FlowEvent& event) {
  const auto it = std::upper_bound(events_.begin(), events_.end(), event);
  const auto pos = static_cast<std::size_t>(it - events_.begin());
  events_.insert(it, event);
  const std::size_t n = events_.size();
  // Checkpoint j covers the first j*K events; the event now sitting at j*K
  // was pushed out of that window.
  for (std::size_t j = pos / spacing_ + 1; j < checkpoints_.size(); ++j)
    checkpoints_[j] += event.delta() - events_[j * spacing_].delta();
  if (n % spacing_ == 0) checkpoints_.push_back(prefix(n - 1) + events_.back().delta());
}

void FlowTimeline::erase(const FlowEvent& event) {
  const auto it = std::lower_bound(events_.begin(), events_.end(), event);
  if (it == events_.end() || *it != event)
    throw NotFoundError("flow event for route " + std::to_string(event.route_id) + " hop " +
                        std::to_string(event.hop) + " not found");
  const auto pos = static_cast<std::size_t>(it - events_.begin());
  const std::size_t old_n = events_.size();
  events_.erase(it);
  if (old_n % spacing_ == 0) checkpoints_.pop_back();
  for (std::size_t j = pos / spacing_ + 1; j < checkpoints_.size(); ++j)
    checkpoints_[j] += events_[j * spacing_ - 1].delta() - event.delta();
}

void FlowTimeline::insert_many(std::vector<FlowEvent> events) {
  if (events.size() < 4) {
    for (const auto& e : events) insert(e);
    return;
  }
  std::sort(events.begin(), events.end());
  const auto old_end = static_cast<std::ptrdiff_t>(events_.size());
  const auto first =
      std::upper_bound(events_.begin(), events_.end(), events.front()) - events_.begin();
  events_.insert(events_.end(), events.begin(), events.end());
  std::inplace_merge(events_.begin() + first, events_.begin() + old_end, events_.end());
  rebuild_checkpoints(static_cast<std::size_t>(first) / spacing_);
}

void FlowTimeline::move(const FlowEvent& from, const FlowEvent& to) {
  const auto it = std::lower_bound(events_.begin(), events_.end(), from);
  if (it == events_.end() || *it != from)
    throw NotFoundError("flow event for route " + std::to_string(from.route_id) + " hop " +
                        std::to_string(from.hop) + " not found");
  const auto p = static_cast<std::size_t>(it - events_.begin());
  auto q = static_cast<std::size_t>(std::upper_bound(events_.begin(), events_.end(), to) -
                                    events_.begin());
  if (q > p) --q;  // index once `from` is gone
  const int d_old = from.delta();
  const int d_new = to.delta();
  if (q > p) {
    std::rotate(events_.begin() + static_cast<std::ptrdiff_t>(p),
                events_.begin() + static_cast<std::ptrdiff_t>(p + 1),
                events_.begin() + static_cast<std::ptrdiff_t>(q + 1));
    events_[q] = to;
    for (std::size_t j = p / spacing_ + 1; j < checkpoints_.size() && j * spacing_ <= q; ++j)
      checkpoints_[j] += events_[j * spacing_ - 1].delta() - d_old;
  } else {
    std::rotate(events_.begin() + static_cast<std::ptrdiff_t>(q),
                events_.begin() + static_cast<std::ptrdiff_t>(p),
                events_.begin() + static_cast<std::ptrdiff_t>(p + 1));
    events_[q] = to;
    for (std::size_t j = q / spacing_ + 1; j < checkpoints_.size() && j * spacing_ <= p; ++j)
      checkpoints_[j] += d_new - events_[j * spacing_].delta();
  }
  if (d_new != d_old) {
    for (std::size_t j = std::max(p, q) / spacing_ + 1; j < checkpoints_.size(); ++j)
      checkpoints_[j] += d_new - d_old;
  }
}

void FlowTimeline::assign(std::vector<FlowEvent> events) {
  std::sort(events.begin(), events.end());
  events_ = std::move(events);
  rebuild_checkpoints();
}

void FlowTimeline::rebuild_checkpoints(std::size_t from_block) {
  // Checkpoints up to from_block are still valid.
  const std::size_t count = events_.size() / spacing_ + 1;
  if (checkpoints_.empty()) from_block = 0;
  from_block = std::min({from_block, checkpoints_.size() - 1, count - 1});
  checkpoints_.resize(count);
  if (from_block == 0) checkpoints_[0] = 0;
  FlowCount running = checkpoints_[from_block];
  for (std::size_t j = from_block + 1; j < count; ++j) {
    for (std::size_t i = (j - 1) * spacing_; i < j * spacing_; ++i) running += events_[i].delta();
    checkpoints_[j] = running;
  }
}

void FlowTimeline::set_checkpoint_spacing(std::size_t spacing) {
  spacing_ = std::max<std::size_t>(1, spacing);
  rebuild_checkpoints();
}

FlowCount FlowTimeline::prefix(std::size_t count) const {
  count = std::min(count, events_.size());
  const std::size_t block = count / spacing_;
  const std::size_t base = block * spacing_;
  // Walk from whichever checkpoint is closer.
  if (count - base > spacing_ / 2 && block + 1 < checkpoints_.size()) {
    FlowCount sum = checkpoints_[block + 1];
    for (std::size_t i = count; i < base + spacing_; ++i) sum -= events_[i].delta();
    return sum;
  }
  FlowCount sum = checkpoints_[block];
  for (std::size_t i = base; i < count; ++i) sum += events_[i].delta();
  return sum;
}

FlowCount FlowTimeline::flow_at(Ms t) const {
  const auto it = std::upper_bound(events_.begin(), events_.end(), t,
                                   [](Ms value, const FlowEvent& e) { return value < e.time; });
  return prefix(static_cast<std::size_t>(it - events_.begin()));
}

FlowCount FlowTimeline::flow_before(const FlowEvent& probe) const {
  const auto it = std::lower_bound(events_.begin(), events_.end(), probe);
  return prefix(static_cast<std::size_t>(it - events_.begin()));
}

FlowCount FlowTimeline::min_prefix() const {
  FlowCount running = 0;
  FlowCount lowest = 0;
  for (const auto& e : events_) {
    running += e.delta();
    lowest = std::min(lowest, running);
  }
  return lowest;
}

// ---------------------------------------------------------------- routes

std::vector<Ms> StoredRoute::schedule() const {
  std::vector<Ms> times;
  times.reserve(exit.size() + 1);
  times.push_back(entry.front());
  times.insert(times.end(), exit.begin(), exit.end());
  return times;
}

// ---------------------------------------------------------------- store

namespace {

FlowEvent entry_event(const Traversal& t) {
  return {t.entry, EventKind::kEntry, t.route_id, t.hop};
}
FlowEvent exit_event(const Traversal& t) { return {t.exit, EventKind::kExit, t.route_id, t.hop}; }

}  // namespace

RouteStore::RouteStore(std::size_t edge_count, std::size_t checkpoint_spacing)
    : spacing_(std::max<std::size_t>(1, checkpoint_spacing)) {
  edges_.resize(edge_count);
  for (auto& e : edges_) e.timeline = FlowTimeline(spacing_);
}

RouteStore RouteStore::from_routes(std::size_t edge_count, std::vector<StoredRoute> routes,
                                   std::size_t checkpoint_spacing) {
  RouteStore store(edge_count, checkpoint_spacing);
  std::vector<std::vector<FlowEvent>> events(edge_count);
  std::vector<std::size_t> counts(edge_count, 0);
  for (const auto& r : routes)
    for (EdgeIndex e : r.edges) {
      if (e >= edge_count) throw NotFoundError("unknown edge index " + std::to_string(e));
      ++counts[e];
    }
  for (EdgeIndex e = 0; e < edge_count; ++e) {
    store.edges_[e].traversals.reserve(counts[e]);
    events[e].reserve(2 * counts[e]);
  }
  store.routes_.reserve(routes.size());
  for (auto& r : routes) {
    for (std::uint32_t h = 0; h < r.edges.size(); ++h) {
      const Traversal t{r.id, h, r.entry[h], r.exit[h]};
      store.edges_[r.edges[h]].traversals.push_back(t);
      events[r.edges[h]].push_back(entry_event(t));
      events[r.edges[h]].push_back(exit_event(t));
    }
    const RouteId id = r.id;
    if (!store.routes_.emplace(id, std::move(r)).second)
      throw DuplicateError("duplicate route id " + std::to_string(id));
  }
  for (EdgeIndex e = 0; e < edge_count; ++e) {
    auto& list = store.edges_[e].traversals;
    std::sort(list.begin(), list.end(), entry_order);
    store.edges_[e].timeline.assign(std::move(events[e]));
  }
  return store;
}

void RouteStore::check_edge(EdgeIndex edge) const {
  if (edge >= edges_.size()) throw NotFoundError("unknown edge index " + std::to_string(edge));
}

void RouteStore::insert_traversal(EdgeIndex edge, const Traversal& t) {
  auto& flow = edges_[edge];
  const auto it = std::upper_bound(flow.traversals.begin(), flow.traversals.end(), t, entry_order);
  flow.traversals.insert(it, t);
  flow.timeline.insert(entry_event(t));
  flow.timeline.insert(exit_event(t));
}

void RouteStore::erase_traversal(EdgeIndex edge, const Traversal& t) {
  auto& flow = edges_[edge];
  const auto it = std::lower_bound(flow.traversals.begin(), flow.traversals.end(), t, entry_order);
  if (it == flow.traversals.end() || it->route_id != t.route_id || it->hop != t.hop ||
      it->entry != t.entry)
    throw InvariantError("traversal of route " + std::to_string(t.route_id) + " hop " +
                         std::to_string(t.hop) + " missing from edge " + std::to_string(edge));
  const Traversal stored = *it;
  flow.traversals.erase(it);
  flow.timeline.erase(entry_event(stored));
  flow.timeline.erase(exit_event(stored));
}

FlowCount RouteStore::flow_at(EdgeIndex edge, Ms t) const {
  check_edge(edge);
  return edges_[edge].timeline.flow_at(t);
}

FlowCount RouteStore::flow_before(EdgeIndex edge, Ms t, RouteId route_id,
                                  std::uint32_t hop) const {
  check_edge(edge);
  return edges_[edge].timeline.flow_before({t, EventKind::kEntry, route_id, hop});
}

std::span<const Traversal> RouteStore::traversals(EdgeIndex edge) const {
  check_edge(edge);
  return edges_[edge].traversals;
}

std::span<const Traversal> RouteStore::traversals_from(EdgeIndex edge, Ms t) const {
  check_edge(edge);
  const auto& list = edges_[edge].traversals;
  const auto it = std::lower_bound(list.begin(), list.end(), t,
                                   [](const Traversal& a, Ms value) { return a.entry < value; });
  return std::span<const Traversal>(list).subspan(static_cast<std::size_t>(it - list.begin()));
}

const FlowTimeline& RouteStore::timeline(EdgeIndex edge) const {
  check_edge(edge);
  return edges_[edge].timeline;
}

void RouteStore::record_traversal(EdgeIndex edge, const Traversal& traversal) {
  check_edge(edge);
  if (traversal.exit <= traversal.entry)
    throw InputError("traversal exit must be after entry");
  for (const auto& t : edges_[edge].traversals) {
    if (t.route_id == traversal.route_id && t.hop == traversal.hop)
      throw DuplicateError("route " + std::to_string(t.route_id) + " hop " +
                           std::to_string(t.hop) + " already recorded on edge");
  }
  insert_traversal(edge, traversal);
}

Traversal RouteStore::remove_traversal(EdgeIndex edge, RouteId route_id, std::uint32_t hop) {
  check_edge(edge);
  const auto& list = edges_[edge].traversals;
  const auto it = std::find_if(list.begin(), list.end(), [&](const Traversal& t) {
    return t.route_id == route_id && t.hop == hop;
  });
  if (it == list.end())
    throw NotFoundError("route " + std::to_string(route_id) + " hop " + std::to_string(hop) +
                        " not recorded on edge " + std::to_string(edge));
  const Traversal removed = *it;
  erase_traversal(edge, removed);
  return removed;
}

namespace {

void check_route_shape(const StoredRoute& route, std::size_t edge_count) {
  const auto hops = route.edges.size();
  if (hops == 0 || route.vertices.size() != hops + 1 || route.entry.size() != hops ||
      route.exit.size() != hops)
    throw InputError("route " + std::to_string(route.id) + " has inconsistent hop arrays");
  for (std::uint32_t h = 0; h < hops; ++h) {
    if (route.edges[h] >= edge_count)
      throw NotFoundError("unknown edge index " + std::to_string(route.edges[h]));
    if (route.exit[h] <= route.entry[h])
      throw InputError("route " + std::to_string(route.id) + " hop exits before entry");
  }
}

}  // namespace

void RouteStore::add_route(StoredRoute route) {
  if (routes_.contains(route.id))
    throw DuplicateError("duplicate route id " + std::to_string(route.id));
  check_route_shape(route, edges_.size());
  for (std::uint32_t h = 0; h < route.edges.size(); ++h)
    insert_traversal(route.edges[h], {route.id, h, route.entry[h], route.exit[h]});
  const RouteId id = route.id;
  routes_.emplace(id, std::move(route));
}

void RouteStore::add_routes(std::vector<StoredRoute> routes) {
  std::unordered_map<RouteId, char> fresh;
  for (const auto& r : routes) {
    if (routes_.contains(r.id) || !fresh.emplace(r.id, 0).second)
      throw DuplicateError("duplicate route id " + std::to_string(r.id));
    check_route_shape(r, edges_.size());
  }
  std::vector<std::pair<EdgeIndex, Traversal>> added;
  for (const auto& r : routes)
    for (std::uint32_t h = 0; h < r.edges.size(); ++h)
      added.push_back({r.edges[h], {r.id, h, r.entry[h], r.exit[h]}});
  std::sort(added.begin(), added.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first < b.first : entry_order(a.second, b.second);
  });
  std::vector<FlowEvent> events;
  for (std::size_t i = 0; i < added.size();) {
    const EdgeIndex edge = added[i].first;
    auto& list = edges_[edge].traversals;
    const auto old_end = static_cast<std::ptrdiff_t>(list.size());
    const auto first =
        std::upper_bound(list.begin(), list.end(), added[i].second, entry_order) - list.begin();
    events.clear();
    for (; i < added.size() && added[i].first == edge; ++i) {
      const auto& t = added[i].second;
      list.push_back(t);
      events.push_back(entry_event(t));
      events.push_back(exit_event(t));
    }
    std::inplace_merge(list.begin() + first, list.begin() + old_end, list.end(), entry_order);
    edges_[edge].timeline.insert_many(std::move(events));
  }
  for (auto& r : routes) {
    const RouteId id = r.id;
    routes_.emplace(id, std::move(r));
  }
}

StoredRoute RouteStore::remove_route(RouteId id) {
  const auto it = routes_.find(id);
  if (it == routes_.end()) throw NotFoundError("unknown route id " + std::to_string(id));
  StoredRoute route = std::move(it->second);
  routes_.erase(it);
  for (std::uint32_t h = 0; h < route.edges.size(); ++h)
    erase_traversal(route.edges[h], {route.id, h, route.entry[h], route.exit[h]});
  return route;
}

StoredRoute& RouteStore::mutable_route(RouteId id) {
  const auto it = routes_.find(id);
  if (it == routes_.end()) throw NotFoundError("unknown route id " + std::to_string(id));
  return it->second;
}

void RouteStore::retime_hop(RouteId id, std::uint32_t hop, Ms entry, Ms exit) {
  auto& r = mutable_route(id);
  if (hop >= r.edges.size()) throw NotFoundError("hop out of range");
  if (exit <= entry) throw InvariantError("retimed hop must keep exit after entry");
  if (r.entry[hop] == entry) {
    set_exit(id, hop, exit);
    return;
  }
  auto& flow = edges_[r.edges[hop]];
  const Traversal old{id, hop, r.entry[hop], r.exit[hop]};
  const Traversal now{id, hop, entry, exit};
  auto& list = flow.traversals;
  const auto it = std::lower_bound(list.begin(), list.end(), old, entry_order);
  if (it == list.end() || it->route_id != id || it->hop != hop)
    throw InvariantError("hop missing from its edge list");
  // Slide the element to its new slot instead of erase + insert.
  const auto target = std::upper_bound(list.begin(), list.end(), now, entry_order);
  if (target > it) {
    std::rotate(it, it + 1, target);
    *(target - 1) = now;
  } else {
    std::rotate(target, it, it + 1);
    *target = now;
  }
  flow.timeline.move(entry_event(old), entry_event(now));
  flow.timeline.move(exit_event(old), exit_event(now));
  r.entry[hop] = entry;
  r.exit[hop] = exit;
}

void RouteStore::set_exit(RouteId id, std::uint32_t hop, Ms exit) {
  auto& r = mutable_route(id);
  if (hop >= r.edges.size()) throw NotFoundError("hop out of range");
  const Ms old_exit = r.exit[hop];
  if (old_exit == exit) return;
  if (exit <= r.entry[hop]) throw InvariantError("exit must stay after entry");
  auto& flow = edges_[r.edges[hop]];
  const Traversal probe{id, hop, r.entry[hop], old_exit};
  const auto it =
      std::lower_bound(flow.traversals.begin(), flow.traversals.end(), probe, entry_order);
  if (it == flow.traversals.end() || it->route_id != id || it->hop != hop)
    throw InvariantError("hop missing from its edge list");
  it->exit = exit;
  flow.timeline.move({old_exit, EventKind::kExit, id, hop}, {exit, EventKind::kExit, id, hop});
  r.exit[hop] = exit;
}

const StoredRoute* RouteStore::find_route(RouteId id) const {
  const auto it = routes_.find(id);
  return it == routes_.end() ? nullptr : &it->second;
}

const StoredRoute& RouteStore::route(RouteId id) const {
  if (const auto* r = find_route(id)) return *r;
  throw NotFoundError("unknown route id " + std::to_string(id));
}

std::vector<RouteId> RouteStore::route_ids() const {
  std::vector<RouteId> ids;
  ids.reserve(routes_.size());
  for (const auto& [id, _] : routes_) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

Ms RouteStore::total_travel_time() const {
  Ms total = 0;
  for (const auto& [_, r] : routes_) total += r.travel_time();
  return total;
}

void RouteStore::set_checkpoint_spacing(std::size_t spacing) {
  spacing_ = std::max<std::size_t>(1, spacing);
  for (auto& e : edges_) e.timeline.set_checkpoint_spacing(spacing_);
}

namespace {

struct Fnv1a {
  std::uint64_t state = 1469598103934665603ULL;
  void mix(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      state ^= (v >> (8 * i)) & 0xffU;
      state *= 1099511628211ULL;
    }
  }
};

}  // namespace

std::uint64_t RouteStore::state_hash() const {
  Fnv1a h;
  h.mix(routes_.size());
  for (RouteId id : route_ids()) {
    const auto& r = routes_.at(id);
    h.mix(id);
    h.mix(r.vertices.size());
    for (VertexId v : r.vertices) h.mix(v);
    for (std::size_t i = 0; i < r.edges.size(); ++i) {
      h.mix(static_cast<std::uint64_t>(r.entry[i]));
      h.mix(static_cast<std::uint64_t>(r.exit[i]));
    }
  }
  h.mix(edges_.size());
  for (const auto& e : edges_) {
    h.mix(e.traversals.size());
    for (const auto& t : e.traversals) {
      h.mix(t.route_id);
      h.mix(t.hop);
      h.mix(static_cast<std::uint64_t>(t.entry));
      h.mix(static_cast<std::uint64_t>(t.exit));
    }
  }
  return h.state;
}

void RouteStore::validate() const {
  auto fail = [](const std::string& msg) { throw InvariantError(msg); };
  std::size_t total_traversals = 0;
  for (EdgeIndex e = 0; e < edges_.size(); ++e) {
    const auto& flow = edges_[e];
    const auto tag = "edge " + std::to_string(e) + ": ";
    if (!std::is_sorted(flow.traversals.begin(), flow.traversals.end(), entry_order))
      fail(tag + "inverted list out of order");
    if (flow.timeline.size() != 2 * flow.traversals.size())
      fail(tag + "timeline event count mismatch");
    if (flow.timeline.min_prefix() < 0) fail(tag + "negative flow prefix");
    if (flow.timeline.prefix(flow.timeline.size()) != 0) fail(tag + "unbalanced timeline");
    for (const auto& t : flow.traversals) {
      if (t.exit <= t.entry) fail(tag + "traversal exit not after entry");
      const auto events = flow.timeline.events();
      if (!std::binary_search(events.begin(), events.end(), entry_event(t)) ||
          !std::binary_search(events.begin(), events.end(), exit_event(t)))
        fail(tag + "traversal without matching events");
    }
    total_traversals += flow.traversals.size();
  }
  std::size_t route_hops = 0;
  for (const auto& [id, r] : routes_) {
    const auto tag = "route " + std::to_string(id) + ": ";
    for (std::uint32_t h = 0; h < r.edges.size(); ++h) {
      const auto& list = edges_[r.edges[h]].traversals;
      const Traversal probe{id, h, r.entry[h], r.exit[h]};
      const auto it = std::lower_bound(list.begin(), list.end(), probe, entry_order);
      if (it == list.end() || !(*it == probe)) fail(tag + "hop not indexed on its edge");
      if (h + 1 < r.edges.size() && r.entry[h + 1] != r.exit[h])
        fail(tag + "hop " + std::to_string(h) + " exit differs from next entry");
    }
    route_hops += r.edges.size();
  }
  if (route_hops != total_traversals) fail("traversals not owned by any route");
}

void RouteStore::dump_csv(std::ostream& out, const RoadNetwork& network) const {
  out << "route_id,hop_index,u,v,entry_ms,exit_ms\n";
  for (RouteId id : route_ids()) {
    const auto& r = routes_.at(id);
    for (std::uint32_t h = 0; h < r.edges.size(); ++h) {
      const auto& edge = network.edge(r.edges[h]);
      out << id << ',' << h << ',' << network.vertex_id(edge.from) << ','
          << network.vertex_id(edge.to) << ',' << r.entry[h] << ',' << r.exit[h] << '\n';
    }
  }
}

bool RouteStore::operator==(const RouteStore& other) const {
  if (edges_.size() != other.edges_.size() || routes_ != other.routes_) return false;
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    if (edges_[e].traversals != other.edges_[e].traversals) return false;
    if (!(edges_[e].timeline == other.edges_[e].timeline)) return false;
  }
  return true;
}

}  // namespace flowroute

#include "flowroute/scenario.hpp"

#include <algorithm>
#include <sstream>

#include "flowroute/errors.hpp"
#include "flowroute/io.hpp"
#include "flowroute/rng.hpp"
#include "flowroute/version.hpp"

namespace flowroute {
namespace {

struct Builder {
  std::vector<EdgeSpec> edges;
  std::vector<VertexId> vertices;

  EdgeIndex add(VertexId u, VertexId v, double length, double speed, double capacity,
                double sigma, double beta) {
    EdgeSpec e;
    e.id = edges.size();
    e.u = u;
    e.v = v;
    e.length_m = length;
    e.speed_limit_mps = speed;
    e.capacity = capacity;
    e.sigma = sigma;
    e.beta = beta;
    edges.push_back(e);
    return static_cast<EdgeIndex>(edges.size() - 1);
  }
};

void require(bool ok, const std::string& what) {
  if (!ok) throw InputError("invalid scenario spec: " + what);
}

void validate_spec(const ScenarioSpec& s) {
  require(s.min_length_m > 0 && s.min_length_m <= s.max_length_m, "length range");
  require(s.min_speed_mps > 0 && s.min_speed_mps <= s.max_speed_mps, "speed range");
  require(s.min_capacity >= 1 && s.min_capacity <= s.max_capacity, "capacity range");
  require(s.sigma >= 0 && s.beta >= 0, "sigma and beta must be non-negative");
  require(s.departure_window_ms > 0, "departure window must be positive");
  switch (s.kind) {
    case ScenarioKind::kGrid:
      require(s.rows > 0 && s.cols > 0, "rows and cols must be positive");
      require(std::uint64_t{s.rows} * s.cols >= 2, "grid needs at least two vertices");
      require(s.queries > 0, "query count must be positive");
      break;
    case ScenarioKind::kBottleneckGrid:
      require(s.rows >= 3 && s.cols >= 4, "bottleneck grid needs rows >= 3 and cols >= 4");
      require(s.queries > 0, "query count must be positive");
      break;
    case ScenarioKind::kTwoCorridor:
      require(s.queries > 0, "query count must be positive");
      break;
    case ScenarioKind::kRipplePattern:
      break;
  }
}

// 4-neighbour grid, bidirectional. Edge ids follow (source id, target id).
template <typename AttrFn>
void build_grid(Builder& b, std::uint32_t rows, std::uint32_t cols, AttrFn&& attrs) {
  for (std::uint32_t r = 0; r < rows; ++r)
    for (std::uint32_t c = 0; c < cols; ++c) b.vertices.push_back(grid_vertex(cols, r, c));
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < cols; ++c) {
      const VertexId u = grid_vertex(cols, r, c);
      // neighbours in ascending id order: up, left, right, down
      if (r > 0) attrs(b, u, grid_vertex(cols, r - 1, c), r, c, r - 1, c);
      if (c > 0) attrs(b, u, grid_vertex(cols, r, c - 1), r, c, r, c - 1);
      if (c + 1 < cols) attrs(b, u, grid_vertex(cols, r, c + 1), r, c, r, c + 1);
      if (r + 1 < rows) attrs(b, u, grid_vertex(cols, r + 1, c), r, c, r + 1, c);
    }
  }
}

Ms draw_departure(Rng& rng, Ms window) { return static_cast<Ms>(rng.below(static_cast<std::uint64_t>(window))); }

VertexId pick(Rng& rng, const std::vector<VertexId>& pool) { return pool[rng.below(pool.size())]; }

std::vector<Query> uniform_queries(Rng& rng, const ScenarioSpec& s,
                                   const std::vector<VertexId>& origins,
                                   const std::vector<VertexId>& destinations) {
  std::vector<Query> out;
  out.reserve(s.queries);
  for (std::uint32_t i = 0; i < s.queries; ++i) {
    Query q;
    q.id = i;
    q.origin = pick(rng, origins);
    do {
      q.destination = pick(rng, destinations);
    } while (q.destination == q.origin);
    q.departure = draw_departure(rng, s.departure_window_ms);
    out.push_back(q);
  }
  return out;
}

// Fraction of queries whose free-flow path satisfies `hit`.
template <typename Pred>
double static_share(const RoadNetwork& net, const std::vector<Query>& queries, Pred&& hit) {
  StaticRouter router(net);
  std::size_t n = 0;
  for (const auto& q : queries)
    if (hit(router.route(q))) ++n;
  return queries.empty() ? 1.0 : static_cast<double>(n) / static_cast<double>(queries.size());
}

void check_share(double share, const char* what) {
  if (share < 0.8)
    throw InvariantError(std::string("hotspot workload routes only ") +
                         std::to_string(share * 100.0) + "% of queries through " + what);
}

}  // namespace

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kGrid: return "grid";
    case ScenarioKind::kBottleneckGrid: return "bottleneck_grid";
    case ScenarioKind::kTwoCorridor: return "two_corridor";
    case ScenarioKind::kRipplePattern: return "fig3_pattern";
  }
  return "?";
}

ScenarioKind parse_scenario_kind(std::string_view name) {
  for (auto k : {ScenarioKind::kGrid, ScenarioKind::kBottleneckGrid, ScenarioKind::kTwoCorridor,
                 ScenarioKind::kRipplePattern})
    if (to_string(k) == name) return k;
  throw InputError("unknown scenario kind '" + std::string(name) + "'");
}

std::string to_string(OdDistribution od) {
  return od == OdDistribution::kUniform ? "uniform" : "hotspot";
}

OdDistribution parse_od(std::string_view name) {
  if (name == "uniform") return OdDistribution::kUniform;
  if (name == "hotspot") return OdDistribution::kHotspot;
  throw InputError("unknown OD distribution '" + std::string(name) + "'");
}

std::string canonical_spec(const ScenarioSpec& s) {
  std::ostringstream out;
  out.precision(17);
  out << "kind=" << to_string(s.kind) << ";rows=" << s.rows << ";cols=" << s.cols
      << ";length=" << s.min_length_m << ".." << s.max_length_m << ";speed=" << s.min_speed_mps
      << ".." << s.max_speed_mps << ";capacity=" << s.min_capacity << ".." << s.max_capacity
      << ";sigma=" << s.sigma << ";beta=" << s.beta << ";queries=" << s.queries
      << ";od=" << to_string(s.od) << ";window=" << s.departure_window_ms << ";seed=" << s.seed;
  return out.str();
}

Scenario generate(const ScenarioSpec& spec) {
  validate_spec(spec);
  Scenario out;
  out.spec = spec;
  Rng rng(spec.seed);
  Builder b;
  std::vector<Query> queries;
  std::optional<EdgeIndex> bottleneck;
  const double sigma = spec.sigma;
  const double beta = spec.beta;

  switch (spec.kind) {
    case ScenarioKind::kGrid: {
      build_grid(b, spec.rows, spec.cols, [&](Builder& bb, VertexId u, VertexId v, auto...) {
        const auto len = rng.between(spec.min_length_m, spec.max_length_m);
        const auto speed = rng.between(spec.min_speed_mps, spec.max_speed_mps);
        const auto cap = rng.between(spec.min_capacity, spec.max_capacity);
        bb.add(u, v, static_cast<double>(len), static_cast<double>(speed),
               static_cast<double>(cap), sigma, beta);
      });
      out.network = RoadNetwork::build(b.edges, b.vertices);
      if (spec.od == OdDistribution::kUniform) {
        queries = uniform_queries(rng, spec, b.vertices, b.vertices);
      } else {
        // Destinations in the central block, origins outside it.
        const std::uint32_t r0 = spec.rows >= 2 ? spec.rows / 2 - 1 : 0;
        const std::uint32_t c0 = spec.cols >= 2 ? spec.cols / 2 - 1 : 0;
        const std::uint32_t r1 = std::min(spec.rows - 1, spec.rows / 2);
        const std::uint32_t c1 = std::min(spec.cols - 1, spec.cols / 2);
        std::vector<VertexId> inside, outside;
        for (std::uint32_t r = 0; r < spec.rows; ++r)
          for (std::uint32_t c = 0; c < spec.cols; ++c)
            (r >= r0 && r <= r1 && c >= c0 && c <= c1 ? inside : outside)
                .push_back(grid_vertex(spec.cols, r, c));
        require(!outside.empty(), "grid too small for a hotspot workload");
        queries = uniform_queries(rng, spec, outside, inside);
        auto in_block = [&](const std::vector<VertexId>& path) {
          return std::any_of(path.begin(), path.end(), [&](VertexId v) {
            return std::find(inside.begin(), inside.end(), v) != inside.end();
          });
        };
        check_share(static_share(out.network, queries, in_block), "the central block");
      }
      break;
    }
    case ScenarioKind::kBottleneckGrid: {
      const std::uint32_t mid_row = spec.rows / 2;
      const std::uint32_t mid_col = spec.cols / 2 - 1;
      const VertexId bu = grid_vertex(spec.cols, mid_row, mid_col);
      const VertexId bv = grid_vertex(spec.cols, mid_row, mid_col + 1);
      const auto len = static_cast<double>(spec.min_length_m);
      build_grid(b, spec.rows, spec.cols,
                 [&](Builder& bb, VertexId u, VertexId v, std::uint32_t ur, std::uint32_t,
                     std::uint32_t vr, std::uint32_t) {
                   const bool fast = ur == mid_row && vr == mid_row;
                   const double speed =
                       static_cast<double>(fast ? spec.max_speed_mps : spec.min_speed_mps);
                   const double cap = static_cast<double>(
                       u == bu && v == bv ? spec.min_capacity : spec.max_capacity);
                   bb.add(u, v, len, speed, cap, sigma, beta);
                 });
      out.network = RoadNetwork::build(b.edges, b.vertices);
      bottleneck = out.network.find_edge(out.network.vertex_index(bu), out.network.vertex_index(bv));
      if (spec.od == OdDistribution::kUniform) {
        queries = uniform_queries(rng, spec, b.vertices, b.vertices);
      } else {
        std::vector<VertexId> west, east;
        for (std::uint32_t r = mid_row - 1; r <= mid_row + 1; ++r) {
          for (std::uint32_t c : {0u, 1u}) west.push_back(grid_vertex(spec.cols, r, c));
          for (std::uint32_t c : {spec.cols - 2, spec.cols - 1})
            east.push_back(grid_vertex(spec.cols, r, c));
        }
        queries = uniform_queries(rng, spec, west, east);
        auto through = [&](const std::vector<VertexId>& path) {
          for (std::size_t i = 0; i + 1 < path.size(); ++i)
            if (path[i] == bu && path[i + 1] == bv) return true;
          return false;
        };
        check_share(static_share(out.network, queries, through), "the bottleneck edge");
      }
      break;
    }
    case ScenarioKind::kTwoCorridor: {
      // S=0, T=1, corridor A = 2,3, corridor B = 4,5.
      b.vertices = {0, 1, 2, 3, 4, 5};
      const auto len = static_cast<double>(spec.min_length_m);
      const auto speed = static_cast<double>(spec.min_speed_mps);
      const auto cap = static_cast<double>(spec.min_capacity);
      for (auto [u, v] : {std::pair<VertexId, VertexId>{0, 2}, {2, 3}, {3, 1}, {0, 4}, {4, 5}, {5, 1}})
        b.add(u, v, len, speed, cap, sigma, beta);
      out.network = RoadNetwork::build(b.edges, b.vertices);
      for (std::uint32_t i = 0; i < spec.queries; ++i)
        queries.push_back(Query{i, 0, 1, draw_departure(rng, spec.departure_window_ms)});
      break;
    }
    case ScenarioKind::kRipplePattern: {
      // A..E = 0..4. Every edge: 10 s free flow, capacity 1, steep linear delay.
      b.vertices = {0, 1, 2, 3, 4};
      for (auto [u, v] : {std::pair<VertexId, VertexId>{0, 1}, {0, 2}, {1, 3}, {1, 4}, {2, 4}, {3, 4}})
        b.add(u, v, 100.0, 10.0, 1.0, 0.5, 1.0);
      out.network = RoadNetwork::build(b.edges, b.vertices);
      queries = {Query{1, 0, 4, 2000}, Query{3, 0, 3, 11000}, Query{4, 0, 4, 14000}};
      out.pending_queries = {Query{100, 0, 4, 0}};
      break;
    }
  }

  out.config_hash = fnv1a(canonical_spec(spec));
  std::ostringstream header;
  header << "# " << kEngineName << ' ' << kEngineVersion << " generator=" << Rng::kAlgorithm
         << " kind=" << to_string(spec.kind) << " seed=" << spec.seed
         << " config=" << hex64(out.config_hash) << '\n';
  out.network_csv = header.str() + write_network_csv(out.network);
  out.queries_csv = write_queries_csv(queries, header.str());
  out.queries = std::move(queries);
  out.bottleneck_edge = bottleneck;
  return out;
}

}  // namespace flowroute

#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <string>
#include <vector>

#include "flowroute/network.hpp"
#include "flowroute/router.hpp"
#include "flowroute/types.hpp"

namespace flowroute {

enum class ScenarioKind {
  kGrid,            // rows x cols, 4-neighbour, random attributes
  kBottleneckGrid,  // grid with a fast centre row whose middle edge is narrow
  kTwoCorridor,     // S -> T over two identical three-edge corridors
  kRipplePattern,   // five-vertex example with a shared single-capacity edge
};

enum class OdDistribution { kUniform, kHotspot };

/// Knobs for synthetic scenarios. For the random grid the attribute ranges
/// are sampled per directed edge. The bottleneck grid is deterministic: every
/// edge has min length, normal edges run at min speed with max capacity, the
/// centre row runs at max speed, and its middle edge gets min capacity.
struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::kGrid;
  std::uint32_t rows = 8;
  std::uint32_t cols = 8;
  std::int64_t min_length_m = 200;
  std::int64_t max_length_m = 600;
  std::int64_t min_speed_mps = 10;
  std::int64_t max_speed_mps = 20;
  std::int64_t min_capacity = 5;
  std::int64_t max_capacity = 20;
  double sigma = kDefaultSigma;
  double beta = kDefaultBeta;
  std::uint32_t queries = 500;
  OdDistribution od = OdDistribution::kUniform;
  Ms departure_window_ms = 3'600'000;
  std::uint64_t seed = 1;
};

struct Scenario {
  ScenarioSpec spec;
  RoadNetwork network;
  std::vector<Query> queries;
  std::string network_csv;  // with provenance comment
  std::string queries_csv;
  std::uint64_t config_hash = 0;
  /// Bottleneck grid only: the narrow centre edge.
  std::optional<EdgeIndex> bottleneck_edge;
  /// Routes a regression scenario inserts after the initial simulation
  /// (fig3_pattern: the late-inserted vehicle). Not written to queries_csv.
  std::vector<Query> pending_queries;
};

/// Deterministic in the spec. Throws InputError for non-positive counts or
/// inverted ranges, and InvariantError if a hotspot scenario fails to
/// concentrate at least 80% of free-flow routes on its target region.
Scenario generate(const ScenarioSpec& spec);

/// Canonical text of the spec; its FNV-1a digest is the config hash.
std::string canonical_spec(const ScenarioSpec& spec);

std::string to_string(ScenarioKind kind);
ScenarioKind parse_scenario_kind(std::string_view name);
std::string to_string(OdDistribution od);
OdDistribution parse_od(std::string_view name);

/// Vertex id of grid cell (r, c).
inline VertexId grid_vertex(std::uint32_t cols, std::uint32_t r, std::uint32_t c) {
  return static_cast<VertexId>(r) * cols + c;
}

}  // namespace flowroute

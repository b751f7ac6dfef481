#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flowroute/types.hpp"

namespace flowroute {

inline constexpr double kDefaultSigma = 0.15;
inline constexpr double kDefaultBeta = 4.0;

struct EdgeAttributes {
  double length_m = 0.0;
  double speed_limit_mps = 0.0;
  double capacity = 1.0;  // threshold capacity phi, vehicles
  double sigma = kDefaultSigma;
  double beta = kDefaultBeta;
  Ms free_flow_ms = 1;

  bool operator==(const EdgeAttributes&) const = default;
};

/// round(1000 * length / speed), floored at 1 ms.
Ms free_flow_time(double length_m, double speed_limit_mps);

/// Builds attributes with the derived free-flow time filled in.
EdgeAttributes make_attributes(double length_m, double speed_limit_mps, double capacity,
                               double sigma = kDefaultSigma, double beta = kDefaultBeta);

struct Edge {
  EdgeId id = 0;
  VertexIndex from = 0;
  VertexIndex to = 0;
  EdgeAttributes attrs;

  bool operator==(const Edge&) const = default;
};

/// One row of the network file before validation.
struct EdgeSpec {
  EdgeId id = 0;
  VertexId u = 0;
  VertexId v = 0;
  double length_m = 0.0;
  double speed_limit_mps = 0.0;
  double capacity = 1.0;
  double sigma = kDefaultSigma;
  double beta = kDefaultBeta;
};

/// Directed road network. Immutable once built; vertex indices follow
/// ascending external id, so out-edge order by target index is also order by
/// target id.
class RoadNetwork {
 public:
  RoadNetwork() = default;

  /// Validates and builds. When `declared_vertices` is given, every edge
  /// endpoint must appear in it; otherwise the vertex set is the union of
  /// endpoints.
  static RoadNetwork build(std::span<const EdgeSpec> edges,
                           std::optional<std::vector<VertexId>> declared_vertices = std::nullopt);

  std::size_t vertex_count() const noexcept { return vertex_ids_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  VertexId vertex_id(VertexIndex v) const { return vertex_ids_.at(v); }
  std::span<const VertexId> vertex_ids() const noexcept { return vertex_ids_; }
  std::optional<VertexIndex> find_vertex(VertexId id) const;
  /// Throws NotFoundError.
  VertexIndex vertex_index(VertexId id) const;

  const Edge& edge(EdgeIndex e) const { return edges_[e]; }
  std::span<const Edge> edges() const noexcept { return edges_; }
  std::optional<EdgeIndex> find_edge(VertexIndex from, VertexIndex to) const;
  std::optional<EdgeIndex> find_edge_by_id(EdgeId id) const;

  /// Out-edges ordered by target vertex ascending.
  std::span<const EdgeIndex> out_edges(VertexIndex v) const;
  /// In-edges ordered by source vertex ascending.
  std::span<const EdgeIndex> in_edges(VertexIndex v) const;

  /// Maps a vertex-id sequence to edge indices. Throws NotFoundError for an
  /// unknown vertex and InvalidPathError for a missing edge or a path with
  /// fewer than two vertices.
  std::vector<EdgeIndex> resolve_path(std::span<const VertexId> vertices) const;

  bool operator==(const RoadNetwork&) const = default;

 private:
  std::vector<VertexId> vertex_ids_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> out_offsets_;
  std::vector<EdgeIndex> out_list_;
  std::vector<std::size_t> in_offsets_;
  std::vector<EdgeIndex> in_list_;
};

/// Parses the network CSV format:
///
///   edge_id,u,v,length_m,speed_limit_mps,capacity[,sigma][,beta][,...]
///
/// Lines starting with `#` are comments. A comment of the form
/// `# vertices: 0 1 2 ...` declares the vertex set explicitly. Unknown extra
/// columns (coordinates, names) are ignored.
RoadNetwork load_network(std::istream& in);
RoadNetwork load_network(std::string_view text);
RoadNetwork load_network_file(const std::filesystem::path& path);

/// Serialises back to the CSV format (sigma and beta always written).
std::string write_network_csv(const RoadNetwork& network);

/// Out-edges of an external vertex id, by ascending target id.
std::vector<Edge> out_edges(const RoadNetwork& network, VertexId v);

}  // namespace flowroute

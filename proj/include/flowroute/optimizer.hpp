#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "flowroute/flow_store.hpp"
#include "flowroute/latency.hpp"
#include "flowroute/macrosim.hpp"
#include "flowroute/network.hpp"
#include "flowroute/rng.hpp"
#include "flowroute/router.hpp"

namespace flowroute {

enum class Strategy { kRandom, kLatency, kPath, kCongestion };

std::string to_string(Strategy s);
Strategy parse_strategy(std::string_view name);

struct OptimizerConfig {
  Strategy strategy = Strategy::kCongestion;
  double fraction = 0.1;  // share of queries re-planned per iteration, (0, 1]
  std::size_t iterations = 10;
  std::uint64_t seed = 1;
  double congestion_threshold = 0.9;  // peak flow / capacity
  /// Commit each re-route before planning the next one instead of planning
  /// the whole selection against one snapshot.
  bool sequential_commits = false;
  unsigned workers = 1;
  std::size_t checkpoint_spacing = kDefaultCheckpointSpacing;
};

/// Throws InputError for fraction outside (0, 1] or a negative threshold.
void validate(const OptimizerConfig& config);

struct IterationMetrics {
  std::size_t iteration = 0;
  Ms total_ms = 0;       // this iterate
  Ms best_ms = 0;        // best total seen so far, including this one
  std::size_t selected = 0;
  std::size_t reroutes = 0;  // selected queries whose path actually changed
  std::size_t improved = 0;  // re-routed queries that ended the iteration faster
  std::size_t affected_edges = 0;
  double wall_ms = 0.0;
};

struct OptimizeResult {
  std::vector<PathRequest> final_routes;
  SimulationResult final_result;
  std::vector<PathRequest> best_routes;
  SimulationResult best_result;
  std::size_t best_iteration = 0;
  std::vector<IterationMetrics> trace;
};

/// One free-flow shortest path per query, departure kept. Throws RoutingError
/// naming the first unroutable query id.
std::vector<PathRequest> initial_assignment(const RoadNetwork& network,
                                            const LatencyModel& latency,
                                            std::span<const Query> queries);

struct CongestedEdge {
  EdgeIndex edge = 0;
  double peak_occupancy = 0.0;  // peak flow / capacity
  Ms peak_time = 0;             // first time the peak is reached
  FlowCount peak_flow = 0;
};

/// Edges whose peak occupancy inside [horizon.first, horizon.second) is
/// strictly above `threshold`, by occupancy descending then edge index.
std::vector<CongestedEdge> congested_edges(
    const RouteStore& store, const RoadNetwork& network, double threshold,
    std::pair<Ms, Ms> horizon = {std::numeric_limits<Ms>::min(), kMaxTime});

struct SelectionContext {
  const RoadNetwork& network;
  const RouteStore& store;
  const OptimizerConfig& config;
};

/// Ranks stored routes for re-planning. Returns at most `quota` distinct ids
/// in priority order.
class SelectionStrategy {
 public:
  virtual ~SelectionStrategy() = default;
  virtual std::vector<RouteId> select(const SelectionContext& ctx, std::size_t quota,
                                      Rng& rng) const = 0;
};

std::unique_ptr<SelectionStrategy> make_strategy(Strategy s);

/// ceil(fraction * n), clamped to n.
std::size_t selection_quota(double fraction, std::size_t n);

/// Picks selection_quota(config.fraction, route_count) stored route ids,
/// returned ascending.
std::vector<RouteId> select_for_reroute(const RouteStore& store, const RoadNetwork& network,
                                        const OptimizerConfig& config, Rng& rng);

/// Called after each iteration's metrics are final, so callers can persist a
/// partial trace if a later iteration throws.
using IterationObserver = std::function<void(const IterationMetrics&)>;

/// Iteration 0 is the selfish assignment. Every later iteration selects,
/// plans each selected query against the current state without its own
/// route, then commits all re-routes through the incremental engine.
/// Re-routes are applied unconditionally; the best iterate is tracked aside.
OptimizeResult optimize(const RoadNetwork& network, const LatencyModel& latency,
                        std::span<const Query> queries, const OptimizerConfig& config,
                        const IterationObserver& observer = {});

}  // namespace flowroute

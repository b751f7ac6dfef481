#pragma once

#include <cstddef>
#include <vector>

#include "flowroute/network.hpp"
#include "flowroute/types.hpp"

namespace flowroute {

/// Maps (edge, flow at entry, entry time) to a traversal time.
///
/// Implementations must return at least the edge's free-flow time and be
/// non-decreasing in flow. `flow` is the number of other vehicles on the edge
/// when the vehicle enters; it never counts the vehicle itself.
class LatencyModel {
 public:
  virtual ~LatencyModel() = default;
  virtual Ms travel_time(EdgeIndex edge, const EdgeAttributes& attrs, FlowCount flow,
                         Ms entry_time) const = 0;
};

/// Hard ceiling on one traversal (about 3 years). Keeps route and fleet
/// totals far from int64 overflow when runaway congestion drives the
/// polynomial term to absurd values.
inline constexpr Ms kMaxLatencyMs = 100'000'000'000;

/// BPR volume-delay function:
///   free_flow * (1 + sigma * (flow / capacity)^beta)
/// rounded half-up to whole milliseconds, minimum 1 ms, at most
/// kMaxLatencyMs. Zero flow always yields exactly the free-flow time.
Ms bpr_travel_time(const EdgeAttributes& attrs, FlowCount flow);

class BprLatency final : public LatencyModel {
 public:
  Ms travel_time(EdgeIndex, const EdgeAttributes& attrs, FlowCount flow, Ms) const override {
    return bpr_travel_time(attrs, flow);
  }
};

inline constexpr FlowCount kDefaultMaxTableFlow = FlowCount{1} << 20;

/// Materialised flow -> time mapping for one edge.
struct LatencyTable {
  EdgeAttributes attrs;
  FlowCount max_flow = 0;
  std::vector<Ms> values;  // values[f] for f in [0, max_flow]
};

enum class OverflowMode {
  kClamp,     // flows past the table reuse the last entry
  kFallback,  // flows past the table are evaluated directly
};

/// Throws ResourceLimitError when max_flow exceeds `cap`, InputError when
/// negative.
LatencyTable materialize(const EdgeAttributes& attrs, FlowCount max_flow,
                         FlowCount cap = kDefaultMaxTableFlow);

Ms table_lookup(const LatencyTable& table, FlowCount flow, OverflowMode mode = OverflowMode::kClamp);

/// Per-edge materialised BPR tables for a whole network.
class MaterializedLatency final : public LatencyModel {
 public:
  MaterializedLatency(const RoadNetwork& network, FlowCount max_flow, OverflowMode mode,
                      FlowCount cap = kDefaultMaxTableFlow);

  Ms travel_time(EdgeIndex edge, const EdgeAttributes& attrs, FlowCount flow,
                 Ms entry_time) const override;

  const LatencyTable& table(EdgeIndex edge) const { return tables_.at(edge); }
  OverflowMode mode() const noexcept { return mode_; }

 private:
  std::vector<LatencyTable> tables_;
  OverflowMode mode_;
};

}  // namespace flowroute

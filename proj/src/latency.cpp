#include "flowroute/latency.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "flowroute/errors.hpp"

namespace flowroute {

Ms bpr_travel_time(const EdgeAttributes& attrs, FlowCount flow) {
  if (flow <= 0) return attrs.free_flow_ms;
  const double ratio = static_cast<double>(flow) / attrs.capacity;
  const double factor = 1.0 + attrs.sigma * std::pow(ratio, attrs.beta);
  const double raw = std::floor(static_cast<double>(attrs.free_flow_ms) * factor + 0.5);
  if (!(raw < static_cast<double>(kMaxLatencyMs))) return kMaxLatencyMs;
  return std::max<Ms>(1, static_cast<Ms>(raw));
}

LatencyTable materialize(const EdgeAttributes& attrs, FlowCount max_flow, FlowCount cap) {
  if (max_flow < 0) throw InputError("max_flow must be non-negative");
  if (max_flow > cap)
    throw ResourceLimitError("latency table of " + std::to_string(max_flow) +
                             " entries exceeds cap " + std::to_string(cap));
  LatencyTable table;
  table.attrs = attrs;
  table.max_flow = max_flow;
  table.values.resize(static_cast<std::size_t>(max_flow) + 1);
  for (FlowCount f = 0; f <= max_flow; ++f)
    table.values[static_cast<std::size_t>(f)] = bpr_travel_time(attrs, f);
  return table;
}

Ms table_lookup(const LatencyTable& table, FlowCount flow, OverflowMode mode) {
  if (flow < 0) flow = 0;
  if (flow <= table.max_flow) return table.values[static_cast<std::size_t>(flow)];
  if (mode == OverflowMode::kFallback) return bpr_travel_time(table.attrs, flow);
  return table.values.back();
}

MaterializedLatency::MaterializedLatency(const RoadNetwork& network, FlowCount max_flow,
                                         OverflowMode mode, FlowCount cap)
    : mode_(mode) {
  tables_.reserve(network.edge_count());
  for (const auto& e : network.edges()) tables_.push_back(materialize(e.attrs, max_flow, cap));
}

Ms MaterializedLatency::travel_time(EdgeIndex edge, const EdgeAttributes&, FlowCount flow,
                                    Ms) const {
  return table_lookup(tables_[edge], flow, mode_);
}

}  // namespace flowroute

#pragma once

#include <cstdint>
#include <limits>

namespace flowroute {

// All engine times are integer milliseconds.
using Ms = std::int64_t;

// Opaque identifiers assigned by input files.
using VertexId = std::uint64_t;
using EdgeId = std::uint64_t;
using RouteId = std::uint64_t;

// Dense internal indices into a loaded RoadNetwork.
using VertexIndex = std::uint32_t;
using EdgeIndex = std::uint32_t;

using FlowCount = std::int64_t;

inline constexpr Ms kMaxTime = std::numeric_limits<Ms>::max();

}  // namespace flowroute

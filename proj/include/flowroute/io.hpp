#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "flowroute/macrosim.hpp"
#include "flowroute/router.hpp"

namespace flowroute {

/// Queries CSV: header `query_id,origin,destination,depart_ms`, `#` comments.
std::vector<Query> load_queries(std::istream& in);
std::vector<Query> load_queries(std::string_view text);
std::vector<Query> load_queries_file(const std::filesystem::path& path);
std::string write_queries_csv(const std::vector<Query>& queries, std::string_view header_comment = {});

/// Per-route schedule CSV: `route_id,hop,vertex,arrive_ms`, hop 0 being the
/// origin at departure.
void write_routes_csv(std::ostream& out, const SimulationResult& result);

/// Stable 64-bit FNV-1a digest, used for config hashes in output headers.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 1469598103934665603ULL);
std::string hex64(std::uint64_t value);

/// `# flowroute 0.1.0 seed=<seed> config=<hex>` line, newline-terminated.
std::string provenance_comment(std::uint64_t seed, std::uint64_t config_hash);

std::string read_file(const std::filesystem::path& path);

}  // namespace flowroute

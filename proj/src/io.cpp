#include "flowroute/io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "csv_util.hpp"
#include "flowroute/errors.hpp"
#include "flowroute/version.hpp"

namespace flowroute {

std::vector<Query> load_queries(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::map<std::string, std::size_t, std::less<>> columns;
  bool have_header = false;
  std::vector<Query> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::is_comment_or_blank(line)) continue;
    const auto fields = detail::split_fields(line);
    if (!have_header) {
      for (std::size_t i = 0; i < fields.size(); ++i) columns.emplace(std::string(fields[i]), i);
      for (const char* required : {"query_id", "origin", "destination", "depart_ms"})
        if (!columns.contains(required))
          throw ParseError(lineno, std::string("header is missing column '") + required + "'");
      have_header = true;
      continue;
    }
    if (fields.size() != columns.size())
      throw ParseError(lineno, "expected " + std::to_string(columns.size()) + " fields, got " +
                                   std::to_string(fields.size()));
    auto unsigned_field = [&](std::string_view name) {
      auto v = detail::parse_number<std::uint64_t>(fields[columns.find(name)->second]);
      if (!v) throw ParseError(lineno, "bad integer in column '" + std::string(name) + "'");
      return *v;
    };
    Query q;
    q.id = unsigned_field("query_id");
    q.origin = unsigned_field("origin");
    q.destination = unsigned_field("destination");
    auto depart = detail::parse_number<Ms>(fields[columns.find("depart_ms")->second]);
    if (!depart || *depart < 0) throw ParseError(lineno, "bad depart_ms");
    q.departure = *depart;
    out.push_back(q);
  }
  if (!have_header) throw ParseError(lineno, "missing header row");
  return out;
}

std::vector<Query> load_queries(std::string_view text) {
  std::istringstream in{std::string(text)};
  return load_queries(in);
}

std::vector<Query> load_queries_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open queries file " + path.string());
  return load_queries(in);
}

std::string write_queries_csv(const std::vector<Query>& queries, std::string_view header_comment) {
  std::ostringstream out;
  out << header_comment;
  out << "query_id,origin,destination,depart_ms\n";
  for (const auto& q : queries)
    out << q.id << ',' << q.origin << ',' << q.destination << ',' << q.departure << '\n';
  return out.str();
}

void write_routes_csv(std::ostream& out, const SimulationResult& result) {
  out << "route_id,hop,vertex,arrive_ms\n";
  for (const auto& r : result.routes) {
    for (std::size_t i = 0; i < r.vertices.size(); ++i)
      out << r.id << ',' << i << ',' << r.vertices[i] << ',' << r.times[i] << '\n';
  }
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string provenance_comment(std::uint64_t seed, std::uint64_t config_hash) {
  std::ostringstream out;
  out << "# " << kEngineName << ' ' << kEngineVersion << " seed=" << seed
      << " config=" << hex64(config_hash) << '\n';
  return out.str();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace flowroute

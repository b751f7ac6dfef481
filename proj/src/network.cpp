#include "flowroute/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "csv_util.hpp"
#include "flowroute/errors.hpp"

namespace flowroute {

Ms free_flow_time(double length_m, double speed_limit_mps) {
  const double ms = std::floor(1000.0 * length_m / speed_limit_mps + 0.5);
  return std::max<Ms>(1, static_cast<Ms>(ms));
}

EdgeAttributes make_attributes(double length_m, double speed_limit_mps, double capacity,
                               double sigma, double beta) {
  EdgeAttributes a;
  a.length_m = length_m;
  a.speed_limit_mps = speed_limit_mps;
  a.capacity = capacity;
  a.sigma = sigma;
  a.beta = beta;
  a.free_flow_ms = free_flow_time(length_m, speed_limit_mps);
  return a;
}

namespace {

void validate_spec(const EdgeSpec& s) {
  const auto tag = "edge " + std::to_string(s.id) + ": ";
  if (!(s.length_m > 0.0) || !std::isfinite(s.length_m))
    throw InputError(tag + "length must be positive");
  if (!(s.speed_limit_mps > 0.0) || !std::isfinite(s.speed_limit_mps))
    throw InputError(tag + "speed limit must be positive");
  if (!(s.capacity >= 1.0) || !std::isfinite(s.capacity))
    throw InputError(tag + "capacity must be at least 1");
  if (!(s.sigma >= 0.0) || !std::isfinite(s.sigma)) throw InputError(tag + "sigma must be >= 0");
  if (!(s.beta >= 0.0) || !std::isfinite(s.beta)) throw InputError(tag + "beta must be >= 0");
  if (s.u == s.v) throw InputError(tag + "self-loop");
}

}  // namespace

RoadNetwork RoadNetwork::build(std::span<const EdgeSpec> specs,
                               std::optional<std::vector<VertexId>> declared) {
  RoadNetwork net;

  std::set<VertexId> vertex_set;
  if (declared) {
    vertex_set.insert(declared->begin(), declared->end());
  }
  std::set<EdgeId> seen_ids;
  std::set<std::pair<VertexId, VertexId>> seen_pairs;
  for (const auto& s : specs) {
    validate_spec(s);
    if (!seen_ids.insert(s.id).second)
      throw DuplicateError("duplicate edge id " + std::to_string(s.id));
    if (!seen_pairs.insert({s.u, s.v}).second)
      throw DuplicateError("duplicate edge (" + std::to_string(s.u) + "," + std::to_string(s.v) +
                           ")");
    if (declared) {
      for (VertexId end : {s.u, s.v}) {
        if (!vertex_set.contains(end))
          throw NotFoundError("edge " + std::to_string(s.id) + " references undeclared vertex " +
                              std::to_string(end));
      }
    } else {
      vertex_set.insert(s.u);
      vertex_set.insert(s.v);
    }
  }

  net.vertex_ids_.assign(vertex_set.begin(), vertex_set.end());
  net.edges_.reserve(specs.size());
  for (const auto& s : specs) {
    Edge e;
    e.id = s.id;
    e.from = net.vertex_index(s.u);
    e.to = net.vertex_index(s.v);
    e.attrs = make_attributes(s.length_m, s.speed_limit_mps, s.capacity, s.sigma, s.beta);
    net.edges_.push_back(e);
  }

  const auto n = net.vertex_ids_.size();
  auto build_csr = [&](auto key, auto other, std::vector<std::size_t>& offsets,
                       std::vector<EdgeIndex>& list) {
    offsets.assign(n + 1, 0);
    for (const auto& e : net.edges_) ++offsets[key(e) + 1];
    for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
    list.resize(net.edges_.size());
    auto cursor = offsets;
    for (EdgeIndex i = 0; i < net.edges_.size(); ++i) list[cursor[key(net.edges_[i])]++] = i;
    for (std::size_t v = 0; v < n; ++v) {
      std::sort(list.begin() + static_cast<std::ptrdiff_t>(offsets[v]),
                list.begin() + static_cast<std::ptrdiff_t>(offsets[v + 1]),
                [&](EdgeIndex a, EdgeIndex b) { return other(net.edges_[a]) < other(net.edges_[b]); });
    }
  };
  build_csr([](const Edge& e) { return e.from; }, [](const Edge& e) { return e.to; },
            net.out_offsets_, net.out_list_);
  build_csr([](const Edge& e) { return e.to; }, [](const Edge& e) { return e.from; },
            net.in_offsets_, net.in_list_);
  return net;
}

std::optional<VertexIndex> RoadNetwork::find_vertex(VertexId id) const {
  const auto it = std::lower_bound(vertex_ids_.begin(), vertex_ids_.end(), id);
  if (it == vertex_ids_.end() || *it != id) return std::nullopt;
  return static_cast<VertexIndex>(it - vertex_ids_.begin());
}

VertexIndex RoadNetwork::vertex_index(VertexId id) const {
  if (auto v = find_vertex(id)) return *v;
  throw NotFoundError("unknown vertex " + std::to_string(id));
}

std::optional<EdgeIndex> RoadNetwork::find_edge(VertexIndex from, VertexIndex to) const {
  for (EdgeIndex e : out_edges(from)) {
    if (edges_[e].to == to) return e;
  }
  return std::nullopt;
}

std::optional<EdgeIndex> RoadNetwork::find_edge_by_id(EdgeId id) const {
  for (EdgeIndex e = 0; e < edges_.size(); ++e) {
    if (edges_[e].id == id) return e;
  }
  return std::nullopt;
}

std::span<const EdgeIndex> RoadNetwork::out_edges(VertexIndex v) const {
  return std::span<const EdgeIndex>(out_list_).subspan(out_offsets_[v],
                                                       out_offsets_[v + 1] - out_offsets_[v]);
}

std::span<const EdgeIndex> RoadNetwork::in_edges(VertexIndex v) const {
  return std::span<const EdgeIndex>(in_list_).subspan(in_offsets_[v],
                                                      in_offsets_[v + 1] - in_offsets_[v]);
}

std::vector<EdgeIndex> RoadNetwork::resolve_path(std::span<const VertexId> vertices) const {
  if (vertices.size() < 2) throw InvalidPathError("path needs at least two vertices");
  std::vector<EdgeIndex> out;
  out.reserve(vertices.size() - 1);
  VertexIndex prev = vertex_index(vertices[0]);
  for (std::size_t i = 1; i < vertices.size(); ++i) {
    const VertexIndex cur = vertex_index(vertices[i]);
    const auto e = find_edge(prev, cur);
    if (!e)
      throw InvalidPathError("no edge (" + std::to_string(vertices[i - 1]) + "," +
                             std::to_string(vertices[i]) + ")");
    out.push_back(*e);
    prev = cur;
  }
  return out;
}

namespace {

std::optional<std::vector<VertexId>> parse_vertex_directive(std::string_view line,
                                                            std::size_t lineno) {
  auto body = detail::trim(detail::trim(line).substr(1));
  constexpr std::string_view tag = "vertices:";
  if (!body.starts_with(tag)) return std::nullopt;
  body.remove_prefix(tag.size());
  std::vector<VertexId> ids;
  std::string token;
  std::istringstream ss{std::string(body)};
  while (ss >> token) {
    if (token.back() == ',') token.pop_back();
    if (token.empty()) continue;
    auto id = detail::parse_number<VertexId>(token);
    if (!id) throw ParseError(lineno, "bad vertex id '" + token + "'");
    ids.push_back(*id);
  }
  return ids;
}

}  // namespace

RoadNetwork load_network(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::optional<std::vector<VertexId>> declared;
  std::map<std::string, std::size_t, std::less<>> columns;
  bool have_header = false;
  std::vector<EdgeSpec> specs;

  while (std::getline(in, line)) {
    ++lineno;
    if (detail::is_comment_or_blank(line)) {
      if (!detail::trim(line).empty()) {
        if (auto ids = parse_vertex_directive(line, lineno)) {
          if (!declared) declared.emplace();
          declared->insert(declared->end(), ids->begin(), ids->end());
        }
      }
      continue;
    }
    const auto fields = detail::split_fields(line);
    if (!have_header) {
      for (std::size_t i = 0; i < fields.size(); ++i) columns.emplace(std::string(fields[i]), i);
      for (const char* required :
           {"edge_id", "u", "v", "length_m", "speed_limit_mps", "capacity"}) {
        if (!columns.contains(required))
          throw ParseError(lineno, std::string("header is missing column '") + required + "'");
      }
      have_header = true;
      continue;
    }
    if (fields.size() != columns.size())
      throw ParseError(lineno, "expected " + std::to_string(columns.size()) + " fields, got " +
                                   std::to_string(fields.size()));

    auto field = [&](std::string_view name) -> std::optional<std::string_view> {
      const auto it = columns.find(name);
      if (it == columns.end()) return std::nullopt;
      return fields[it->second];
    };
    auto integer = [&](std::string_view name) {
      const auto raw = *field(name);
      auto v = detail::parse_number<std::uint64_t>(raw);
      if (!v) throw ParseError(lineno, "bad integer in column '" + std::string(name) + "'");
      return *v;
    };
    auto real = [&](std::string_view name, std::optional<double> fallback) {
      const auto raw = field(name);
      if (!raw || raw->empty()) {
        if (fallback) return *fallback;
        throw ParseError(lineno, "missing value in column '" + std::string(name) + "'");
      }
      auto v = detail::parse_number<double>(*raw);
      if (!v) throw ParseError(lineno, "bad number in column '" + std::string(name) + "'");
      return *v;
    };

    EdgeSpec s;
    s.id = integer("edge_id");
    s.u = integer("u");
    s.v = integer("v");
    s.length_m = real("length_m", std::nullopt);
    s.speed_limit_mps = real("speed_limit_mps", std::nullopt);
    s.capacity = real("capacity", std::nullopt);
    s.sigma = real("sigma", kDefaultSigma);
    s.beta = real("beta", kDefaultBeta);
    specs.push_back(s);
  }
  if (!have_header) throw ParseError(lineno, "missing header row");
  return RoadNetwork::build(specs, std::move(declared));
}

RoadNetwork load_network(std::string_view text) {
  std::istringstream in{std::string(text)};
  return load_network(in);
}

RoadNetwork load_network_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open network file " + path.string());
  return load_network(in);
}

std::string write_network_csv(const RoadNetwork& network) {
  std::ostringstream out;
  out << "edge_id,u,v,length_m,speed_limit_mps,capacity,sigma,beta\n";
  for (const auto& e : network.edges()) {
    out << e.id << ',' << network.vertex_id(e.from) << ',' << network.vertex_id(e.to) << ','
        << detail::format_double(e.attrs.length_m) << ','
        << detail::format_double(e.attrs.speed_limit_mps) << ','
        << detail::format_double(e.attrs.capacity) << ',' << detail::format_double(e.attrs.sigma)
        << ',' << detail::format_double(e.attrs.beta) << '\n';
  }
  return out.str();
}

std::vector<Edge> out_edges(const RoadNetwork& network, VertexId v) {
  std::vector<Edge> out;
  for (EdgeIndex e : network.out_edges(network.vertex_index(v))) out.push_back(network.edge(e));
  return out;
}

}  // namespace flowroute

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "flowroute/errors.hpp"
#include "flowroute/io.hpp"
#include "flowroute/latency.hpp"
#include "flowroute/macrosim.hpp"
#include "flowroute/network.hpp"
#include "flowroute/optimizer.hpp"
#include "flowroute/router.hpp"
#include "flowroute/scenario.hpp"
#include "flowroute/version.hpp"

namespace py = pybind11;
using namespace flowroute;

namespace {

using NetworkPtr = std::shared_ptr<const RoadNetwork>;
// (id, origin, destination, departure_ms)
using QueryTuple = std::tuple<RouteId, VertexId, VertexId, Ms>;
// (id, vertices, departure_ms)
using PathTuple = std::tuple<RouteId, std::vector<VertexId>, Ms>;

std::vector<Query> to_queries(const std::vector<QueryTuple>& qs) {
  std::vector<Query> out;
  out.reserve(qs.size());
  for (const auto& [id, o, d, t] : qs) out.push_back({id, o, d, t});
  return out;
}

std::vector<QueryTuple> from_queries(const std::vector<Query>& qs) {
  std::vector<QueryTuple> out;
  out.reserve(qs.size());
  for (const auto& q : qs) out.emplace_back(q.id, q.origin, q.destination, q.departure);
  return out;
}

std::vector<PathRequest> to_paths(const std::vector<PathTuple>& ps) {
  std::vector<PathRequest> out;
  out.reserve(ps.size());
  for (const auto& [id, v, t] : ps) out.push_back({id, v, t});
  return out;
}

std::vector<PathTuple> from_paths(const std::vector<PathRequest>& ps) {
  std::vector<PathTuple> out;
  out.reserve(ps.size());
  for (const auto& p : ps) out.emplace_back(p.id, p.vertices, p.departure);
  return out;
}

py::dict report_dict(const UpdateReport& r, const RoadNetwork& net) {
  py::list changed;
  for (const auto& c : r.changed_routes) {
    py::dict d;
    d["id"] = c.id;
    d["old_travel_ms"] = c.old_travel_ms ? py::cast(*c.old_travel_ms) : py::none();
    d["new_travel_ms"] = c.new_travel_ms ? py::cast(*c.new_travel_ms) : py::none();
    changed.append(d);
  }
  py::list edges;
  for (EdgeIndex e : r.affected_edges) edges.append(net.edge(e).id);
  py::dict out;
  out["changed_routes"] = changed;
  out["affected_edges"] = edges;
  out["recomputed_traversals"] = r.recomputed_traversals;
  out["wall_ms"] = r.wall_ms;
  return out;
}

// A simulated route set that can be edited incrementally.
class PySimulation {
 public:
  PySimulation(NetworkPtr net, const std::vector<PathTuple>& paths, unsigned workers)
      : net_(std::move(net)), workers_(workers) {
    const auto reqs = to_paths(paths);
    py::gil_scoped_release release;
    store_ = simulate_full(*net_, latency_, reqs).store;
  }

  Ms total_travel_ms() const { return store_.total_travel_time(); }
  std::size_t size() const { return store_.route_count(); }
  std::vector<RouteId> route_ids() const { return store_.route_ids(); }
  std::uint64_t state_hash() const { return store_.state_hash(); }

  py::dict route(RouteId id) const {
    const auto& r = store_.route(id);
    py::dict d;
    d["vertices"] = r.vertices;
    d["times"] = r.schedule();
    d["travel_ms"] = r.travel_time();
    return d;
  }

  FlowCount flow_at(VertexId u, VertexId v, Ms t) const {
    const auto e = net_->find_edge(net_->vertex_index(u), net_->vertex_index(v));
    if (!e) throw NotFoundError("no edge (" + std::to_string(u) + "," + std::to_string(v) + ")");
    return store_.flow_at(*e, t);
  }

  py::dict update(const std::vector<PathTuple>& inserts, const std::vector<RouteId>& deletes) {
    UpdateBatch batch{deletes, to_paths(inserts)};
    UpdateReport r;
    {
      py::gil_scoped_release release;
      r = apply_batch(store_, *net_, latency_, batch, UpdateOptions{workers_, false});
    }
    return report_dict(r, *net_);
  }

  std::vector<VertexId> best_path(const QueryTuple& q, std::optional<RouteId> exclude) const {
    const auto [id, o, d, t] = q;
    return shortest_path_traffic(*net_, store_, latency_, Query{id, o, d, t}, exclude);
  }

  std::string routes_csv() const {
    std::ostringstream out;
    write_routes_csv(out, summarize(store_));
    return out.str();
  }

 private:
  NetworkPtr net_;
  unsigned workers_;
  BprLatency latency_;
  RouteStore store_;
};

py::dict optimize_py(NetworkPtr net, const std::vector<QueryTuple>& queries,
                     const std::string& strategy, double fraction, std::size_t iterations,
                     std::uint64_t seed, double threshold, bool sequential, unsigned workers) {
  OptimizerConfig cfg;
  cfg.strategy = parse_strategy(strategy);
  cfg.fraction = fraction;
  cfg.iterations = iterations;
  cfg.seed = seed;
  cfg.congestion_threshold = threshold;
  cfg.sequential_commits = sequential;
  cfg.workers = workers;
  validate(cfg);
  const auto qs = to_queries(queries);
  OptimizeResult r;
  {
    py::gil_scoped_release release;
    r = optimize(*net, BprLatency{}, qs, cfg);
  }
  py::list trace;
  for (const auto& m : r.trace) {
    py::dict d;
    d["iter"] = m.iteration;
    d["total_ms"] = m.total_ms;
    d["best_ms"] = m.best_ms;
    d["selected"] = m.selected;
    d["reroutes"] = m.reroutes;
    d["improved"] = m.improved;
    d["affected_edges"] = m.affected_edges;
    d["wall_ms"] = m.wall_ms;
    trace.append(d);
  }
  py::dict out;
  out["trace"] = trace;
  out["best_iteration"] = r.best_iteration;
  out["best_total_ms"] = r.best_result.total_travel_ms;
  out["final_total_ms"] = r.final_result.total_travel_ms;
  out["best_routes"] = from_paths(r.best_routes);
  out["final_routes"] = from_paths(r.final_routes);
  return out;
}

}  // namespace

PYBIND11_MODULE(_flowroute, m) {
  m.doc() = "Traffic-aware routing over a macroscopic flow simulation";
  m.attr("__version__") = std::string(kEngineVersion);

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  auto input = py::register_exception<InputError>(m, "InputError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", input.ptr());
  py::register_exception<NotFoundError>(m, "NotFoundError", input.ptr());
  py::register_exception<DuplicateError>(m, "DuplicateError", input.ptr());
  py::register_exception<InvalidPathError>(m, "InvalidPathError", input.ptr());
  py::register_exception<ResourceLimitError>(m, "ResourceLimitError", input.ptr());
  py::register_exception<RoutingError>(m, "RoutingError", base.ptr());
  py::register_exception<InvariantError>(m, "InvariantError", base.ptr());

  m.def(
      "bpr_travel_time",
      [](Ms free_flow_ms, double capacity, FlowCount flow, double sigma, double beta) {
        EdgeAttributes a;
        a.length_m = static_cast<double>(free_flow_ms);
        a.speed_limit_mps = 1000.0;
        a.capacity = capacity;
        a.sigma = sigma;
        a.beta = beta;
        a.free_flow_ms = free_flow_ms;
        if (flow < 0) throw InputError("flow must be >= 0");
        return bpr_travel_time(a, flow);
      },
      py::arg("free_flow_ms"), py::arg("capacity"), py::arg("flow"),
      py::arg("sigma") = kDefaultSigma, py::arg("beta") = kDefaultBeta,
      "Travel time in ms of one edge at the given flow.");

  py::class_<RoadNetwork, std::shared_ptr<RoadNetwork>>(m, "Network")
      .def_static(
          "from_csv", [](const std::string& text) { return std::make_shared<RoadNetwork>(load_network(text)); },
          py::arg("text"))
      .def_static(
          "load",
          [](const std::filesystem::path& p) { return std::make_shared<RoadNetwork>(load_network_file(p)); },
          py::arg("path"))
      .def_property_readonly("vertex_count", &RoadNetwork::vertex_count)
      .def_property_readonly("edge_count", &RoadNetwork::edge_count)
      .def_property_readonly("vertices",
                             [](const RoadNetwork& n) {
                               return std::vector<VertexId>(n.vertex_ids().begin(), n.vertex_ids().end());
                             })
      .def("edges",
           [](const RoadNetwork& n) {
             py::list out;
             for (const auto& e : n.edges()) {
               py::dict d;
               d["id"] = e.id;
               d["u"] = n.vertex_id(e.from);
               d["v"] = n.vertex_id(e.to);
               d["length_m"] = e.attrs.length_m;
               d["speed_limit_mps"] = e.attrs.speed_limit_mps;
               d["capacity"] = e.attrs.capacity;
               d["sigma"] = e.attrs.sigma;
               d["beta"] = e.attrs.beta;
               d["free_flow_ms"] = e.attrs.free_flow_ms;
               out.append(d);
             }
             return out;
           })
      .def("to_csv", [](const RoadNetwork& n) { return write_network_csv(n); })
      .def(
          "shortest_path",
          [](const RoadNetwork& n, VertexId o, VertexId d) {
            return shortest_path_static(n, Query{0, o, d, 0});
          },
          py::arg("origin"), py::arg("destination"), "Free-flow shortest path as vertex ids.");

  py::class_<Scenario>(m, "Scenario")
      .def_property_readonly("network",
                             [](const Scenario& s) { return std::make_shared<RoadNetwork>(s.network); })
      .def_property_readonly("queries", [](const Scenario& s) { return from_queries(s.queries); })
      .def_property_readonly("pending_queries",
                             [](const Scenario& s) { return from_queries(s.pending_queries); })
      .def_readonly("network_csv", &Scenario::network_csv)
      .def_readonly("queries_csv", &Scenario::queries_csv)
      .def_property_readonly("config_hash", [](const Scenario& s) { return hex64(s.config_hash); })
      .def_property_readonly("bottleneck_edge", [](const Scenario& s) -> py::object {
        if (!s.bottleneck_edge) return py::none();
        const auto& e = s.network.edge(*s.bottleneck_edge);
        return py::make_tuple(s.network.vertex_id(e.from), s.network.vertex_id(e.to));
      });

  m.def(
      "generate",
      [](const std::string& kind, std::uint32_t rows, std::uint32_t cols, std::uint32_t queries,
         const std::string& od, Ms window_ms, std::uint64_t seed, std::optional<std::int64_t> min_capacity,
         std::optional<double> sigma, std::optional<double> beta) {
        ScenarioSpec spec;
        spec.kind = parse_scenario_kind(kind);
        spec.rows = rows;
        spec.cols = cols;
        spec.queries = queries;
        spec.od = parse_od(od);
        spec.departure_window_ms = window_ms;
        spec.seed = seed;
        if (min_capacity) spec.min_capacity = *min_capacity;
        if (sigma) spec.sigma = *sigma;
        if (beta) spec.beta = *beta;
        return generate(spec);
      },
      py::arg("kind") = "grid", py::arg("rows") = 8, py::arg("cols") = 8, py::arg("queries") = 500,
      py::arg("od") = "uniform", py::arg("window_ms") = Ms{3'600'000}, py::arg("seed") = 1,
      py::arg("min_capacity") = py::none(), py::arg("sigma") = py::none(),
      py::arg("beta") = py::none(), "Deterministic synthetic scenario.");

  m.def(
      "initial_assignment",
      [](NetworkPtr net, const std::vector<QueryTuple>& queries) {
        return from_paths(initial_assignment(*net, BprLatency{}, to_queries(queries)));
      },
      py::arg("network"), py::arg("queries"),
      "Free-flow shortest path per query as (id, vertices, departure_ms).");

  py::class_<PySimulation>(m, "Simulation")
      .def(py::init<NetworkPtr, const std::vector<PathTuple>&, unsigned>(), py::arg("network"),
           py::arg("paths"), py::arg("workers") = 1u,
           "Simulates (id, vertices, departure_ms) routes from scratch.")
      .def_property_readonly("total_travel_ms", &PySimulation::total_travel_ms)
      .def_property_readonly("route_ids", &PySimulation::route_ids)
      .def_property_readonly("state_hash", &PySimulation::state_hash)
      .def("__len__", &PySimulation::size)
      .def("route", &PySimulation::route, py::arg("id"))
      .def("flow_at", &PySimulation::flow_at, py::arg("u"), py::arg("v"), py::arg("t"))
      .def("update", &PySimulation::update, py::arg("inserts") = std::vector<PathTuple>{},
           py::arg("deletes") = std::vector<RouteId>{},
           "Incremental batch: deletes and inserts; an id in both is a re-route.")
      .def("best_path", &PySimulation::best_path, py::arg("query"), py::arg("exclude") = py::none(),
           "Traffic-aware fastest path against the current state.")
      .def("routes_csv", &PySimulation::routes_csv);

  m.def("optimize", &optimize_py, py::arg("network"), py::arg("queries"),
        py::arg("strategy") = "congestion", py::arg("fraction") = 0.1, py::arg("iterations") = 10,
        py::arg("seed") = 1, py::arg("threshold") = 0.9, py::arg("sequential") = false,
        py::arg("workers") = 1u, "Iterative global re-routing; returns the per-iteration trace.");
}

#include "commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "flowroute/errors.hpp"
#include "flowroute/io.hpp"
#include "flowroute/macrosim.hpp"
#include "flowroute/network.hpp"
#include "flowroute/rng.hpp"
#include "flowroute/version.hpp"

namespace flowroute::cli {
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t).count();
}

struct Inputs {
  RoadNetwork network;
  std::vector<Query> queries;
  std::unique_ptr<LatencyModel> latency;
  std::uint64_t config_hash = 0;
};

RoadNetwork with_overrides(const RoadNetwork& net, std::optional<double> sigma,
                           std::optional<double> beta) {
  if (!sigma && !beta) return net;
  std::vector<EdgeSpec> specs;
  for (const auto& e : net.edges()) {
    EdgeSpec s;
    s.id = e.id;
    s.u = net.vertex_id(e.from);
    s.v = net.vertex_id(e.to);
    s.length_m = e.attrs.length_m;
    s.speed_limit_mps = e.attrs.speed_limit_mps;
    s.capacity = e.attrs.capacity;
    s.sigma = sigma.value_or(e.attrs.sigma);
    s.beta = beta.value_or(e.attrs.beta);
    specs.push_back(s);
  }
  auto ids = net.vertex_ids();
  return RoadNetwork::build(specs, std::vector<VertexId>(ids.begin(), ids.end()));
}

std::string canonical_run(const RunConfig& c, std::string_view command) {
  std::ostringstream s;
  s.precision(17);
  // Worker count is left out: outputs do not depend on it.
  s << "cmd=" << command << ";seed=" << c.seed << ";table=" << c.table_max_flow << ";overflow=" << static_cast<int>(c.table_overflow);
  if (c.sigma) s << ";sigma=" << *c.sigma;
  if (c.beta) s << ";beta=" << *c.beta;
  s << ";strategy=" << to_string(c.optimizer.strategy) << ";fraction=" << c.optimizer.fraction
    << ";iterations=" << c.optimizer.iterations << ";threshold=" << c.optimizer.congestion_threshold
    << ";sequential=" << c.optimizer.sequential_commits;
  return s.str();
}

Inputs load_inputs(const RunConfig& c, std::string_view command) {
  if (c.network.empty()) throw InputError("--network is required");
  if (c.queries.empty()) throw InputError("--queries is required");
  if (c.workers == 0) throw InputError("--workers must be positive");
  const auto net_bytes = read_file(c.network);
  const auto query_bytes = read_file(c.queries);
  Inputs in;
  in.network = with_overrides(load_network(net_bytes), c.sigma, c.beta);
  in.queries = load_queries(query_bytes);
  for (const auto& q : in.queries) validate_query(in.network, q);
  if (c.table_max_flow > 0)
    in.latency = std::make_unique<MaterializedLatency>(in.network, c.table_max_flow, c.table_overflow);
  else
    in.latency = std::make_unique<BprLatency>();
  std::uint64_t h = fnv1a(canonical_run(c, command));
  h = fnv1a(net_bytes, h);
  h = fnv1a(query_bytes, h);
  in.config_hash = h;
  return in;
}

json header_json(std::uint64_t seed, std::uint64_t hash) {
  return json{{"engine", std::string(kEngineName)},
              {"version", std::string(kEngineVersion)},
              {"seed", seed},
              {"config", hex64(hash)}};
}

void ensure_dir(const fs::path& dir) {
  if (dir.empty()) throw InputError("--out is required");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

void write_routes_file(const fs::path& path, const std::string& header,
                       const SimulationResult& result) {
  auto out = open_out(path);
  out << header;
  write_routes_csv(out, result);
}

json summary_json(const SimulationResult& r, double wall_ms) {
  const auto n = r.routes.size();
  return json{{"vehicles", n},
              {"total_travel_ms", r.total_travel_ms},
              {"mean_travel_ms", n == 0 ? 0.0 : static_cast<double>(r.total_travel_ms) / static_cast<double>(n)},
              {"wall_ms", wall_ms}};
}

std::vector<std::size_t> parse_sizes(const std::string& list, const char* flag) {
  std::vector<std::size_t> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t v = 0;
    try {
      std::size_t used = 0;
      v = std::stoull(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError(std::string("bad value '") + item + "' in " + flag);
    }
    out.push_back(v);
  }
  if (out.empty()) throw InputError(std::string(flag) + " needs at least one value");
  return out;
}

}  // namespace

int cmd_gen(const ScenarioSpec& spec, const fs::path& out_dir, std::ostream& log) {
  const auto s = generate(spec);
  ensure_dir(out_dir);
  open_out(out_dir / "network.csv") << s.network_csv;
  open_out(out_dir / "queries.csv") << s.queries_csv;
  log << "wrote " << s.network.vertex_count() << " vertices, " << s.network.edge_count()
      << " edges, " << s.queries.size() << " queries to " << out_dir.string() << '\n';
  return 0;
}

int cmd_simulate(const RunConfig& c, std::ostream& log) {
  const auto in = load_inputs(c, "simulate");
  ensure_dir(c.out);
  const auto start = Clock::now();
  const auto paths = initial_assignment(in.network, *in.latency, in.queries);
  const auto sim = simulate_full(in.network, *in.latency, paths);
  const double wall = c.include_timing ? ms_since(start) : 0.0;

  const auto header = provenance_comment(c.seed, in.config_hash);
  write_routes_file(c.out / "routes.csv", header, sim.result);
  json summary{{"header", header_json(c.seed, in.config_hash)}};
  summary.update(summary_json(sim.result, wall));
  open_out(c.out / "summary.json") << summary.dump(2) << '\n';
  log << "simulated " << sim.result.routes.size() << " vehicles, total "
      << sim.result.total_travel_ms << " ms\n";
  return 0;
}

int cmd_update_bench(const BenchConfig& bc, std::ostream& log) {
  const auto& c = bc.run;
  const auto in = load_inputs(c, "update-bench");
  if (in.queries.empty()) throw InputError("update-bench needs at least one query");
  ensure_dir(c.out);

  // Workload: seeded draws from the query pool, fresh ids, departures spread
  // over the pool's departure range.
  std::size_t need = 0;
  for (auto s : bc.stored)
    for (auto u : bc.updates) need = std::max(need, s + u);
  Ms max_dep = 0;
  for (const auto& q : in.queries) max_dep = std::max(max_dep, q.departure);
  Rng rng(c.seed);
  StaticRouter router(in.network);
  std::vector<PathRequest> pool;
  pool.reserve(need);
  for (std::size_t k = 0; k < need; ++k) {
    Query q = in.queries[rng.below(in.queries.size())];
    q.id = k;
    q.departure = static_cast<Ms>(rng.below(static_cast<std::uint64_t>(max_dep) + 1));
    pool.push_back(PathRequest{k, router.route(q), q.departure});
  }

  const UpdateOptions opts{c.workers, false};
  auto out = open_out(c.out / "update_bench.csv");
  out << provenance_comment(c.seed, in.config_hash);
  out << "stored,updates,incremental_ms,full_ms,speedup,changed_routes,affected_edges,hash_match\n";
  bool all_match = true;
  for (auto s : bc.stored) {
    for (auto u : bc.updates) {
      std::span<const PathRequest> base(pool.data(), s);
      std::span<const PathRequest> extra(pool.data() + s, u);
      auto sim = simulate_full(in.network, *in.latency, base);
      auto store = std::move(sim.store);
      UpdateBatch batch;
      batch.inserts.assign(extra.begin(), extra.end());
      auto t0 = Clock::now();
      const auto report = apply_batch(store, in.network, *in.latency, batch, opts);
      const double inc_ms = ms_since(t0);

      std::span<const PathRequest> all(pool.data(), s + u);
      t0 = Clock::now();
      const auto full = simulate_full(in.network, *in.latency, all);
      const double full_ms = ms_since(t0);

      const bool match = full.store.state_hash() == store.state_hash();
      all_match = all_match && match;
      out << s << ',' << u << ',';
      if (c.include_timing) {
        out << inc_ms << ',' << full_ms << ',' << (inc_ms > 0 ? full_ms / inc_ms : 0.0);
      } else {
        out << "0,0,0";
      }
      out << ',' << report.changed_routes.size() << ',' << report.affected_edges.size() << ','
          << (match ? "true" : "false") << '\n';
      log << "stored=" << s << " updates=" << u << " incremental=" << inc_ms
          << "ms full=" << full_ms << "ms match=" << match << '\n';
    }
  }
  if (!all_match) throw InvariantError("incremental state diverged from full re-simulation");
  return 0;
}

int cmd_optimize(const RunConfig& c, std::ostream& log) {
  const auto in = load_inputs(c, "optimize");
  ensure_dir(c.out);
  OptimizerConfig oc = c.optimizer;
  oc.seed = c.seed;
  oc.workers = c.workers;
  validate(oc);

  const auto header = provenance_comment(c.seed, in.config_hash);
  auto trace_csv = open_out(c.out / "trace.csv");
  trace_csv << header << "iter,total_ms,reroutes,improved,affected_edges,wall_ms,best_ms,selected\n";
  json rows = json::array();
  auto emit = [&](const IterationMetrics& m) {
    const double wall = c.include_timing ? m.wall_ms : 0.0;
    trace_csv << m.iteration << ',' << m.total_ms << ',' << m.reroutes << ',' << m.improved << ','
              << m.affected_edges << ',' << wall << ',' << m.best_ms << ',' << m.selected << '\n';
    trace_csv.flush();
    rows.push_back(json{{"iter", m.iteration},
                        {"total_ms", m.total_ms},
                        {"best_ms", m.best_ms},
                        {"selected", m.selected},
                        {"reroutes", m.reroutes},
                        {"improved", m.improved},
                        {"affected_edges", m.affected_edges},
                        {"wall_ms", wall}});
    log << "iter " << m.iteration << " total=" << m.total_ms << " best=" << m.best_ms
        << " reroutes=" << m.reroutes << '\n';
  };
  auto write_json = [&](const json& extra) {
    json doc{{"header", header_json(c.seed, in.config_hash)},
             {"strategy", to_string(oc.strategy)},
             {"fraction", oc.fraction},
             {"iterations", oc.iterations},
             {"threshold", oc.congestion_threshold},
             {"trace", rows}};
    doc.update(extra);
    open_out(c.out / "trace.json") << doc.dump(2) << '\n';
  };

  OptimizeResult result;
  try {
    result = optimize(in.network, *in.latency, in.queries, oc, emit);
  } catch (const std::exception& e) {
    write_json(json{{"aborted", e.what()}});
    throw;
  }
  write_json(json{{"best_iteration", result.best_iteration},
                  {"best_total_ms", result.best_result.total_travel_ms},
                  {"final_total_ms", result.final_result.total_travel_ms}});
  write_routes_file(c.out / "final_routes.csv", header, result.final_result);
  write_routes_file(c.out / "best_routes.csv", header, result.best_result);
  return 0;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"flowroute: traffic-aware routing over a macroscopic flow simulation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kEngineVersion));

  ScenarioSpec spec;
  std::string kind = "grid", od = "uniform";
  fs::path gen_out;
  auto* gen = app.add_subcommand("gen", "generate a synthetic scenario");
  gen->add_option("--kind", kind, "grid | bottleneck_grid | two_corridor | fig3_pattern");
  gen->add_option("--rows", spec.rows);
  gen->add_option("--cols", spec.cols);
  gen->add_option("--queries", spec.queries, "number of queries");
  gen->add_option("--od", od, "uniform | hotspot");
  gen->add_option("--window-ms", spec.departure_window_ms, "departure window");
  gen->add_option("--seed", spec.seed);
  gen->add_option("--min-length", spec.min_length_m);
  gen->add_option("--max-length", spec.max_length_m);
  gen->add_option("--min-speed", spec.min_speed_mps);
  gen->add_option("--max-speed", spec.max_speed_mps);
  gen->add_option("--min-capacity", spec.min_capacity);
  gen->add_option("--max-capacity", spec.max_capacity);
  gen->add_option("--sigma", spec.sigma);
  gen->add_option("--beta", spec.beta);
  gen->add_option("--out", gen_out, "output directory")->required();

  RunConfig rc;
  std::string strategy = "congestion", overflow = "clamp";
  bool no_timing = false;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--network", rc.network)->required();
    sub->add_option("--queries", rc.queries)->required();
    sub->add_option("--out", rc.out, "output directory")->required();
    sub->add_option("--seed", rc.seed);
    sub->add_option("--workers", rc.workers);
    sub->add_option("--sigma", rc.sigma, "override sigma on every edge");
    sub->add_option("--beta", rc.beta, "override beta on every edge");
    sub->add_option("--table-max-flow", rc.table_max_flow, "materialise latency tables up to this flow");
    sub->add_option("--table-overflow", overflow, "clamp | fallback");
    sub->add_flag("--no-timing", no_timing, "write 0 for wall-clock fields");
  };
  auto* sim = app.add_subcommand("simulate", "route every query selfishly and simulate");
  add_common(sim);

  std::string stored = "1,100,1000", updates = "1,10,100";
  auto* bench = app.add_subcommand("update-bench", "incremental vs full re-simulation");
  add_common(bench);
  bench->add_option("--stored", stored, "comma-separated stored route counts");
  bench->add_option("--updates", updates, "comma-separated insert batch sizes");

  auto* opt = app.add_subcommand("optimize", "iterative global re-routing");
  add_common(opt);
  opt->add_option("--strategy", strategy, "random | latency | path | congestion");
  opt->add_option("--fraction", rc.optimizer.fraction);
  opt->add_option("--iterations", rc.optimizer.iterations);
  opt->add_option("--threshold", rc.optimizer.congestion_threshold);
  opt->add_flag("--sequential", rc.optimizer.sequential_commits,
                "commit each re-route before planning the next");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    rc.include_timing = !no_timing;
    if (overflow == "clamp") rc.table_overflow = OverflowMode::kClamp;
    else if (overflow == "fallback") rc.table_overflow = OverflowMode::kFallback;
    else throw InputError("--table-overflow must be clamp or fallback");

    if (*gen) {
      spec.kind = parse_scenario_kind(kind);
      spec.od = parse_od(od);
      return cmd_gen(spec, gen_out, out);
    }
    if (*sim) return cmd_simulate(rc, out);
    if (*bench) {
      BenchConfig bc;
      bc.run = rc;
      bc.stored = parse_sizes(stored, "--stored");
      bc.updates = parse_sizes(updates, "--updates");
      return cmd_update_bench(bc, out);
    }
    if (*opt) {
      rc.optimizer.strategy = parse_strategy(strategy);
      return cmd_optimize(rc, out);
    }
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const RoutingError& e) {
    err << "routing error: " << e.what() << '\n';
    return 3;
  } catch (const InvariantError& e) {
    err << "internal error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}

}  // namespace flowroute::cli

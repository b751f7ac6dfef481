#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "flowroute/latency.hpp"
#include "flowroute/optimizer.hpp"
#include "flowroute/scenario.hpp"

namespace flowroute::cli {

struct RunConfig {
  std::filesystem::path network;
  std::filesystem::path queries;
  std::filesystem::path out;
  unsigned workers = 1;
  std::uint64_t seed = 1;
  std::optional<double> sigma;  // overrides every edge when set
  std::optional<double> beta;
  FlowCount table_max_flow = 0;  // 0 = evaluate BPR directly
  OverflowMode table_overflow = OverflowMode::kClamp;
  OptimizerConfig optimizer;
  bool include_timing = true;
};

struct BenchConfig {
  RunConfig run;
  std::vector<std::size_t> stored{1, 100, 1000};
  std::vector<std::size_t> updates{1, 10, 100};
};

// Each returns a process exit code and may throw flowroute::Error.
int cmd_gen(const ScenarioSpec& spec, const std::filesystem::path& out_dir, std::ostream& log);
int cmd_simulate(const RunConfig& config, std::ostream& log);
int cmd_update_bench(const BenchConfig& config, std::ostream& log);
int cmd_optimize(const RunConfig& config, std::ostream& log);

/// Full command line front end. Maps errors to exit codes:
/// 2 input, 3 routing, 4 internal.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace flowroute::cli

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pspin/experiments.hpp"

namespace pspin::cli {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunConfig {
  std::string experiment;
  std::optional<std::vector<std::pair<int, double>>> mixture;
  std::optional<int> n_dim;             // key "N"
  std::optional<std::vector<int>> n_list;
  std::optional<std::vector<double>> t_grid, h_grid, eps_grid, delta_grid;
  std::optional<double> alpha;
  std::optional<std::int64_t> n_samples;
  std::optional<std::uint64_t> master_seed;
  std::optional<int> exact_cap;
  std::optional<std::string> out;
  std::optional<int> l_max;
  std::optional<std::string> input;     // convexity-report: prior chaos report
  std::optional<std::uint64_t> seed;    // solve: disorder seed
  std::optional<std::int64_t> anneal_steps;
  std::optional<double> anneal_t_start, anneal_t_end;
};

// Parses flat key=value text or JSON (strict: unknown keys are fatal, keys
// not applicable to the experiment are validation errors).
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::filesystem::path& path);

struct RunOptions {
  int workers = 1;
  std::optional<std::string> out_override;
  std::optional<std::string> experiment_override;  // from the subcommand
};

// Executes the configured experiment and writes report.json + CSVs.
// Returns the exit code: 0 success, 2 validation error, 3 runtime error.
int run(const std::filesystem::path& config_path, const RunOptions& options);

}  // namespace pspin::cli

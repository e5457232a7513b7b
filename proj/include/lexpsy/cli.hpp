#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace lexpsy::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kNoData = 2, kNumericalFailure = 3 };

struct AnalysisParams {
  int k_min = 5;
  int k_max = 12;
  std::optional<int> k;  // overrides the sweep's flagged k
  double promax_power = 4.0;
  int top_n = 30;
  std::vector<std::string> drop_items;
  bool drop_zero_variance = true;
  bool keyed_alpha = true;
  double varimax_tol = 1e-8;
  int varimax_max_iter = 500;
  std::optional<int> score_top_n;
  std::size_t baseline_set_size = 25;
  int baseline_iterations = 10;
  std::vector<std::pair<int, int>> validity_mapping;  // (factor, dimension); empty = greedy by |r|
};

/// Parsed JSON config. Relative paths resolve against the config file's directory.
struct RunConfig {
  nlohmann::json backend;
  std::filesystem::path base_dir;
  std::uint64_t seed = 0;
  std::filesystem::path out = "out";

  std::filesystem::path population;
  std::string population_name;
  std::filesystem::path census;
  std::filesystem::path occupations;
  int total_agents = 0;
  bool substantive_flaw = false;

  std::filesystem::path lexicon;
  std::filesystem::path lexical_store;
  std::filesystem::path pir_items;
  std::filesystem::path pir_key;
  std::filesystem::path pir_store;
  std::filesystem::path antonyms;
  std::filesystem::path embeddings;
  std::filesystem::path reference_loadings;

  int workers = 0;
  bool sync = true;
  AnalysisParams analysis;
};

RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

void cmd_generate(const RunConfig& config);
void cmd_survey(const RunConfig& config, const std::string& which);
void cmd_analyze(const RunConfig& config);
void cmd_sweep(const RunConfig& config);
void cmd_validity(const RunConfig& config);
void cmd_consistency(const RunConfig& config);

/// Full command line entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lexpsy::cli

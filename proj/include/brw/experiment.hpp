#pragma once

#include <optional>
#include <string>
#include <vector>

#include "brw/config.hpp"
#include "brw/deviation.hpp"

namespace brw {

struct RunOverrides {
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> only_kind;  // run only tasks of this kind
};

// Executes the config's tasks in order, writing rates.json, sim/*.csv,
// bounds/*.json and summary.md under the output directory. Deterministic
// given (config, seed). Throws typed errors; the CLI maps them to exit codes.
void run_experiment(const ExperimentConfig& cfg, const RunOverrides& overrides = {});
void run_experiment_file(const std::string& config_path, const RunOverrides& overrides = {});

// One row per spec: regime, scale, constant, branch. Unsupported rows are
// marked rather than dropped. Rows are sorted by regime tag (stable).
struct RegimeTableRow {
  std::string model;
  std::string regime;
  std::string scale;
  std::string branch;
  double constant = 0.0;
  bool supported = true;
};

std::vector<RegimeTableRow> regime_table(const std::vector<ModelSpec>& specs);
std::string regime_table_markdown(const std::vector<RegimeTableRow>& rows);
std::string regime_table_csv(const std::vector<RegimeTableRow>& rows);

}  // namespace brw

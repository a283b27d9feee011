#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "brw/errors.hpp"
#include "brw/experiment.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "experiment config file")->required();
  cmd->add_option("--out", flags.out, "output directory (overrides config and BRW_OUT_DIR)");
  cmd->add_option("--seed", flags.seed, "random seed (overrides config)")
      ->each([&flags](const std::string&) { flags.seed_set = true; });
  cmd->add_option("--jobs", flags.jobs, "replica-level parallelism");
}

brw::RunOverrides to_overrides(const CommonFlags& flags, const char* only_kind) {
  brw::RunOverrides o;
  if (!flags.out.empty()) o.out_dir = flags.out;
  if (flags.seed_set) o.seed = flags.seed;
  if (flags.jobs > 0) o.jobs = flags.jobs;
  if (only_kind != nullptr) o.only_kind = only_kind;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lower-deviation rate constants for branching random walk level sets"};
  app.require_subcommand(1);

  CommonFlags run_flags, rates_flags, sim_flags, oracle_flags, bound_flags, table_flags;
  CLI::App* cmd_run = app.add_subcommand("run", "run every task in the config");
  add_common(cmd_run, run_flags);
  CLI::App* cmd_rates = app.add_subcommand("rates", "compute the limit rate constants");
  add_common(cmd_rates, rates_flags);
  CLI::App* cmd_sim = app.add_subcommand("simulate", "run the simulate tasks");
  add_common(cmd_sim, sim_flags);
  CLI::App* cmd_oracle = app.add_subcommand("oracle", "run the Cramer walk-oracle tasks");
  add_common(cmd_oracle, oracle_flags);
  CLI::App* cmd_bound = app.add_subcommand("bound", "run the strategy-bound tasks");
  add_common(cmd_bound, bound_flags);
  CLI::App* cmd_table = app.add_subcommand("table", "emit the regime/constant table");
  add_common(cmd_table, table_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run->parsed()) {
      brw::run_experiment_file(run_flags.config, to_overrides(run_flags, nullptr));
    } else if (cmd_rates->parsed()) {
      brw::run_experiment_file(rates_flags.config, to_overrides(rates_flags, "rates"));
    } else if (cmd_sim->parsed()) {
      brw::run_experiment_file(sim_flags.config, to_overrides(sim_flags, "simulate"));
    } else if (cmd_oracle->parsed()) {
      brw::run_experiment_file(oracle_flags.config, to_overrides(oracle_flags, "oracle"));
    } else if (cmd_bound->parsed()) {
      brw::run_experiment_file(bound_flags.config, to_overrides(bound_flags, "bound"));
    } else if (cmd_table->parsed()) {
      brw::run_experiment_file(table_flags.config, to_overrides(table_flags, "table"));
    }
  } catch (const brw::ConfigParseError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const brw::UnsupportedRegime& e) {
    std::fprintf(stderr, "unsupported regime: %s\n", e.what());
    return 3;
  } catch (const brw::Error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 4;
  }
  return 0;
}

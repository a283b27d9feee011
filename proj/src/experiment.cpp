#include "brw/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "brw/errors.hpp"
#include "brw/rare_event.hpp"
#include "brw/simulator.hpp"

namespace fs = std::filesystem;

namespace brw {

namespace {

std::uint64_t name_key(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

struct Context {
  ExperimentConfig cfg;
  ModelSpec model;
  fs::path out;
  std::string hash;
  SplitRng root;
  int jobs;

  Context(ExperimentConfig c, const RunOverrides& o)
      : cfg(std::move(c)), model(cfg.build_model()), out(), hash(), root(0), jobs(1) {
    if (o.seed) cfg.seed = *o.seed;
    if (o.jobs) cfg.jobs = *o.jobs;
    if (o.out_dir) cfg.output_dir = *o.out_dir;
    out = cfg.output_dir;
    hash = cfg.hash();
    root = SplitRng(cfg.seed);
    jobs = std::max(1, cfg.jobs);
  }
};

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error("cannot write " + p.string());
  os << text;
}

nlohmann::json stamp(const Context& ctx) {
  nlohmann::json j;
  j["config_hash"] = ctx.hash;
  j["seed"] = ctx.cfg.seed;
  return j;
}

std::string csv_header(const Context& ctx) {
  return "# config_hash=" + ctx.hash + " seed=" + std::to_string(ctx.cfg.seed) + "\n";
}

double param_num(const ConfigTable& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second.number("task." + key);
}

bool param_bool(const ConfigTable& params, const std::string& key, bool fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second.boolean("task." + key);
}

std::string param_str(const ConfigTable& params, const std::string& key, const std::string& fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second.string("task." + key);
}

nlohmann::json result_json(const Context& ctx, const DeviationResult& res) {
  nlohmann::json j = stamp(ctx);
  j["regime"] = regime_name(res.regime);
  j["scale"] = scale_name(res.scale);
  j["constant"] = res.constant;
  j["branch"] = res.branch;
  nlohmann::json aux = nlohmann::json::object();
  for (auto& [k, v] : res.aux) aux[k] = v;
  j["aux"] = aux;
  return j;
}

// --------------------------------------------------------------------------
// Tasks

void task_rates(Context& ctx, const TaskSpec& task) {
  DeviationResult res = compute_rate(ctx.model);
  nlohmann::json j = result_json(ctx, res);
  j["model"] = ctx.model.step.describe();
  j["x_star"] = ctx.model.x_star;
  j["log_m"] = ctx.model.log_m();
  write_text(ctx.out / "rates.json", j.dump(2) + "\n");
  if (param_bool(task.params, "curves", false)) {
    Regime regime = classify_regime(ctx.model);
    if (regime == Regime::SchroderLight) {
      std::ostringstream f, d;
      f << csv_header(ctx);
      dump_f_curve(ctx.model, f);
      write_text(ctx.out / "curves" / "f_rho.csv", f.str());
      d << csv_header(ctx);
      dump_d_curve(ctx.model, d);
      write_text(ctx.out / "curves" / "d_rho.csv", d.str());
    }
    if (regime == Regime::BottcherBounded) {
      std::ostringstream f;
      f << csv_header(ctx);
      dump_FL_curve(ctx.model, f);
      write_text(ctx.out / "curves" / "F_L.csv", f.str());
    }
  }
}

void task_sweep(Context& ctx, const TaskSpec& task) {
  std::string param = param_str(task.params, "param", "a");
  if (param != "a") throw ConfigParseError("sweep: only the 'a' parameter is supported");
  double from = param_num(task.params, "from", 0.0);
  double to = param_num(task.params, "to", ctx.model.log_m() - ctx.model.rate(ctx.model.theta_x_star()));
  int count = static_cast<int>(param_num(task.params, "count", 10));
  std::ostringstream os;
  os << csv_header(ctx) << "a,regime,scale,constant\n";
  for (int i = 0; i < count; ++i) {
    double a = from + (to - from) * i / count;
    ConfigTable override_tbl;
    override_tbl["a"] = ConfigValue{a};
    ModelSpec spec = ctx.cfg.build_model_with(override_tbl);
    DeviationResult res = compute_rate(spec);
    os << format_double(a) << "," << regime_name(res.regime) << "," << scale_name(res.scale) << ","
       << format_double(res.constant) << "\n";
  }
  write_text(ctx.out / ("sweep_" + task.name + ".csv"), os.str());
}

SimMode mode_from_string(const std::string& s) {
  if (s == "particles") return SimMode::ExactParticles;
  if (s == "cohort") return SimMode::LatticeCohort;
  if (s == "mean_field") return SimMode::MeanField;
  throw ConfigParseError("simulate: unknown mode '" + s + "'");
}

void task_simulate(Context& ctx, const TaskSpec& task) {
  int n_max = static_cast<int>(param_num(task.params, "n_max", 20));
  long replicas = static_cast<long>(param_num(task.params, "replicas", 20));
  SimMode mode = mode_from_string(param_str(task.params, "mode", "cohort"));
  std::vector<double> thetas;
  if (auto it = task.params.find("thresholds"); it != task.params.end()) {
    for (auto& v : it->second.array("simulate.thresholds"))
      thetas.push_back(v.number("threshold"));
  } else {
    thetas.push_back(ctx.model.theta);
  }
  int window_lo = n_max / 2, window_hi = n_max;
  if (auto it = task.params.find("window"); it != task.params.end()) {
    const auto& w = it->second.array("simulate.window");
    if (w.size() != 2) throw ConfigParseError("simulate.window must be [lo, hi]");
    window_lo = static_cast<int>(w[0].number("window lo"));
    window_hi = static_cast<int>(w[1].number("window hi"));
  }

  std::vector<ThresholdFn> fns;
  for (double th : thetas) {
    double slope = th * ctx.model.x_star;
    fns.push_back([slope](int n) { return slope * n; });
  }

  std::vector<std::vector<GenerationRecord>> runs(replicas);
  SplitRng base = ctx.root.split(name_key(task.name));
  for_each_replica(replicas, ctx.jobs, [&](long r) {
    runs[r] = run_brw(ctx.model.off, ctx.model.step, n_max, fns, mode,
                      base.split(static_cast<std::uint64_t>(r)));
  });

  fs::create_directories(ctx.out / "sim");
  for (long r = 0; r < replicas; ++r) {
    std::ostringstream os;
    os << csv_header(ctx) << "n,total";
    for (double th : thetas) os << ",count@theta=" << format_double(th);
    os << ",mode\n";
    for (auto& rec : runs[r]) {
      os << rec.n << "," << format_double(rec.total);
      for (double c : rec.level_counts) os << "," << format_double(c);
      os << "," << sim_mode_name(rec.mode) << "\n";
    }
    write_text(ctx.out / "sim" / ("run_" + task.name + "_" + std::to_string(r) + ".csv"), os.str());
  }

  nlohmann::json j = stamp(ctx);
  j["task"] = task.name;
  j["n_max"] = n_max;
  j["replicas"] = replicas;
  j["mode"] = sim_mode_name(mode);
  nlohmann::json slopes = nlohmann::json::array();
  for (size_t ti = 0; ti < thetas.size(); ++ti) {
    double sum = 0.0, sumsq = 0.0;
    long ok = 0;
    for (long r = 0; r < replicas; ++r) {
      try {
        double s = biggins_slope(runs[r], static_cast<int>(ti), window_lo, window_hi);
        sum += s;
        sumsq += s * s;
        ++ok;
      } catch (const EmptyLevelSet&) {
      }
    }
    nlohmann::json e;
    e["theta"] = thetas[ti];
    e["biggins_theory"] = ctx.model.log_m() - ctx.model.rate(thetas[ti] * ctx.model.x_star);
    if (ok > 0) {
      double mean = sum / ok;
      e["slope_mean"] = mean;
      e["slope_se"] = ok > 1 ? std::sqrt(std::max(0.0, sumsq / ok - mean * mean) / ok) : 0.0;
      e["replicas_used"] = ok;
    } else {
      e["error"] = "empty level set in window";
    }
    slopes.push_back(e);
  }
  j["slopes"] = slopes;
  write_text(ctx.out / "sim" / ("summary_" + task.name + ".json"), j.dump(2) + "\n");
}

void task_oracle(Context& ctx, const TaskSpec& task) {
  double x = param_num(task.params, "x", 0.5);
  int n = static_cast<int>(param_num(task.params, "n", 100));
  long reps = static_cast<long>(param_num(task.params, "reps", 100000));
  auto res = cramer_is_estimate(ctx.model.step, x, n, reps,
                                ctx.root.split(name_key(task.name)),
                                ctx.model.rf.get());
  nlohmann::json j = stamp(ctx);
  j["task"] = task.name;
  j["n"] = res.n;
  j["x"] = res.x;
  j["tilt"] = res.tilt;
  j["log_prob_estimate"] = res.log_prob_estimate;
  j["std_error_log"] = res.std_error;
  j["rate_estimate"] = -res.log_prob_estimate / res.n;
  j["theory_I_times_n"] = res.theory;
  j["theory_rate"] = res.theory / res.n;
  write_text(ctx.out / ("oracle_" + task.name + ".json"), j.dump(2) + "\n");
}

void task_bound(Context& ctx, const TaskSpec& task) {
  std::string strategy = param_str(task.params, "strategy", "schroder");
  int n = static_cast<int>(param_num(task.params, "n", 40));
  long reps = static_cast<long>(param_num(task.params, "reps", 100000));
  SplitRng rng = ctx.root.split(name_key(task.name));
  StrategyBound sb;
  if (strategy == "schroder") {
    double eps = param_num(task.params, "eps", -1.0);
    if (param_bool(task.params, "optimize", true)) {
      int grid = static_cast<int>(param_num(task.params, "grid", 12));
      sb = optimize_schroder_bound(ctx.model, n, reps, rng, grid, eps);
    } else {
      double rho = param_num(task.params, "rho", 0.5);
      sb = schroder_strategy_bound(ctx.model, rho, n, reps, rng, eps);
      sb.theory_constant = schroder_light_rate(ctx.model).constant;
    }
  } else if (strategy == "bottcher_uniform") {
    double L_prime = param_num(task.params, "L_prime", 0.9 * ctx.model.L);
    double delta = param_num(task.params, "delta", 0.05);
    sb = bottcher_uniform_bound(ctx.model, L_prime, delta, n, reps, rng);
  } else if (strategy == "bottcher_geometric") {
    double delta = param_num(task.params, "delta", -1.0);
    sb = bottcher_geometric_bound(ctx.model, n, reps, rng, delta);
  } else {
    throw ConfigParseError("bound: unknown strategy '" + strategy + "'");
  }
  nlohmann::json j = stamp(ctx);
  j["task"] = task.name;
  j.update(nlohmann::json::parse(sb.to_json()));
  write_text(ctx.out / "bounds" / (task.name + ".json"), j.dump(2) + "\n");
}

void task_table(Context& ctx, const TaskSpec& task) {
  std::vector<ModelSpec> specs;
  if (auto it = task.params.find("variants"); it != task.params.end()) {
    for (auto& v : it->second.array("table.variants"))
      specs.push_back(ctx.cfg.build_model_with(v.table("table.variant")));
  } else {
    specs.push_back(ctx.model);
  }
  auto rows = regime_table(specs);
  write_text(ctx.out / ("table_" + task.name + ".md"), regime_table_markdown(rows));
  write_text(ctx.out / ("table_" + task.name + ".csv"), csv_header(ctx) + regime_table_csv(rows));
}

}  // namespace

std::vector<RegimeTableRow> regime_table(const std::vector<ModelSpec>& specs) {
  std::vector<RegimeTableRow> rows;
  for (auto& spec : specs) {
    RegimeTableRow row;
    row.model = spec.step.describe() + " theta=" + format_double(spec.theta) +
                " a=" + format_double(spec.a);
    try {
      DeviationResult res = compute_rate(spec);
      row.regime = regime_name(res.regime);
      row.scale = scale_name(res.scale);
      row.branch = res.branch;
      row.constant = res.constant;
    } catch (const UnsupportedRegime& e) {
      row.supported = false;
      row.regime = "unsupported";
      row.branch = e.what();
    }
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const RegimeTableRow& a, const RegimeTableRow& b) { return a.regime < b.regime; });
  return rows;
}

std::string regime_table_markdown(const std::vector<RegimeTableRow>& rows) {
  std::ostringstream os;
  os << "| model | regime | scale | constant | branch |\n";
  os << "|---|---|---|---|---|\n";
  for (auto& r : rows) {
    os << "| " << r.model << " | " << r.regime << " | " << (r.supported ? r.scale : "-") << " | "
       << (r.supported ? format_double(r.constant) : "-") << " | " << r.branch << " |\n";
  }
  return os.str();
}

std::string regime_table_csv(const std::vector<RegimeTableRow>& rows) {
  std::ostringstream os;
  os << "model,regime,scale,constant,branch\n";
  for (auto& r : rows) {
    os << '"' << r.model << "\"," << r.regime << "," << (r.supported ? r.scale : "-") << ","
       << (r.supported ? format_double(r.constant) : "-") << ",\"" << r.branch << "\"\n";
  }
  return os.str();
}

void run_experiment(const ExperimentConfig& cfg_in, const RunOverrides& overrides) {
  Context ctx(cfg_in, overrides);
  fs::create_directories(ctx.out);

  std::vector<const TaskSpec*> todo;
  for (auto& task : ctx.cfg.tasks) {
    if (overrides.only_kind && task.kind != *overrides.only_kind) continue;
    todo.push_back(&task);
  }
  if (overrides.only_kind && todo.empty()) {
    if (*overrides.only_kind == "rates") {
      TaskSpec synth{"default", "rates", {}};
      task_rates(ctx, synth);
      return;
    }
    throw ConfigParseError("config has no task of kind '" + *overrides.only_kind + "'");
  }

  std::ostringstream summary;
  summary << "# Experiment summary\n\n";
  summary << "- config hash: `" << ctx.hash << "`\n";
  summary << "- seed: " << ctx.cfg.seed << "\n";
  summary << "- model: " << ctx.model.step.describe() << ", theta=" << format_double(ctx.model.theta)
          << ", a=" << format_double(ctx.model.a) << "\n";
  summary << "- x* = " << format_double(ctx.model.x_star)
          << ", log m = " << format_double(ctx.model.log_m()) << "\n\n";
  summary << "## Rate constants\n\n";
  {
    std::vector<ModelSpec> specs{ctx.model};
    summary << regime_table_markdown(regime_table(specs)) << "\n";
  }
  summary << "## Tasks\n\n";

  for (const TaskSpec* task : todo) {
    if (task->kind == "rates") {
      task_rates(ctx, *task);
    } else if (task->kind == "sweep") {
      task_sweep(ctx, *task);
    } else if (task->kind == "simulate") {
      task_simulate(ctx, *task);
    } else if (task->kind == "oracle") {
      task_oracle(ctx, *task);
    } else if (task->kind == "bound") {
      task_bound(ctx, *task);
    } else if (task->kind == "table") {
      task_table(ctx, *task);
    } else {
      throw ConfigParseError("unknown task kind '" + task->kind + "' in task." + task->name);
    }
    summary << "- " << task->name << " (" << task->kind << "): done\n";
  }

  write_text(ctx.out / "summary.md", summary.str());
}

void run_experiment_file(const std::string& config_path, const RunOverrides& overrides) {
  run_experiment(ExperimentConfig::parse_file(config_path), overrides);
}

}  // namespace brw

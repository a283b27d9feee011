#include "brw/rare_event.hpp"

#include <cmath>

#include <json.hpp>

#include "brw/errors.hpp"
#include "brw/numeric.hpp"

namespace brw {

const char* strategy_kind_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::SchroderSingleLine:
      return "schroder_single_line";
    case StrategyKind::BottcherUniform:
      return "bottcher_uniform";
    case StrategyKind::BottcherGeometric:
      return "bottcher_geometric";
  }
  return "?";
}

std::string StrategyBound::to_json() const {
  nlohmann::json j;
  j["kind"] = kind;
  j["n"] = n;
  j["log_bound"] = log_bound;
  j["se_log"] = se_log;
  j["measured_rate"] = measured_rate;
  j["theory_constant"] = theory_constant;
  nlohmann::json c = nlohmann::json::object();
  for (auto& [k, v] : components) c[k] = v;
  j["components"] = c;
  if (!rho_curve.empty()) {
    nlohmann::json curve = nlohmann::json::array();
    for (auto& [rho, lb] : rho_curve) curve.push_back({rho, lb});
    j["rho_curve"] = curve;
  }
  return j.dump(2);
}

namespace {

// P(Z_m([threshold, inf)) < target) by direct replication with the cohort
// engine (or particles when the population fits). Non-lattice laws beyond
// the particle cap fall back to the exact first-moment bound
//   P(count >= target) <= E[count]/target = m_off^m P(S_m >= y)/target
// with a Chernoff tail for the walk; the fallback can only understate the
// residual probability, so strategy bounds built on it stay certified.
EventProbability residual_probability(const ModelSpec& spec, int m, double threshold,
                                      double log_target, long reps, SplitRng rng) {
  BrwOptions opts;
  bool lattice = spec.step.is_lattice();
  bool particle_ok = std::pow(spec.off.mean(), m) <= opts.particle_cap;
  if (!lattice && !particle_ok) {
    double walk_tail = threshold > 0.0 ? -m * spec.rate(threshold / m) : 0.0;
    double p_lb = -std::expm1(m * spec.log_m() + walk_tail - log_target);
    if (p_lb <= 0.0)
      throw Error(
          "residual probability: first-moment bound is vacuous and the step law cannot be "
          "simulated at this scale");
    return EventProbability{reps, reps, p_lb};
  }
  SimMode mode = lattice ? SimMode::LatticeCohort : SimMode::ExactParticles;
  std::vector<ThresholdFn> ths{[threshold](int) { return threshold; }};
  EventProbability ep;
  ep.reps = reps;
  for (long r = 0; r < reps; ++r) {
    auto records = run_brw(spec.off, spec.step, m, ths, mode, rng.split(static_cast<std::uint64_t>(r)), opts);
    double count = records.back().level_counts[0];
    double log_count = count > 0.0 ? std::log(count) : -kInf;
    if (log_count < log_target) ++ep.successes;
  }
  ep.p_hat = static_cast<double>(ep.successes) / reps;
  return ep;
}

double binomial_se_log(const EventProbability& ep) {
  if (ep.successes == 0 || ep.reps == 0) return kInf;
  double p = ep.p_hat;
  return std::sqrt(std::max(0.0, p * (1.0 - p) / ep.reps)) / p;
}

}  // namespace

EventProbability direct_event_probability(const ModelSpec& spec, int n, long reps, SplitRng rng,
                                          SimMode mode) {
  double txs = spec.theta_x_star();
  std::vector<ThresholdFn> ths{[txs](int gen) { return txs * gen; }};
  BrwOptions opts;
  EventProbability ep;
  ep.reps = reps;
  double log_target = spec.a * n;
  for (long r = 0; r < reps; ++r) {
    auto records = run_brw(spec.off, spec.step, n, ths, mode, rng.split(static_cast<std::uint64_t>(r)), opts);
    double count = records.back().level_counts[0];
    double log_count = count > 0.0 ? std::log(count) : -kInf;
    if (log_count < log_target) ++ep.successes;
  }
  ep.p_hat = static_cast<double>(ep.successes) / reps;
  return ep;
}

// ---------------------------------------------------------------------------
// Schroder single-line strategy

StrategyBound schroder_strategy_bound(const ModelSpec& spec, double rho, int n, long reps,
                                      SplitRng rng, double eps, bool keep_samples) {
  double rbar = rho_bar(spec);
  if (!(rho > 0.0 && rho <= rbar + 1e-12))
    throw Error("schroder_strategy_bound: rho outside (0, rho_bar]");
  rho = std::min(rho, rbar);
  double d = d_of_rho(spec, rho);
  if (eps < 0.0) eps = 0.05 * d;
  int k = static_cast<int>(std::floor(rho * n));
  if (k < 1) throw ScheduleTooShort("schroder_strategy_bound: floor(rho n) must be >= 1");

  StrategyBound sb;
  sb.kind = strategy_kind_name(StrategyKind::SchroderSingleLine);
  sb.n = n;
  double log_p1_part = k * std::log(spec.off.p1());

  double depth = (d + eps) * n;
  auto walk = cramer_is_estimate(spec.step, depth / k, k, reps, rng.split(1), spec.rf.get(),
                                 keep_samples);

  long resid_reps = std::max<long>(200, reps / 500);
  int m = n - k;
  double threshold = depth + spec.theta_x_star() * n;
  auto resid = residual_probability(spec, m, threshold, spec.a * n, resid_reps, rng.split(2));

  double log_resid = resid.p_hat > 0.0 ? std::log(resid.p_hat) : -kInf;
  sb.log_bound = log_p1_part + walk.log_prob_estimate + log_resid;
  sb.se_log = std::hypot(walk.std_error, binomial_se_log(resid));
  sb.measured_rate = -sb.log_bound / n;

  sb.components["rho"] = rho;
  sb.components["d"] = d;
  sb.components["eps"] = eps;
  sb.components["prefix_generations"] = k;
  sb.components["log_p1_factor"] = log_p1_part;
  sb.components["log_walk_estimate"] = walk.log_prob_estimate;
  sb.components["walk_se_log"] = walk.std_error;
  sb.components["walk_tilt"] = walk.tilt;
  sb.components["walk_theory"] = -walk.theory;
  sb.components["log_residual"] = log_resid;
  sb.components["residual_p_hat"] = resid.p_hat;
  sb.components["residual_reps"] = static_cast<double>(resid.reps);
  if (keep_samples) {
    sb.walk_weights = std::move(walk.weights);
    sb.residual_successes = resid.successes;
    sb.residual_reps = resid.reps;
  }
  return sb;
}

StrategyBound optimize_schroder_bound(const ModelSpec& spec, int n, long reps, SplitRng rng,
                                      int grid_points, double eps) {
  double rbar = rho_bar(spec);
  StrategyBound best;
  best.log_bound = -kInf;
  std::vector<std::pair<double, double>> curve;
  for (int i = 1; i <= grid_points; ++i) {
    double rho = rbar * i / (grid_points + 1);
    if (std::floor(rho * n) < 1) continue;
    StrategyBound sb;
    try {
      sb = schroder_strategy_bound(spec, rho, n, reps, rng.split(static_cast<std::uint64_t>(i)), eps);
    } catch (const TiltOutsideDomain&) {
      // Jump depth beyond the walk's reach at this rho: the single-line
      // strategy contributes nothing here.
      curve.emplace_back(rho, -kInf);
      continue;
    }
    curve.emplace_back(rho, sb.log_bound);
    if (sb.log_bound > best.log_bound) best = std::move(sb);
  }
  if (best.log_bound == -kInf) throw Error("optimize_schroder_bound: no usable rho grid point");
  DeviationResult theory = schroder_light_rate(spec);
  best.theory_constant = theory.constant;
  best.components["argmin_rho_theory"] = theory.aux.at("argmin_rho");
  best.rho_curve = std::move(curve);
  return best;
}

// ---------------------------------------------------------------------------
// Bottcher bounded tail: uniform displacement strategy

double a_star_at(const ModelSpec& spec, double L) {
  double xs = spec.x_star;
  double txs = spec.theta_x_star();
  double log_b = std::log(static_cast<double>(spec.off.min_support()));
  double first = (spec.log_m() - spec.rate(xs)) * (L + txs) / (L + xs) +
                 (1.0 - spec.theta) * xs / (L + xs) * log_b;
  double second = spec.log_m() - spec.rate(txs);
  return std::min(first, second);
}

double c_star_at(const ModelSpec& spec, double L) {
  double B = spec.log_m() - spec.rate(spec.theta_x_star());
  double as = a_star_at(spec, L);
  if (as < B && spec.a > as && spec.a < B) return c_bar_at(spec, L);
  return (1.0 - spec.theta) * spec.x_star / (L + spec.x_star);
}

StrategyBound bottcher_uniform_bound(const ModelSpec& spec, double L_prime, double delta, int n,
                                     long reps, SplitRng rng) {
  if (classify_regime(spec) != Regime::BottcherBounded)
    throw RegimeMismatch("bottcher_uniform_bound: needs the bounded-tail Bottcher regime");
  if (!(L_prime > 0.0 && L_prime < spec.L))
    throw Error("bottcher_uniform_bound: L' must lie in (0, L)");
  double p_step = spec.step.cdf(-L_prime);
  if (!(p_step > 0.0)) throw Error("bottcher_uniform_bound: P(X <= -L') = 0");
  double b = static_cast<double>(spec.off.min_support());
  double p_b = spec.off.prob(spec.off.min_support());
  double cstar = c_star_at(spec, L_prime);
  int t_n = static_cast<int>(std::floor((cstar + delta) * n));
  if (t_n < 1) throw ScheduleTooShort("bottcher_uniform_bound: floor((c*+delta) n) must be >= 1");
  if (t_n >= n) t_n = n - 1;

  double geom = (std::pow(b, t_n) - 1.0) / (b - 1.0);  // sum_{k<t_n} b^k
  double bt = std::pow(b, t_n);
  double log_analytic = geom * (std::log(p_b) + std::log(p_step));

  long resid_reps = std::max<long>(200, reps / 500);
  double threshold = spec.theta_x_star() * n + L_prime * t_n;
  double log_target = spec.a * n - t_n * std::log(b);
  auto resid = residual_probability(spec, n - t_n, threshold, log_target, resid_reps, rng.split(2));
  double log_resid = resid.p_hat > 0.0 ? std::log(resid.p_hat) : -kInf;

  StrategyBound sb;
  sb.kind = strategy_kind_name(StrategyKind::BottcherUniform);
  sb.n = n;
  sb.log_bound = log_analytic + bt * log_resid;
  sb.se_log = bt * binomial_se_log(resid);
  double neg_log = -sb.log_bound;
  sb.measured_rate = std::log(neg_log) / n;  // (1/n) log(-log L)
  sb.theory_constant = (cstar + delta) * std::log(b);
  sb.components["L_prime"] = L_prime;
  sb.components["delta"] = delta;
  sb.components["c_star"] = cstar;
  sb.components["t_n"] = t_n;
  sb.components["log_p_b"] = std::log(p_b);
  sb.components["log_p_step"] = std::log(p_step);
  sb.components["log_analytic"] = log_analytic;
  sb.components["residual_p_hat"] = resid.p_hat;
  sb.components["residual_reps"] = static_cast<double>(resid.reps);
  // Analytic skeleton with a 0.9 residual placeholder.
  sb.components["skeleton_loglog_rate"] =
      (t_n * std::log(b) + std::log(-std::log(0.9 * p_b * p_step))) / n;
  return sb;
}

// ---------------------------------------------------------------------------
// Bottcher super-Weibull: geometric displacement schedule

StrategySchedule bottcher_geometric_schedule(const ModelSpec& spec, int n, double delta) {
  if (classify_regime(spec) != Regime::BottcherWeibull || spec.step.tail_alpha() <= 1.0)
    throw RegimeMismatch("bottcher_geometric_schedule: needs the Bottcher Weibull regime with alpha > 1");
  double alpha = spec.step.tail_alpha();
  double b = static_cast<double>(spec.off.min_support());
  double log_b = std::log(b);
  int t_n = static_cast<int>(std::floor(alpha / (2.0 * log_b) * std::log(static_cast<double>(n))));
  if (t_n < 1) throw ScheduleTooShort("bottcher_geometric_schedule: t_n = 0 at this n");
  double chat = c_hat(spec);
  if (delta < 0.0) delta = 0.05 * chat;

  StrategySchedule sched;
  sched.kind = StrategyKind::BottcherGeometric;
  sched.t_n = t_n;
  sched.delta = delta;
  sched.b_alpha = std::pow(b, 1.0 / (alpha - 1.0));
  double target = (chat + delta) * n;
  KahanSum total, weighted;
  for (int k = 1; k <= t_n; ++k) {
    double a_k = (sched.b_alpha - 1.0) / std::pow(sched.b_alpha, k) * target;
    sched.a_k.push_back(a_k);
    total.add(a_k);
    weighted.add(std::pow(a_k, alpha) * std::pow(b, k));
  }
  if (total.value() < (chat + delta / 2.0) * n - 1e-9 || total.value() > target + 1e-9)
    throw ScheduleTooShort(
        "bottcher_geometric_schedule: truncated displacement sum misses [(c+delta/2)n, (c+delta)n]; "
        "increase delta or n");
  double cap = std::pow(std::pow(b, 1.0 / (alpha - 1.0)) - 1.0, alpha - 1.0) *
               std::pow(chat + delta, alpha) * std::pow(n, alpha);
  if (weighted.value() > cap * (1.0 + 1e-9))
    throw ScheduleTooShort("bottcher_geometric_schedule: weighted displacement sum exceeds its cap");
  return sched;
}

StrategyBound bottcher_geometric_bound(const ModelSpec& spec, int n, long reps, SplitRng rng,
                                       double delta) {
  double chat = c_hat(spec);
  if (delta < 0.0) delta = 0.05 * chat;
  StrategySchedule sched = bottcher_geometric_schedule(spec, n, delta);
  double alpha = spec.step.tail_alpha();
  double lambda = spec.step.tail_lambda();
  double b = static_cast<double>(spec.off.min_support());
  double p_b = spec.off.prob(spec.off.min_support());
  int t_n = sched.t_n;

  KahanSum analytic;
  analytic.add((std::pow(b, t_n) - 1.0) / (b - 1.0) * std::log(p_b));
  for (int k = 1; k <= t_n; ++k) {
    double p_k = spec.step.cdf(-sched.a_k[k - 1]);
    if (!(p_k > 0.0)) throw Error("bottcher_geometric_bound: zero displacement probability");
    analytic.add(std::pow(b, k) * std::log(p_k));
  }

  double bt = std::pow(b, t_n);
  long resid_reps = std::max<long>(200, reps / 500);
  double threshold = (spec.theta_x_star() + chat + delta / 2.0) * n;
  double log_target = spec.a * n - t_n * std::log(b);
  auto resid = residual_probability(spec, n - t_n, threshold, log_target, resid_reps, rng.split(2));
  double log_resid = resid.p_hat > 0.0 ? std::log(resid.p_hat) : -kInf;

  StrategyBound sb;
  sb.kind = strategy_kind_name(StrategyKind::BottcherGeometric);
  sb.n = n;
  sb.log_bound = analytic.value() + bt * log_resid;
  sb.se_log = bt * binomial_se_log(resid);
  double n_alpha = std::pow(static_cast<double>(n), alpha);
  sb.measured_rate = -sb.log_bound / n_alpha;  // positive rate on the n^alpha scale
  DeviationResult theory = bottcher_weibull_rate(spec);
  sb.theory_constant = theory.constant;
  sb.components["delta"] = delta;
  sb.components["c_hat"] = chat;
  sb.components["t_n"] = t_n;
  sb.components["b_alpha"] = sched.b_alpha;
  sb.components["log_analytic"] = analytic.value();
  sb.components["residual_p_hat"] = resid.p_hat;
  sb.components["residual_reps"] = static_cast<double>(resid.reps);
  sb.components["strategy_rate_target"] =
      lambda * std::pow(std::pow(b, 1.0 / (alpha - 1.0)) - 1.0, alpha - 1.0) *
      std::pow(chat + delta, alpha);
  return sb;
}

}  // namespace brw

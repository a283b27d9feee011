#pragma once

#include <map>
#include <string>
#include <vector>

#include "brw/deviation.hpp"
#include "brw/simulator.hpp"

namespace brw {

enum class StrategyKind { SchroderSingleLine, BottcherUniform, BottcherGeometric };

const char* strategy_kind_name(StrategyKind k);

// Displacement plan behind a lower-bound estimator: one deep jump after a
// single-line prefix (Schroder), a constant per-step push (Bottcher bounded),
// or the geometric per-generation schedule a_k (Bottcher super-Weibull).
struct StrategySchedule {
  StrategyKind kind = StrategyKind::SchroderSingleLine;
  int t_n = 0;
  double rho = 0.0, depth = 0.0;  // Schroder: prefix fraction and (d+eps)
  double L_prime = 0.0;           // Bottcher uniform
  std::vector<double> a_k;        // Bottcher geometric, k = 1..t_n
  double delta = 0.0;
  double b_alpha = 0.0;
};

// Verifies the two displacement-sum invariants before returning.
StrategySchedule bottcher_geometric_schedule(const ModelSpec& spec, int n, double delta);

struct StrategyBound {
  std::string kind;
  int n = 0;
  double log_bound = 0.0;       // log of the certified lower bound L
  double se_log = 0.0;          // MC standard error of log L
  double measured_rate = 0.0;   // log L mapped onto the regime's scale
  double theory_constant = 0.0; // matching rate constant from the deviation module
  std::map<std::string, double> components;
  std::vector<std::pair<double, double>> rho_curve;  // (rho, log L) when optimizing

  // Raw Monte Carlo summaries, kept when requested so validity checks can
  // bootstrap the bound.
  std::vector<double> walk_weights;
  long residual_successes = 0;
  long residual_reps = 0;

  std::string to_json() const;
};

struct EventProbability {
  long successes = 0;
  long reps = 0;
  double p_hat = 0.0;
};

// Direct Monte Carlo of the lower-deviation event P(Z_n([theta x* n, inf)) < e^{an}).
EventProbability direct_event_probability(const ModelSpec& spec, int n, long reps, SplitRng rng,
                                          SimMode mode);

// log L for L = p1^{floor(rho n)} * P(S_{floor(rho n)} <= -(d+eps) n)
//             * P(Z_{n-floor(rho n)}([(d+eps+theta x*) n, inf)) < e^{an}).
// The first factor is analytic, the walk factor comes from the tilted
// importance-sampling oracle, the residual from direct simulation.
StrategyBound schroder_strategy_bound(const ModelSpec& spec, double rho, int n, long reps,
                                      SplitRng rng, double eps = -1.0, bool keep_samples = false);

// Maximizes the Schroder bound over a rho grid in (0, rho_bar].
StrategyBound optimize_schroder_bound(const ModelSpec& spec, int n, long reps, SplitRng rng,
                                      int grid_points = 12, double eps = -1.0);

// Bottcher bounded tail: force b-ary branching with every displacement
// <= -L' for t_n = floor((c*(L')+delta) n) generations.
StrategyBound bottcher_uniform_bound(const ModelSpec& spec, double L_prime, double delta, int n,
                                     long reps, SplitRng rng);

// Bottcher super-Weibull: geometric displacement schedule a_k.
StrategyBound bottcher_geometric_bound(const ModelSpec& spec, int n, long reps, SplitRng rng,
                                       double delta = -1.0);

// c*(L) from the bounded-tail lower-bound strategy, with L substitutable.
double c_star_at(const ModelSpec& spec, double L);
double a_star_at(const ModelSpec& spec, double L);

}  // namespace brw

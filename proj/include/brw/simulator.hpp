#pragma once

#include <functional>
#include <vector>

#include "brw/laws.hpp"
#include "brw/rate_function.hpp"
#include "brw/rng.hpp"

namespace brw {

enum class SimMode { ExactParticles, LatticeCohort, MeanField };

const char* sim_mode_name(SimMode m);

// Threshold as a function of the generation index.
using ThresholdFn = std::function<double(int)>;

struct GenerationRecord {
  int n = 0;
  double total = 0.0;
  std::vector<double> level_counts;  // Z_n([y_i(n), inf)), aligned with thresholds
  SimMode mode = SimMode::ExactParticles;
  bool mean_field_engaged = false;
};

struct BrwOptions {
  double particle_cap = 5e6;     // expected-population cap for particle mode
  double cohort_switch = 1e6;    // per-site count above which a cohort goes mean-field
};

// One run of the branching random walk, one record per generation 0..n_max.
// Particle mode is the literal definition. Lattice-cohort mode keeps
// per-site counts and draws multinomial offspring/step splits per site,
// which is exact in distribution; sites whose count exceeds the switch
// evolve by expected counts with stochastic rounding. MeanField evolves
// expectations deterministically (no randomness at all).
std::vector<GenerationRecord> run_brw(const OffspringLaw& off, const StepLaw& step, int n_max,
                                      const std::vector<ThresholdFn>& thresholds, SimMode mode,
                                      SplitRng rng, const BrwOptions& opts = {});

// Least-squares slope of log Z_n([y(n), inf)) against n over [n_lo, n_hi].
double biggins_slope(const std::vector<GenerationRecord>& records, int threshold_index, int n_lo,
                     int n_hi);

// Exact distribution of |Z_n| on {0..cap} plus lumped overflow mass, by
// iterated PGF composition F_{k+1} = f(F_k) on truncated coefficient vectors.
struct GwDistribution {
  int n = 0;
  int cap = 0;
  std::vector<double> probs;  // probs[k] = P(|Z_n| = k), k <= cap
  double overflow = 0.0;      // P(|Z_n| > cap)

  double cdf_below(double threshold) const;  // P(|Z_n| < threshold)
};

GwDistribution gw_pgf_iterate(const OffspringLaw& off, int n, int cap);

// F_n(s) = E[s^{|Z_n|}] by scalar iteration of the offspring PGF.
double gw_pgf_value(const OffspringLaw& off, double s, int n);

struct WalkOracleResult {
  int n = 0;
  double x = 0.0;
  double log_prob_estimate = 0.0;  // log P(S_n <= -x n)
  double std_error = 0.0;          // standard error of the log estimate
  double theory = 0.0;             // I(-x) * n
  double tilt = 0.0;
  std::vector<double> weights;     // per-replica IS weights (kept when requested)
};

// Importance-sampling estimate of P(S_n <= -x n) under the exponential tilt
// solving Lambda'(t) = -x, with exact likelihood-ratio reweighting.
WalkOracleResult cramer_is_estimate(const StepLaw& step, double x, int n, long reps, SplitRng rng,
                                    const RateFunction* rf = nullptr, bool keep_weights = false);

// Direct-MC comparison of P(S_n <= -x) against the heavy-tail bound shapes
// (polynomial n^2 x^{-alpha} for Pareto, stretched-exponential for Weibull).
struct TailBoundRow {
  int n = 0;
  double x = 0.0;
  double p_hat = 0.0;
  double se = 0.0;
  double bound = 0.0;
  bool holds = false;
};

struct TailBoundReport {
  std::string bound_kind;
  double fitted_const = 0.0;
  std::vector<TailBoundRow> rows;
};

TailBoundReport heavy_tail_sum_check(const StepLaw& step, const std::vector<int>& ns,
                                     const std::vector<double>& xs, long reps, SplitRng rng);

// Runs `reps` independent replicas (thread-parallel, replica-keyed streams;
// results are independent of the job count) and reduces each run's records.
void for_each_replica(long reps, int jobs, const std::function<void(long)>& body);

}  // namespace brw

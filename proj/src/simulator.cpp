#include "brw/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <thread>

#include "brw/errors.hpp"
#include "brw/numeric.hpp"

namespace brw {

const char* sim_mode_name(SimMode m) {
  switch (m) {
    case SimMode::ExactParticles:
      return "exact_particles";
    case SimMode::LatticeCohort:
      return "lattice_cohort";
    case SimMode::MeanField:
      return "mean_field";
  }
  return "?";
}

namespace {

// Snaps a threshold up to the lattice so off-lattice values do not silently
// count the same sites as their floor.
long long lattice_ceil(double y, double span) {
  return static_cast<long long>(std::ceil(y / span - 1e-9));
}

std::vector<GenerationRecord> run_particles(const OffspringLaw& off, const StepLaw& step,
                                            int n_max, const std::vector<ThresholdFn>& thresholds,
                                            SplitRng& rng, const BrwOptions& opts) {
  if (std::pow(off.mean(), n_max) > opts.particle_cap)
    throw PopulationCapExceeded("particle mode: expected population m^n exceeds the cap");
  std::vector<GenerationRecord> records;
  std::vector<double> pos{0.0};
  for (int n = 0; n <= n_max; ++n) {
    GenerationRecord rec;
    rec.n = n;
    rec.mode = SimMode::ExactParticles;
    rec.total = static_cast<double>(pos.size());
    for (auto& th : thresholds) {
      double y = th(n);
      double count = 0.0;
      for (double p : pos)
        if (p >= y - 1e-12) count += 1.0;
      rec.level_counts.push_back(count);
    }
    records.push_back(std::move(rec));
    if (n == n_max) break;
    std::vector<double> next;
    next.reserve(pos.size() * 2);
    for (double p : pos) {
      int k = off.sample(rng);
      for (int c = 0; c < k; ++c) next.push_back(p + step.sample(rng));
    }
    if (static_cast<double>(next.size()) > 4.0 * opts.particle_cap)
      throw PopulationCapExceeded("particle mode: realized population exceeded the cap");
    pos.swap(next);
  }
  return records;
}

std::vector<GenerationRecord> run_cohort(const OffspringLaw& off, const StepLaw& step, int n_max,
                                         const std::vector<ThresholdFn>& thresholds, SimMode mode,
                                         SplitRng& rng, const BrwOptions& opts) {
  if (!step.is_lattice())
    throw NonLatticeStep("cohort mode requires a finite-lattice step law");
  double span = step.lattice_span();
  const auto& steps = step.lattice_steps();
  std::vector<double> step_probs;
  for (auto& [o, p] : steps) {
    (void)o;
    step_probs.push_back(p);
  }
  std::vector<double> off_probs;
  for (auto& [k, p] : off.probs()) {
    (void)k;
    off_probs.push_back(p);
  }

  bool deterministic = mode == SimMode::MeanField;
  std::map<long long, double> sites{{0, 1.0}};
  std::vector<GenerationRecord> records;
  bool engaged = deterministic;

  for (int n = 0; n <= n_max; ++n) {
    GenerationRecord rec;
    rec.n = n;
    rec.mode = mode;
    rec.mean_field_engaged = engaged;
    double total = 0.0;
    for (auto& [site, c] : sites) {
      (void)site;
      total += c;
    }
    rec.total = total;
    for (auto& th : thresholds) {
      long long min_idx = lattice_ceil(th(n), span);
      double count = 0.0;
      for (auto it = sites.lower_bound(min_idx); it != sites.end(); ++it) count += it->second;
      rec.level_counts.push_back(count);
    }
    records.push_back(std::move(rec));
    if (n == n_max) break;

    std::map<long long, double> next;
    std::vector<std::uint64_t> kcounts, scounts;
    for (auto& [site, c] : sites) {
      bool mean_field = deterministic || c > opts.cohort_switch ||
                        c != std::floor(c);  // fractional counts only arise mean-field
      if (mean_field) {
        engaged = true;
        SplitRng srng = rng.split(static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(site + (1LL << 62)), 1);
        double children = c * off.mean();
        for (size_t j = 0; j < steps.size(); ++j) {
          double v = children * step_probs[j];
          if (!deterministic) {
            // Stochastic rounding keeps per-site expectations exact.
            double fl = std::floor(v);
            v = fl + (srng.next_double() < v - fl ? 1.0 : 0.0);
            if (v == 0.0) continue;
          }
          next[site + steps[j].first] += v;
        }
      } else {
        SplitRng srng = rng.split(static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(site + (1LL << 62)), 2);
        auto count = static_cast<std::uint64_t>(c);
        multinomial_draw(srng, count, off_probs, kcounts);
        std::uint64_t children = 0;
        size_t idx = 0;
        for (auto& [k, p] : off.probs()) {
          (void)p;
          children += static_cast<std::uint64_t>(k) * kcounts[idx++];
        }
        if (children == 0) continue;
        multinomial_draw(srng, children, step_probs, scounts);
        for (size_t j = 0; j < steps.size(); ++j) {
          if (scounts[j] > 0) next[site + steps[j].first] += static_cast<double>(scounts[j]);
        }
      }
    }
    sites.swap(next);
  }
  return records;
}

}  // namespace

std::vector<GenerationRecord> run_brw(const OffspringLaw& off, const StepLaw& step, int n_max,
                                      const std::vector<ThresholdFn>& thresholds, SimMode mode,
                                      SplitRng rng, const BrwOptions& opts) {
  if (n_max < 0) throw Error("run_brw: n_max must be >= 0");
  if (mode == SimMode::ExactParticles) return run_particles(off, step, n_max, thresholds, rng, opts);
  return run_cohort(off, step, n_max, thresholds, mode, rng, opts);
}

double biggins_slope(const std::vector<GenerationRecord>& records, int threshold_index, int n_lo,
                     int n_hi) {
  std::vector<double> xs, ys;
  for (auto& rec : records) {
    if (rec.n < n_lo || rec.n > n_hi) continue;
    double c = rec.level_counts.at(threshold_index);
    if (c <= 0.0)
      throw EmptyLevelSet("biggins_slope: zero level-set count at n=" + std::to_string(rec.n));
    xs.push_back(static_cast<double>(rec.n));
    ys.push_back(std::log(c));
  }
  if (xs.size() < 2) throw Error("biggins_slope: window too small");
  return lsq_slope(xs, ys);
}

// ---------------------------------------------------------------------------
// Exact Galton-Watson PGF iteration

double GwDistribution::cdf_below(double threshold) const {
  double acc = 0.0;
  for (int k = 0; k < static_cast<int>(probs.size()) && k < threshold; ++k) acc += probs[k];
  return acc;
}

GwDistribution gw_pgf_iterate(const OffspringLaw& off, int n, int cap) {
  if (cap < 1) throw Error("gw_pgf_iterate: cap must be >= 1");
  // dist holds the truncated coefficient vector of F_k(s) = E[s^{|Z_k|}].
  // Truncated convolution is exact for indices <= cap: mass lost to the lump
  // can only land above the cap because indices add.
  std::vector<double> dist(cap + 1, 0.0);
  dist[1] = 1.0;  // |Z_0| = 1
  std::vector<double> powk(cap + 1, 0.0), tmp(cap + 1, 0.0), next(cap + 1, 0.0);
  for (int gen = 0; gen < n; ++gen) {
    // F_{k+1}(s) = f(F_k(s)) = sum_j p_j F_k(s)^j.
    std::fill(next.begin(), next.end(), 0.0);
    powk.assign(cap + 1, 0.0);
    powk[0] = 1.0;
    int prev = 0;
    for (auto& [k, p] : off.probs()) {
      for (; prev < k; ++prev) {
        std::fill(tmp.begin(), tmp.end(), 0.0);
        for (int a = 0; a <= cap; ++a) {
          double pa = powk[a];
          if (pa == 0.0) continue;
          int bmax = cap - a;
          for (int b2 = 0; b2 <= bmax; ++b2) {
            double pb = dist[b2];
            if (pb != 0.0) tmp[a + b2] += pa * pb;
          }
        }
        powk.swap(tmp);
      }
      for (int i = 0; i <= cap; ++i) next[i] += p * powk[i];
    }
    dist.swap(next);
  }
  GwDistribution res;
  res.n = n;
  res.cap = cap;
  res.probs = std::move(dist);
  double mass = 0.0;
  for (double v : res.probs) mass += v;
  res.overflow = std::max(0.0, 1.0 - mass);
  return res;
}

double gw_pgf_value(const OffspringLaw& off, double s, int n) {
  double u = s;
  for (int k = 0; k < n; ++k) u = off.pgf(u);
  return u;
}

// ---------------------------------------------------------------------------
// Cramer importance-sampling oracle

WalkOracleResult cramer_is_estimate(const StepLaw& step, double x, int n, long reps, SplitRng rng,
                                    const RateFunction* rf, bool keep_weights) {
  std::shared_ptr<RateFunction> owned;
  if (rf == nullptr) {
    owned = std::make_shared<RateFunction>(step);
    rf = owned.get();
  }
  double t = 0.0;
  if (x != 0.0) {
    if (!step.light_left_tail())
      throw TiltOutsideDomain("cramer_is_estimate: step law has no negative exponential moment");
    // Solve Lambda'(t) = -x on (t_lo, 0); Lambda' is increasing.
    auto dlam = [&](double tt) {
      double h = 1e-7 * std::max(1.0, std::fabs(tt));
      if (step.mgf_domain_lo() > -kInf) h = std::min(h, (tt - step.mgf_domain_lo()) / 8.0);
      return (step.log_mgf(tt + h) - step.log_mgf(tt - h)) / (2.0 * h);
    };
    const double lo_limit = step.mgf_domain_lo();
    double lo = lo_limit > -kInf ? lo_limit / 2.0 : -1.0;
    for (int it = 0; dlam(lo) > -x; ++it) {
      if (it > 80 || lo < -1e17)
        throw TiltOutsideDomain("cramer_is_estimate: deviation depth beyond the tilt range");
      lo = lo_limit > -kInf ? lo + 0.75 * (lo_limit - lo) : 2.0 * lo;
    }
    t = bisect_root([&](double tt) { return dlam(tt) + x; }, lo, 0.0, 1e-12);
  }
  TiltedStep tilted = step.tilt(t);

  double target = -x * n;
  KahanSum sum, sumsq;
  std::vector<double> weights;
  if (keep_weights) weights.reserve(reps);
  for (long r = 0; r < reps; ++r) {
    SplitRng rrng = rng.split(static_cast<std::uint64_t>(r));
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += tilted.sample(rrng);
    double w = 0.0;
    if (s <= target) w = std::exp(n * tilted.log_mgf_at_t - t * s);
    sum.add(w);
    sumsq.add(w * w);
    if (keep_weights) weights.push_back(w);
  }
  double mean = sum.value() / reps;
  double var = std::max(0.0, sumsq.value() / reps - mean * mean);
  double se = std::sqrt(var / reps);

  WalkOracleResult res;
  res.n = n;
  res.x = x;
  res.tilt = t;
  res.log_prob_estimate = mean > 0.0 ? std::log(mean) : -kInf;
  res.std_error = mean > 0.0 ? se / mean : kInf;
  res.theory = (*rf)(-x) * n;
  res.weights = std::move(weights);
  return res;
}

// ---------------------------------------------------------------------------
// Heavy-tail sum bounds

TailBoundReport heavy_tail_sum_check(const StepLaw& step, const std::vector<int>& ns,
                                     const std::vector<double>& xs, long reps, SplitRng rng) {
  bool pareto = step.family() == StepFamily::NegParetoTail;
  bool weibull =
      step.family() == StepFamily::NegWeibullTail && step.tail_alpha() < 1.0;
  if (!pareto && !weibull)
    throw RegimeMismatch("heavy_tail_sum_check: needs a Pareto or Weibull(alpha<1) tail");
  TailBoundReport rep;
  rep.bound_kind = pareto ? "pareto_n2_x_alpha" : "weibull_stretched_exponential";
  double alpha = step.tail_alpha();
  double lambda = step.tail_lambda();
  bool first = true;
  for (int n : ns) {
    for (double x : xs) {
      long hits = 0;
      for (long r = 0; r < reps; ++r) {
        SplitRng rrng = rng.split(static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(n),
                                  static_cast<std::uint64_t>(x * 1e6));
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += step.sample(rrng);
        if (s <= -x) ++hits;
      }
      TailBoundRow row;
      row.n = n;
      row.x = x;
      row.p_hat = static_cast<double>(hits) / reps;
      row.se = std::sqrt(row.p_hat * (1.0 - row.p_hat) / reps);
      double shape = pareto ? n * n * std::pow(x, -alpha)
                            : std::exp(-0.8 * lambda * std::pow(x, alpha));
      if (first && row.p_hat > 0.0) {
        rep.fitted_const = row.p_hat / shape;
        first = false;
      }
      row.bound = std::max(1.0, 2.0 * rep.fitted_const) * shape;
      row.holds = x <= 0.0 || row.p_hat <= row.bound;
      rep.rows.push_back(row);
    }
  }
  return rep;
}

void for_each_replica(long reps, int jobs, const std::function<void(long)>& body) {
  if (jobs <= 1) {
    for (long r = 0; r < reps; ++r) body(r);
    return;
  }
  std::vector<std::thread> threads;
  long chunk = (reps + jobs - 1) / jobs;
  for (int j = 0; j < jobs; ++j) {
    long lo = j * chunk;
    long hi = std::min(reps, lo + chunk);
    if (lo >= hi) break;
    threads.emplace_back([lo, hi, &body] {
      for (long r = lo; r < hi; ++r) body(r);
    });
  }
  for (auto& t : threads) t.join();
}

}  // namespace brw

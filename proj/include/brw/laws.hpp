#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "brw/rng.hpp"

namespace brw {

// Finite-support reproduction law {p_k}. p_0 = 0 and p_1 < 1 are required,
// so the process survives and the mean m exceeds 1.
class OffspringLaw {
 public:
  explicit OffspringLaw(std::vector<std::pair<int, double>> probs);

  double mean() const { return m_; }
  int min_support() const { return b_; }   // b = min{k : p_k > 0}
  int max_support() const { return kmax_; }
  double p1() const { return p1_; }
  double prob(int k) const;
  const std::vector<std::pair<int, double>>& probs() const { return probs_; }

  int sample(SplitRng& rng) const;
  // PGF f(s) = sum_k p_k s^k.
  double pgf(double s) const;

 private:
  std::vector<std::pair<int, double>> probs_;  // sorted by k, positive mass only
  double m_ = 0.0;
  int b_ = 0;
  int kmax_ = 0;
  double p1_ = 0.0;
};

enum class StepFamily {
  Rademacher,
  FiniteSupport,
  Gaussian,
  NegWeibullTail,
  NegParetoTail,
  NegGumbelTail,
};

const char* step_family_name(StepFamily f);

// Sampler + log-likelihood-ratio evaluator for the exponentially tilted law
// dP_t = e^{t x - Lambda(t)} dP. log_ratio(x) = log dP/dP_t (x), the weight
// attached to a draw x when estimating P-expectations from P_t samples.
struct TiltedStep {
  double t = 0.0;
  double log_mgf_at_t = 0.0;
  std::function<double(SplitRng&)> sample;

  double log_ratio(double x) const { return log_mgf_at_t - t * x; }
};

// Mean-zero step distribution. The three tail families are piecewise: an
// exact analytic left tail on (-inf, -x0] and a uniform core inside
// [-x0, x0] whose center is shifted so the mean is exactly zero. The tail
// probabilities therefore match their closed forms exactly, which is what
// the level-set rate constants are sensitive to.
class StepLaw {
 public:
  static StepLaw rademacher(double s);
  // Points are recentered so the mean is zero.
  static StepLaw finite_support(std::vector<std::pair<double, double>> points);
  static StepLaw gaussian(double sigma);
  // P(X <= -x) = q e^{-lambda x^alpha} for x >= x0.
  static StepLaw neg_weibull(double lambda, double alpha, double q, double x0);
  // P(X < -x) = q x^{-alpha} for x >= x0; alpha > 1 so the mean exists.
  static StepLaw neg_pareto(double alpha, double q, double x0);
  // P(X <= -x) = exp{-e^{x^alpha}} for x >= x0 (the Theta(1) factor is 1).
  static StepLaw neg_gumbel(double alpha, double x0);

  StepFamily family() const { return family_; }

  double sample(SplitRng& rng) const;
  double cdf(double x) const;  // exact P(X <= x)

  // Lambda(t) = log E[e^{tX}] as an extended real (+inf outside the domain).
  double log_mgf(double t) const;
  double mgf_domain_lo() const { return t_lo_; }
  bool mgf_domain_lo_closed() const { return t_lo_closed_; }

  double ess_inf() const { return ess_inf_; }
  double ess_sup() const { return ess_sup_; }
  double atom_at_inf() const { return atom_inf_; }
  double atom_at_sup() const { return atom_sup_; }
  double mean_shift() const { return center_shift_; }

  // True when E[e^{kappa X}] < inf for some kappa < 0.
  bool light_left_tail() const;

  TiltedStep tilt(double t) const;  // throws TiltOutsideDomain if Lambda(t)=+inf

  // Lattice structure (needed by the cohort simulator).
  bool is_lattice() const { return lattice_; }
  double lattice_span() const { return span_; }
  const std::vector<std::pair<long long, double>>& lattice_steps() const { return lat_steps_; }

  // Tail parameters (zero/irrelevant for non-tail families).
  double tail_lambda() const { return lambda_; }
  double tail_alpha() const { return alpha_; }
  double tail_q() const { return q_; }
  double tail_x0() const { return x0_; }
  double tail_mass() const { return w_; }

  std::string describe() const;

 private:
  StepLaw() = default;
  void finalize_tail_family();
  void detect_lattice();

  double tail_log_density(double y) const;      // density of |X| on [x0, inf)
  double tail_survival(double y) const;         // P(X <= -y) for y >= x0
  double tail_inverse_survival(double u) const; // conditional on the tail
  // log of int_{x0}^inf e^{-t y} f_tail(y) dy; +inf when divergent.
  double log_tail_mgf(double t) const;
  bool tail_mgf_finite(double t) const;

  StepFamily family_ = StepFamily::Rademacher;
  double s_ = 1.0;
  double sigma_ = 1.0;
  std::vector<std::pair<double, double>> pts_;

  double lambda_ = 0.0, alpha_ = 0.0, q_ = 1.0, x0_ = 0.0;
  double w_ = 0.0;                    // total tail mass
  double core_lo_ = 0.0, core_hi_ = 0.0;
  double core_c_ = 0.0, core_r_ = 0.0;
  double center_shift_ = 0.0;

  double ess_inf_ = 0.0, ess_sup_ = 0.0;
  double atom_inf_ = 0.0, atom_sup_ = 0.0;
  double t_lo_ = 0.0;
  bool t_lo_closed_ = false;

  bool lattice_ = false;
  double span_ = 0.0;
  std::vector<std::pair<long long, double>> lat_steps_;
};

}  // namespace brw

#pragma once

#include <map>
#include <memory>
#include <ostream>
#include <string>

#include "brw/laws.hpp"
#include "brw/rate_function.hpp"

namespace brw {

enum class Regime {
  SchroderLight,
  SchroderPareto,
  SchroderWeibull,
  BottcherBounded,
  BottcherWeibull,
  BottcherGumbel,
  BottcherPareto,
};

// Decay scale of the lower-deviation probability p_n = P(Z_n([theta x* n, inf)) < e^{an}):
//   N             : (1/n) log p_n            -> -constant
//   LogN          : (1/log n) log p_n        -> -constant
//   NAlpha        : (1/n^alpha) log p_n      -> -constant
//   LogLogLinearN : (1/n) log(-log p_n)      -> +constant
//   LogLogNFrac   : (1/n^{alpha/(1+alpha)}) log(-log p_n) -> +constant
enum class Scale { N, LogN, NAlpha, LogLogLinearN, LogLogNFrac };

const char* regime_name(Regime r);
const char* scale_name(Scale s);

// Model under study: offspring law, step law, level slope theta in [0,1) and
// population exponent a in [0, log m - I(theta x*)).
struct ModelSpec {
  OffspringLaw off;
  StepLaw step;
  std::shared_ptr<RateFunction> rf;
  double theta = 0.0;
  double a = 0.0;
  double x_star = 0.0;  // derived speed
  double L = kInf;       // -ess inf of the step

  static ModelSpec make(OffspringLaw off, StepLaw step, double theta, double a);

  double log_m() const { return std::log(off.mean()); }
  double theta_x_star() const { return theta * x_star; }
  double rate(double x) const { return (*rf)(x); }
};

struct DeviationResult {
  Regime regime;
  Scale scale;
  double constant = 0.0;
  std::string branch;
  std::map<std::string, double> aux;

  std::string to_json() const;  // {regime, scale, constant, aux:{...}}
};

Regime classify_regime(const ModelSpec& spec);

// f(rho) = log m - I(theta x*/(1-rho)) - a/(1-rho); -inf beyond the support edge.
double f_rho(const ModelSpec& spec, double rho);
// g_rho(h) = log m - I((h + theta x*)/(1-rho)) - a/(1-rho).
double g_rho(const ModelSpec& spec, double rho, double h);

// Largest rho in (0,1) with f(rho) >= 0.
double rho_bar(const ModelSpec& spec);
// Largest h >= 0 with g_rho(h) >= 0, for rho in (0, rho_bar].
double d_of_rho(const ModelSpec& spec, double rho);

// Limit-rate constants. Each checks its regime precondition and throws
// RegimeMismatch otherwise.
DeviationResult schroder_light_rate(const ModelSpec& spec);
DeviationResult schroder_heavy_rate(const ModelSpec& spec);
DeviationResult bottcher_bounded_rate(const ModelSpec& spec);
DeviationResult bottcher_weibull_rate(const ModelSpec& spec);
DeviationResult bottcher_remark_rates(const ModelSpec& spec);

// Dispatches on classify_regime.
DeviationResult compute_rate(const ModelSpec& spec);

// c with log m - I(theta x* + c) = a (or its boundary value (1-theta) x*).
double c_hat(const ModelSpec& spec);
// Bottcher bounded-tail phase transition point.
double a_star(const ModelSpec& spec);
// F_L(c) = log m - I((theta x* + L c)/(1-c)) - (a - c log b)/(1-c).
double F_L(const ModelSpec& spec, double L, double c);
// Unique root of F_L on (0, (1-theta)x*/(L+x*)); c_bar_at allows evaluating
// the root for a substituted L' < L (the strategy estimators need it).
double c_bar(const ModelSpec& spec);
double c_bar_at(const ModelSpec& spec, double L);

// Curve dumps for plotting (CSV with a header row).
void dump_f_curve(const ModelSpec& spec, std::ostream& os, int points = 200);
void dump_d_curve(const ModelSpec& spec, std::ostream& os, int points = 50);
void dump_FL_curve(const ModelSpec& spec, std::ostream& os, int points = 200);

}  // namespace brw

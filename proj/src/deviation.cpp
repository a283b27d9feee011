#include "brw/deviation.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "brw/errors.hpp"
#include "brw/numeric.hpp"

namespace brw {

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::SchroderLight:
      return "schroder_light";
    case Regime::SchroderPareto:
      return "schroder_pareto";
    case Regime::SchroderWeibull:
      return "schroder_weibull";
    case Regime::BottcherBounded:
      return "bottcher_bounded";
    case Regime::BottcherWeibull:
      return "bottcher_weibull";
    case Regime::BottcherGumbel:
      return "bottcher_gumbel";
    case Regime::BottcherPareto:
      return "bottcher_pareto";
  }
  return "?";
}

const char* scale_name(Scale s) {
  switch (s) {
    case Scale::N:
      return "n";
    case Scale::LogN:
      return "log_n";
    case Scale::NAlpha:
      return "n_alpha";
    case Scale::LogLogLinearN:
      return "loglog_linear_n";
    case Scale::LogLogNFrac:
      return "loglog_n_frac";
  }
  return "?";
}

std::string DeviationResult::to_json() const {
  nlohmann::json j;
  j["regime"] = regime_name(regime);
  j["scale"] = scale_name(scale);
  j["constant"] = constant;
  j["branch"] = branch;
  nlohmann::json a = nlohmann::json::object();
  for (auto& [k, v] : aux) a[k] = v;
  j["aux"] = a;
  return j.dump(2);
}

ModelSpec ModelSpec::make(OffspringLaw off, StepLaw step, double theta, double a) {
  if (!(theta >= 0.0 && theta < 1.0)) throw InvalidLaw("model: theta must lie in [0,1)");
  if (!(a >= 0.0)) throw InvalidLaw("model: a must be nonnegative");
  ModelSpec spec{std::move(off), std::move(step), nullptr, theta, a, 0.0, kInf};
  spec.rf = std::make_shared<RateFunction>(spec.step);
  spec.x_star = brw::x_star(spec.off, *spec.rf);
  spec.L = -spec.step.ess_inf();
  double bound = spec.log_m() - spec.rate(spec.theta_x_star());
  if (!(a < bound))
    throw InvalidLaw("model: a must be below log m - I(theta x*) = " + std::to_string(bound));
  return spec;
}

Regime classify_regime(const ModelSpec& spec) {
  bool schroder = spec.off.p1() > 0.0;
  StepFamily fam = spec.step.family();
  if (schroder) {
    if (spec.step.light_left_tail()) return Regime::SchroderLight;
    if (fam == StepFamily::NegParetoTail) return Regime::SchroderPareto;
    if (fam == StepFamily::NegWeibullTail && spec.step.tail_alpha() < 1.0)
      return Regime::SchroderWeibull;
    throw UnsupportedRegime("p1 > 0 with a heavy left tail outside the Pareto/Weibull families");
  }
  if (spec.step.ess_inf() > -kInf) return Regime::BottcherBounded;
  switch (fam) {
    case StepFamily::NegWeibullTail:
      return Regime::BottcherWeibull;
    case StepFamily::NegGumbelTail:
      return Regime::BottcherGumbel;
    case StepFamily::NegParetoTail:
      return Regime::BottcherPareto;
    default:
      throw UnsupportedRegime("p1 = 0 with an unbounded step outside the covered tail families");
  }
}

// ---------------------------------------------------------------------------
// Schroder light tail: exponential scale n

namespace {

void require_regime(const ModelSpec& spec, Regime want, const char* who) {
  Regime got = classify_regime(spec);
  if (got != want)
    throw RegimeMismatch(std::string(who) + ": spec is " + regime_name(got) + ", needs " +
                         regime_name(want));
}

}  // namespace

double f_rho(const ModelSpec& spec, double rho) {
  double I = spec.rate(spec.theta_x_star() / (1.0 - rho));
  if (I == kInf) return -kInf;
  return spec.log_m() - I - spec.a / (1.0 - rho);
}

double g_rho(const ModelSpec& spec, double rho, double h) {
  double I = spec.rate((h + spec.theta_x_star()) / (1.0 - rho));
  if (I == kInf) return -kInf;
  return spec.log_m() - I - spec.a / (1.0 - rho);
}

double rho_bar(const ModelSpec& spec) {
  require_regime(spec, Regime::SchroderLight, "rho_bar");
  if (spec.theta == 0.0 && spec.a == 0.0)
    throw DegenerateSpec("rho_bar: theta = 0 and a = 0 makes f constant on (0,1)");
  auto pred = [&](double rho) { return f_rho(spec, rho) >= 0.0; };
  // f(0) > 0 is Assumption (iii); f(1-) = -inf.
  return predicate_sup(pred, 0.0, 1.0 - 1e-12, 1e-10);
}

double d_of_rho(const ModelSpec& spec, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw Error("d_of_rho: rho out of (0,1)");
  if (f_rho(spec, rho) < 0.0) throw Error("d_of_rho: rho beyond rho_bar (f(rho) < 0)");
  auto pred = [&](double h) { return g_rho(spec, rho, h) >= 0.0; };
  double sup = spec.step.ess_sup();
  double cap = kInf;
  if (sup < kInf) {
    cap = (1.0 - rho) * sup - spec.theta_x_star();
    if (cap <= 0.0) return 0.0;
    if (pred(cap)) return cap;  // support edge binding
  }
  double hi = 1.0;
  while (hi < cap && hi < 1e18 && pred(hi)) hi = std::min(2.0 * hi, cap);
  if (hi >= 1e18) throw Error("d_of_rho: no finite bracket");
  return predicate_sup(pred, 0.0, hi, 1e-10);
}

DeviationResult schroder_light_rate(const ModelSpec& spec) {
  require_regime(spec, Regime::SchroderLight, "schroder_light_rate");
  double rbar = rho_bar(spec);
  double log_inv_p1 = -std::log(spec.off.p1());
  auto objective = [&](double rho) {
    if (rho <= 0.0) return kInf;
    if (rho >= rbar) rho = rbar;
    double d = d_of_rho(spec, rho);
    double I = spec.rate(-d / rho);
    if (I == kInf) return kInf;
    return rho * log_inv_p1 + rho * I;
  };
  // Coarse grid to bracket the infimum, then golden-section refinement.
  const int kGrid = 200;
  int best = kGrid;
  double best_val = objective(rbar);
  for (int i = 1; i < kGrid; ++i) {
    double rho = rbar * i / kGrid;
    double v = objective(rho);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  double lo = rbar * std::max(1, best - 1) / kGrid;
  double hi = rbar * std::min(kGrid, best + 1) / kGrid;
  double rho_min = golden_min(objective, lo, hi, 1e-10);
  double val = objective(rho_min);
  if (val > best_val) {
    rho_min = rbar * best / kGrid;
    val = best_val;
  }
  DeviationResult res;
  res.regime = Regime::SchroderLight;
  res.scale = Scale::N;
  res.constant = val;
  res.branch = "variational";
  res.aux["rho_bar"] = rbar;
  res.aux["argmin_rho"] = rho_min;
  res.aux["d_at_argmin"] = d_of_rho(spec, std::min(rho_min, rbar));
  res.aux["x_star"] = spec.x_star;
  return res;
}

// ---------------------------------------------------------------------------
// c_hat and the heavy-tailed Schroder constants

double c_hat(const ModelSpec& spec) {
  double threshold = spec.log_m() - spec.rate(spec.x_star);
  double full = (1.0 - spec.theta) * spec.x_star;
  if (spec.a <= threshold + 1e-12) return full;
  auto G = [&](double c) {
    double I = spec.rate(spec.theta_x_star() + c);
    if (I == kInf) return -kInf;
    return spec.log_m() - I - spec.a;
  };
  auto pred = [&](double c) { return G(c) >= 0.0; };
  return predicate_sup(pred, 0.0, full, 1e-10);
}

DeviationResult schroder_heavy_rate(const ModelSpec& spec) {
  Regime regime = classify_regime(spec);
  if (regime != Regime::SchroderPareto && regime != Regime::SchroderWeibull)
    throw RegimeMismatch("schroder_heavy_rate: needs p1 > 0 and a Pareto or Weibull(alpha<1) tail");
  DeviationResult res;
  res.regime = regime;
  res.aux["x_star"] = spec.x_star;
  if (regime == Regime::SchroderPareto) {
    res.scale = Scale::LogN;
    res.constant = spec.step.tail_alpha();
    res.branch = "pareto";
    return res;
  }
  double alpha = spec.step.tail_alpha();
  double lambda = spec.step.tail_lambda();
  double threshold = spec.log_m() - spec.rate(spec.x_star);
  res.scale = Scale::NAlpha;
  res.aux["alpha"] = alpha;
  if (spec.a <= threshold + 1e-12) {
    res.constant = lambda * (1.0 - spec.theta) * spec.x_star;
    res.branch = "a_below_log_m_minus_I_x_star";
  } else {
    double ch = c_hat(spec);
    res.constant = lambda * ch;
    res.branch = "c_hat";
    res.aux["c_hat"] = ch;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Bottcher bounded tail

double a_star(const ModelSpec& spec) {
  require_regime(spec, Regime::BottcherBounded, "a_star");
  double L = spec.L;
  double xs = spec.x_star;
  double txs = spec.theta_x_star();
  double log_b = std::log(static_cast<double>(spec.off.min_support()));
  double first = (spec.log_m() - spec.rate(xs)) * (L + txs) / (L + xs) +
                 (1.0 - spec.theta) * xs / (L + xs) * log_b;
  double second = spec.log_m() - spec.rate(txs);
  return std::min(first, second);
}

double F_L(const ModelSpec& spec, double L, double c) {
  double log_b = std::log(static_cast<double>(spec.off.min_support()));
  double I = spec.rate((spec.theta_x_star() + L * c) / (1.0 - c));
  if (I == kInf) return -kInf;
  return spec.log_m() - I - (spec.a - c * log_b) / (1.0 - c);
}

double c_bar_at(const ModelSpec& spec, double L) {
  double right = (1.0 - spec.theta) * spec.x_star / (L + spec.x_star);
  double at0 = F_L(spec, L, 0.0);
  if (!(at0 > 0.0))
    throw NoBracket("c_bar: F_L(0) = " + std::to_string(at0) + " is not positive");
  double at_right = F_L(spec, L, right * (1.0 - 1e-13));
  if (at_right > 1e-9)
    throw NoBracket("c_bar: F_L at the right endpoint = " + std::to_string(at_right) +
                    " is not negative; a <= a*?");
  auto pred = [&](double c) { return F_L(spec, L, c) >= 0.0; };
  return predicate_sup(pred, 0.0, right, 1e-10);
}

double c_bar(const ModelSpec& spec) {
  require_regime(spec, Regime::BottcherBounded, "c_bar");
  double as = a_star(spec);
  if (spec.a < as - 1e-12)
    throw NoBracket("c_bar: a < a*, the root lies outside (0, (1-theta)x*/(L+x*))");
  return c_bar_at(spec, spec.L);
}

DeviationResult bottcher_bounded_rate(const ModelSpec& spec) {
  require_regime(spec, Regime::BottcherBounded, "bottcher_bounded_rate");
  double log_b = std::log(static_cast<double>(spec.off.min_support()));
  double as = a_star(spec);
  DeviationResult res;
  res.regime = Regime::BottcherBounded;
  res.scale = Scale::LogLogLinearN;
  res.aux["a_star"] = as;
  res.aux["x_star"] = spec.x_star;
  res.aux["L"] = spec.L;
  if (spec.a < as) {
    res.constant = (1.0 - spec.theta) * spec.x_star / (spec.L + spec.x_star) * log_b;
    res.branch = "a_below_a_star";
  } else {
    double cb = c_bar(spec);
    res.constant = cb * log_b;
    res.branch = "c_bar";
    res.aux["c_bar"] = cb;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Bottcher Weibull / Gumbel / Pareto

namespace {

// (b^{1/(alpha-1)} - 1)^{alpha-1}, continuous across alpha = 1 where it
// tends to b; evaluated in logs to survive alpha near 1.
double super_weibull_coef(double b, double alpha) {
  double log_b = std::log(b);
  double e = std::exp(-log_b / (alpha - 1.0));  // b^{-1/(alpha-1)}, underflows to 0 near 1+
  return std::exp(log_b + (alpha - 1.0) * std::log1p(-e));
}

}  // namespace

DeviationResult bottcher_weibull_rate(const ModelSpec& spec) {
  require_regime(spec, Regime::BottcherWeibull, "bottcher_weibull_rate");
  double alpha = spec.step.tail_alpha();
  double lambda = spec.step.tail_lambda();
  double b = static_cast<double>(spec.off.min_support());
  double threshold = spec.log_m() - spec.rate(spec.x_star);
  bool use_chat = spec.a > threshold + 1e-12;
  double base = use_chat ? c_hat(spec) : (1.0 - spec.theta) * spec.x_star;
  double coef = alpha <= 1.0 ? b : super_weibull_coef(b, alpha);
  DeviationResult res;
  res.regime = Regime::BottcherWeibull;
  res.scale = Scale::NAlpha;
  res.aux["alpha"] = alpha;
  res.aux["x_star"] = spec.x_star;
  res.aux["C"] = coef * std::pow(base, alpha);
  res.constant = lambda * res.aux["C"];
  res.branch = std::string(alpha <= 1.0 ? "sub_weibull" : "super_weibull") +
               (use_chat ? "/c_hat" : "/full_displacement");
  if (use_chat) res.aux["c_hat"] = base;
  return res;
}

DeviationResult bottcher_remark_rates(const ModelSpec& spec) {
  Regime regime = classify_regime(spec);
  if (regime != Regime::BottcherGumbel && regime != Regime::BottcherPareto)
    throw RegimeMismatch("bottcher_remark_rates: needs p1 = 0 and a Gumbel or Pareto tail");
  double b = static_cast<double>(spec.off.min_support());
  double alpha = spec.step.tail_alpha();
  DeviationResult res;
  res.regime = regime;
  res.aux["alpha"] = alpha;
  res.aux["x_star"] = spec.x_star;
  if (regime == Regime::BottcherPareto) {
    res.scale = Scale::LogN;
    res.constant = alpha * b;
    res.branch = "pareto";
    return res;
  }
  double expo = alpha / (1.0 + alpha);
  double threshold = spec.log_m() - spec.rate(spec.x_star);
  bool use_chat = spec.a > threshold + 1e-12;
  double base = use_chat ? c_hat(spec) : (1.0 - spec.theta) * spec.x_star;
  res.scale = Scale::LogLogNFrac;
  res.aux["scale_exponent"] = expo;
  res.constant = std::pow(expo * std::log(b), expo) * std::pow(base, expo);
  res.branch = use_chat ? "c_hat" : "full_displacement";
  if (use_chat) res.aux["c_hat"] = base;
  return res;
}

DeviationResult compute_rate(const ModelSpec& spec) {
  switch (classify_regime(spec)) {
    case Regime::SchroderLight:
      return schroder_light_rate(spec);
    case Regime::SchroderPareto:
    case Regime::SchroderWeibull:
      return schroder_heavy_rate(spec);
    case Regime::BottcherBounded:
      return bottcher_bounded_rate(spec);
    case Regime::BottcherWeibull:
      return bottcher_weibull_rate(spec);
    case Regime::BottcherGumbel:
    case Regime::BottcherPareto:
      return bottcher_remark_rates(spec);
  }
  throw UnsupportedRegime("compute_rate: unreachable");
}

// ---------------------------------------------------------------------------
// Curve dumps

void dump_f_curve(const ModelSpec& spec, std::ostream& os, int points) {
  os << "rho,f\n";
  for (int i = 0; i <= points; ++i) {
    double rho = static_cast<double>(i) / (points + 1);
    os << rho << "," << f_rho(spec, rho) << "\n";
  }
}

void dump_d_curve(const ModelSpec& spec, std::ostream& os, int points) {
  double rbar = rho_bar(spec);
  os << "rho,d\n";
  for (int i = 1; i <= points; ++i) {
    double rho = rbar * i / points;
    os << rho << "," << d_of_rho(spec, rho) << "\n";
  }
}

void dump_FL_curve(const ModelSpec& spec, std::ostream& os, int points) {
  double right = (1.0 - spec.theta) * spec.x_star / (spec.L + spec.x_star);
  os << "c,F_L\n";
  for (int i = 0; i <= points; ++i) {
    double c = right * i / (points + 1);
    os << c << "," << F_L(spec, spec.L, c) << "\n";
  }
}

}  // namespace brw

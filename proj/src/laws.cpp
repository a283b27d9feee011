#include "brw/laws.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "brw/errors.hpp"
#include "brw/numeric.hpp"

namespace brw {

namespace {

using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;

double logcosh(double z) {
  double az = std::fabs(z);
  return az - std::log(2.0) + std::log1p(std::exp(-2.0 * az));
}

struct PeakInfo {
  double zpeak = 0.0;
  double lmax = 0.0;
  double zend = 0.0;
  double sigma = 1.0;
  bool boundary = false;
};

// Locates the maximum, a decay scale and the effective upper end of a
// log-integrand on [zlo, inf). The integrands here are unimodal in z
// (monotone log-derivative), so an expanding walk plus ternary refinement
// over the bracketing window is reliable.
PeakInfo find_peak(const std::function<double(double)>& lz, double zlo) {
  PeakInfo info;
  double step = 0.25;
  double zmax = zlo;
  double lmax = lz(zlo);
  double step_at_max = step;
  double z = zlo;
  int since_max = 0;
  for (int k = 0; k < 6000; ++k) {
    z += step;
    double v = lz(z);
    if (v > lmax) {
      lmax = v;
      zmax = z;
      since_max = 0;
      step_at_max = step;
    } else if (++since_max > 4 && v < lmax - 90.0) {
      break;
    }
    if (k % 32 == 31) step *= 1.3;
    if (z > zlo + 2000.0) break;
  }
  double lo = std::max(zlo, zmax - 2.0 * step_at_max);
  double hi = zmax + 2.0 * step_at_max;
  info.zpeak = ternary_max(lz, lo, hi, 1e-10);
  info.lmax = lz(info.zpeak);
  if (info.lmax < lmax) {
    info.zpeak = zmax;
    info.lmax = lmax;
  }
  info.boundary = info.zpeak <= zlo + 1e-12;
  // Decay scale: distance over which the integrand drops by e^-2.
  double d = 1e-3;
  while (lz(info.zpeak + d) > info.lmax - 2.0 && d < 4000.0) d *= 2.0;
  info.sigma = d;
  // Effective upper end: drop by e^-90.
  double gap = d;
  while (lz(info.zpeak + gap) > info.lmax - 90.0 && gap < 8000.0) gap *= 1.5;
  info.zend = std::min(info.zpeak + gap, zlo + 8000.0);
  return info;
}

// log of int_{zlo}^inf exp(lz(z)) dz for a unimodal lz.
double log_exp_integral(const std::function<double(double)>& lz, double zlo) {
  PeakInfo pk = find_peak(lz, zlo);
  auto g = [&](double z) { return std::exp(lz(z) - pk.lmax); };
  double a0 = zlo;
  double a1 = std::clamp(pk.zpeak - 10.0 * pk.sigma, zlo, pk.zend);
  double a2 = std::clamp(pk.zpeak + 10.0 * pk.sigma, zlo, pk.zend);
  double a3 = pk.zend;
  double total = 0.0;
  const double segs[4] = {a0, a1, a2, a3};
  for (int i = 0; i < 3; ++i) {
    if (segs[i + 1] > segs[i]) {
      total += Quad::integrate(g, segs[i], segs[i + 1], 15, 1e-13);
    }
  }
  if (total <= 0.0) return -kInf;
  return pk.lmax + std::log(total);
}

// Tabulated inverse-CDF sampler for a log-density on [zlo, inf) in z-space.
// Used only as a tilted-proposal sampler; the panel resolution keeps the
// distributional error far below Monte Carlo noise.
struct ZTable {
  std::vector<double> z;
  std::vector<double> g;    // density values (shifted scale)
  std::vector<double> cum;  // cumulative panel masses, cum[i] = mass of panels < i

  double total() const { return cum.back(); }

  double sample(SplitRng& rng) const {
    double u = rng.next_double() * total();
    size_t lo = 0, hi = cum.size() - 1;
    while (hi - lo > 1) {
      size_t mid = (lo + hi) / 2;
      if (cum[mid] <= u)
        lo = mid;
      else
        hi = mid;
    }
    double w = z[lo + 1] - z[lo];
    double g0 = g[lo], g1 = g[lo + 1];
    double trap = 0.5 * (g0 + g1) * w;
    double frac = trap > 0.0 ? (u - cum[lo]) / (cum[lo + 1] - cum[lo]) : 0.5;
    double a = g1 - g0;
    double phi;
    if (std::fabs(a) < 1e-12 * std::max(g0, g1)) {
      phi = frac;
    } else {
      double disc = g0 * g0 + a * frac * (g0 + g1);
      phi = (std::sqrt(std::max(0.0, disc)) - g0) / a;
    }
    phi = std::clamp(phi, 0.0, 1.0);
    return z[lo] + phi * w;
  }
};

std::shared_ptr<ZTable> build_ztable(const std::function<double(double)>& lz, double zlo) {
  PeakInfo pk = find_peak(lz, zlo);
  auto tbl = std::make_shared<ZTable>();
  auto push_linspace = [&](double a, double b, int n) {
    if (b <= a) return;
    for (int i = 0; i < n; ++i) {
      double v = a + (b - a) * i / n;
      if (tbl->z.empty() || v > tbl->z.back() + 1e-15) tbl->z.push_back(v);
    }
  };
  double a1 = std::clamp(pk.zpeak - 12.0 * pk.sigma, zlo, pk.zend);
  double a2 = std::clamp(pk.zpeak + 12.0 * pk.sigma, zlo, pk.zend);
  push_linspace(zlo, a1, 512);
  push_linspace(a1, a2, 2048);
  push_linspace(a2, pk.zend, 512);
  tbl->z.push_back(pk.zend);
  size_t n = tbl->z.size();
  tbl->g.resize(n);
  for (size_t i = 0; i < n; ++i) tbl->g[i] = std::exp(lz(tbl->z[i]) - pk.lmax);
  tbl->cum.resize(n);
  tbl->cum[0] = 0.0;
  KahanSum acc;
  for (size_t i = 0; i + 1 < n; ++i) {
    double w = tbl->z[i + 1] - tbl->z[i];
    double mid = std::exp(lz(0.5 * (tbl->z[i] + tbl->z[i + 1])) - pk.lmax);
    acc.add(w / 6.0 * (tbl->g[i] + 4.0 * mid + tbl->g[i + 1]));
    tbl->cum[i + 1] = acc.value();
  }
  return tbl;
}

}  // namespace

// ---------------------------------------------------------------------------
// OffspringLaw

OffspringLaw::OffspringLaw(std::vector<std::pair<int, double>> probs) {
  double sum = 0.0;
  for (auto& [k, p] : probs) {
    if (k < 0) throw InvalidLaw("offspring law: negative support point");
    if (p < 0.0) throw InvalidLaw("offspring law: negative probability");
    if (k == 0 && p > 0.0) throw InvalidLaw("offspring law: p_0 must be 0");
    sum += p;
  }
  if (std::fabs(sum - 1.0) > 1e-12) throw InvalidLaw("offspring law: probabilities must sum to 1");
  std::sort(probs.begin(), probs.end());
  for (auto& [k, p] : probs) {
    if (p <= 0.0) continue;
    if (!probs_.empty() && probs_.back().first == k)
      probs_.back().second += p;
    else
      probs_.emplace_back(k, p);
  }
  if (probs_.empty()) throw InvalidLaw("offspring law: empty support");
  b_ = probs_.front().first;
  kmax_ = probs_.back().first;
  for (auto& [k, p] : probs_) {
    m_ += k * p;
    if (k == 1) p1_ = p;
  }
  if (p1_ >= 1.0) throw InvalidLaw("offspring law: p_1 must be < 1");
  if (m_ <= 1.0) throw InvalidLaw("offspring law: mean must exceed 1");
}

double OffspringLaw::prob(int k) const {
  for (auto& [kk, p] : probs_)
    if (kk == k) return p;
  return 0.0;
}

int OffspringLaw::sample(SplitRng& rng) const {
  double u = rng.next_double();
  double acc = 0.0;
  for (auto& [k, p] : probs_) {
    acc += p;
    if (u < acc) return k;
  }
  return probs_.back().first;
}

double OffspringLaw::pgf(double s) const {
  double v = 0.0;
  for (auto& [k, p] : probs_) v += p * std::pow(s, k);
  return v;
}

// ---------------------------------------------------------------------------
// StepLaw constructors

StepLaw StepLaw::rademacher(double s) {
  if (!(s > 0.0)) throw InvalidLaw("rademacher: s must be positive");
  StepLaw law;
  law.family_ = StepFamily::Rademacher;
  law.s_ = s;
  law.ess_inf_ = -s;
  law.ess_sup_ = s;
  law.atom_inf_ = 0.5;
  law.atom_sup_ = 0.5;
  law.t_lo_ = -kInf;
  law.lattice_ = true;
  law.span_ = s;
  law.lat_steps_ = {{-1, 0.5}, {1, 0.5}};
  return law;
}

StepLaw StepLaw::finite_support(std::vector<std::pair<double, double>> points) {
  if (points.size() < 2) throw InvalidLaw("finite support: need at least two points");
  double sum = 0.0, mean = 0.0;
  for (auto& [x, p] : points) {
    if (p < 0.0) throw InvalidLaw("finite support: negative probability");
    sum += p;
    mean += x * p;
  }
  if (std::fabs(sum - 1.0) > 1e-12) throw InvalidLaw("finite support: probabilities must sum to 1");
  StepLaw law;
  law.family_ = StepFamily::FiniteSupport;
  law.center_shift_ = -mean;
  for (auto& [x, p] : points)
    if (p > 0.0) law.pts_.emplace_back(x - mean, p);
  std::sort(law.pts_.begin(), law.pts_.end());
  if (law.pts_.size() < 2) throw InvalidLaw("finite support: degenerate law (P(X=0)=1)");
  law.ess_inf_ = law.pts_.front().first;
  law.ess_sup_ = law.pts_.back().first;
  law.atom_inf_ = law.pts_.front().second;
  law.atom_sup_ = law.pts_.back().second;
  law.t_lo_ = -kInf;
  law.detect_lattice();
  return law;
}

StepLaw StepLaw::gaussian(double sigma) {
  if (!(sigma > 0.0)) throw InvalidLaw("gaussian: sigma must be positive");
  StepLaw law;
  law.family_ = StepFamily::Gaussian;
  law.sigma_ = sigma;
  law.ess_inf_ = -kInf;
  law.ess_sup_ = kInf;
  law.t_lo_ = -kInf;
  return law;
}

StepLaw StepLaw::neg_weibull(double lambda, double alpha, double q, double x0) {
  if (!(lambda > 0.0) || !(alpha > 0.0) || !(q > 0.0) || !(x0 > 0.0))
    throw InvalidLaw("neg_weibull: parameters must be positive");
  StepLaw law;
  law.family_ = StepFamily::NegWeibullTail;
  law.lambda_ = lambda;
  law.alpha_ = alpha;
  law.q_ = q;
  law.x0_ = x0;
  if (alpha > 1.0) {
    law.t_lo_ = -kInf;
  } else if (alpha == 1.0) {
    law.t_lo_ = -lambda;
    law.t_lo_closed_ = false;
  } else {
    law.t_lo_ = 0.0;
    law.t_lo_closed_ = true;
  }
  law.finalize_tail_family();
  return law;
}

StepLaw StepLaw::neg_pareto(double alpha, double q, double x0) {
  if (!(alpha > 1.0)) throw InvalidLaw("neg_pareto: alpha must exceed 1 so the mean exists");
  if (!(q > 0.0) || !(x0 > 0.0)) throw InvalidLaw("neg_pareto: parameters must be positive");
  StepLaw law;
  law.family_ = StepFamily::NegParetoTail;
  law.alpha_ = alpha;
  law.q_ = q;
  law.x0_ = x0;
  law.t_lo_ = 0.0;
  law.t_lo_closed_ = true;
  law.finalize_tail_family();
  return law;
}

StepLaw StepLaw::neg_gumbel(double alpha, double x0) {
  if (!(alpha > 0.0) || !(x0 > 0.0)) throw InvalidLaw("neg_gumbel: parameters must be positive");
  if (std::pow(x0, alpha) > 650.0) throw InvalidLaw("neg_gumbel: x0^alpha too large");
  StepLaw law;
  law.family_ = StepFamily::NegGumbelTail;
  law.alpha_ = alpha;
  law.q_ = 1.0;
  law.x0_ = x0;
  law.t_lo_ = -kInf;
  law.finalize_tail_family();
  return law;
}

// ---------------------------------------------------------------------------
// Piecewise tail construction

double StepLaw::tail_log_density(double y) const {
  switch (family_) {
    case StepFamily::NegWeibullTail:
      return std::log(q_ * lambda_ * alpha_) + (alpha_ - 1.0) * std::log(y) -
             lambda_ * std::pow(y, alpha_);
    case StepFamily::NegParetoTail:
      return std::log(q_ * alpha_) - (alpha_ + 1.0) * std::log(y);
    case StepFamily::NegGumbelTail: {
      double ya = std::pow(y, alpha_);
      return std::log(alpha_) + (alpha_ - 1.0) * std::log(y) + ya - std::exp(ya);
    }
    default:
      return -kInf;
  }
}

double StepLaw::tail_survival(double y) const {
  switch (family_) {
    case StepFamily::NegWeibullTail:
      return q_ * std::exp(-lambda_ * std::pow(y, alpha_));
    case StepFamily::NegParetoTail:
      return q_ * std::pow(y, -alpha_);
    case StepFamily::NegGumbelTail:
      return std::exp(-std::exp(std::pow(y, alpha_)));
    default:
      return 0.0;
  }
}

double StepLaw::tail_inverse_survival(double u) const {
  // Solves S(y)/S(x0) = u for y >= x0, exactly per family.
  switch (family_) {
    case StepFamily::NegWeibullTail:
      return std::pow(std::pow(x0_, alpha_) - std::log(u) / lambda_, 1.0 / alpha_);
    case StepFamily::NegParetoTail:
      return x0_ * std::pow(u, -1.0 / alpha_);
    case StepFamily::NegGumbelTail:
      return std::pow(std::log(std::exp(std::pow(x0_, alpha_)) - std::log(u)), 1.0 / alpha_);
    default:
      return x0_;
  }
}

bool StepLaw::tail_mgf_finite(double t) const {
  switch (family_) {
    case StepFamily::NegWeibullTail:
      if (alpha_ > 1.0) return true;
      if (alpha_ == 1.0) return t > -lambda_;
      return t >= 0.0;
    case StepFamily::NegParetoTail:
      return t >= 0.0;
    case StepFamily::NegGumbelTail:
      return true;
    default:
      return true;
  }
}

double StepLaw::log_tail_mgf(double t) const {
  if (!tail_mgf_finite(t)) return kInf;
  if (t == 0.0) return std::log(w_);
  auto lz = [this, t](double z) {
    double y = std::exp(z);
    return tail_log_density(y) - t * y + z;
  };
  return log_exp_integral(lz, std::log(x0_));
}

void StepLaw::finalize_tail_family() {
  w_ = tail_survival(x0_);
  if (!(w_ > 0.0) || w_ >= 0.5)
    throw InvalidLaw("tail family: tail mass at x0 must lie in (0, 0.5)");
  // Mean of |X| restricted to the tail, via the same quadrature used for the
  // MGF pieces: int y f(y) dy = int exp(log f(e^z) + 2z) dz.
  auto lz = [this](double z) { return tail_log_density(std::exp(z)) + 2.0 * z; };
  double tail_abs_mean = std::exp(log_exp_integral(lz, std::log(x0_)));
  double c = tail_abs_mean / (1.0 - w_);
  if (!(c < x0_ - 1e-9))
    throw InvalidLaw("tail family: tail mean too large for a mean-zero core inside [-x0, x0]");
  core_c_ = c;
  core_r_ = x0_ - c;
  core_lo_ = 2.0 * c - x0_;
  core_hi_ = x0_;
  center_shift_ = c;
  ess_inf_ = -kInf;
  ess_sup_ = x0_;
}

void StepLaw::detect_lattice() {
  // Real gcd of the support points, with tolerance; non-lattice laws simply
  // leave lattice_ = false and the cohort simulator rejects them.
  double g = 0.0;
  for (auto& [x, p] : pts_) {
    (void)p;
    double a = std::fabs(x);
    if (a < 1e-12) continue;
    if (g == 0.0) {
      g = a;
      continue;
    }
    double b = a;
    while (b > 1e-9) {
      double r = std::fmod(g, b);
      if (r > b - 1e-9) r = 0.0;
      g = b;
      b = r;
    }
  }
  if (g < 1e-9) return;
  for (auto& [x, p] : pts_) {
    (void)p;
    double ratio = x / g;
    if (std::fabs(ratio - std::round(ratio)) > 1e-6 || std::fabs(ratio) > 1e12) return;
  }
  lattice_ = true;
  span_ = g;
  for (auto& [x, p] : pts_) lat_steps_.emplace_back(std::llround(x / g), p);
}

// ---------------------------------------------------------------------------
// Sampling and CDF

double StepLaw::sample(SplitRng& rng) const {
  switch (family_) {
    case StepFamily::Rademacher:
      return rng.next_double() < 0.5 ? -s_ : s_;
    case StepFamily::FiniteSupport: {
      double u = rng.next_double();
      double acc = 0.0;
      for (auto& [x, p] : pts_) {
        acc += p;
        if (u < acc) return x;
      }
      return pts_.back().first;
    }
    case StepFamily::Gaussian:
      return sigma_ * rng.next_gaussian();
    default: {
      double u = rng.next_double();
      if (u < w_) return -tail_inverse_survival(rng.next_open());
      return core_lo_ + (core_hi_ - core_lo_) * rng.next_double();
    }
  }
}

double StepLaw::cdf(double x) const {
  switch (family_) {
    case StepFamily::Rademacher:
      if (x < -s_) return 0.0;
      if (x < s_) return 0.5;
      return 1.0;
    case StepFamily::FiniteSupport: {
      double acc = 0.0;
      for (auto& [xx, p] : pts_)
        if (xx <= x) acc += p;
      return acc;
    }
    case StepFamily::Gaussian:
      return 0.5 * std::erfc(-x / (sigma_ * std::sqrt(2.0)));
    default:
      if (x <= -x0_) return tail_survival(-x);
      if (x < core_lo_) return w_;
      if (x >= core_hi_) return 1.0;
      return w_ + (1.0 - w_) * (x - core_lo_) / (core_hi_ - core_lo_);
  }
}

// ---------------------------------------------------------------------------
// Log-MGF

double StepLaw::log_mgf(double t) const {
  if (t == 0.0) return 0.0;
  switch (family_) {
    case StepFamily::Rademacher:
      return logcosh(s_ * t);
    case StepFamily::FiniteSupport: {
      double lse = -kInf;
      for (auto& [x, p] : pts_) lse = log_sum_exp(lse, std::log(p) + t * x);
      return lse;
    }
    case StepFamily::Gaussian:
      return 0.5 * sigma_ * sigma_ * t * t;
    default: {
      if (t < t_lo_ || (t == t_lo_ && !t_lo_closed_)) return kInf;
      double lcore = std::log1p(-w_) + core_c_ * t + log_sinhc(core_r_ * t);
      // For positive tilts the tail piece is bounded by w e^{-t x0}; skip
      // the quadrature when it cannot move the sum at double precision.
      if (t > 0.0 && std::log(w_) - t * x0_ < lcore - 40.0) return lcore;
      double ltail = log_tail_mgf(t);
      if (ltail == kInf) return kInf;
      return log_sum_exp(lcore, ltail);
    }
  }
}

bool StepLaw::light_left_tail() const { return t_lo_ < 0.0; }

// ---------------------------------------------------------------------------
// Exponential tilting

TiltedStep StepLaw::tilt(double t) const {
  double lm = log_mgf(t);
  if (!(lm < kInf)) throw TiltOutsideDomain("tilt: Lambda(t) is infinite at t");
  TiltedStep ts;
  ts.t = t;
  ts.log_mgf_at_t = lm;
  switch (family_) {
    case StepFamily::Rademacher: {
      double p_plus = 1.0 / (1.0 + std::exp(-2.0 * t * s_));
      double s = s_;
      ts.sample = [p_plus, s](SplitRng& rng) { return rng.next_double() < p_plus ? s : -s; };
      break;
    }
    case StepFamily::FiniteSupport: {
      std::vector<std::pair<double, double>> tilted;
      for (auto& [x, p] : pts_) tilted.emplace_back(x, std::exp(std::log(p) + t * x - lm));
      ts.sample = [tilted](SplitRng& rng) {
        double u = rng.next_double();
        double acc = 0.0;
        for (auto& [x, p] : tilted) {
          acc += p;
          if (u < acc) return x;
        }
        return tilted.back().first;
      };
      break;
    }
    case StepFamily::Gaussian: {
      double mean = t * sigma_ * sigma_;
      double sigma = sigma_;
      ts.sample = [mean, sigma](SplitRng& rng) { return mean + sigma * rng.next_gaussian(); };
      break;
    }
    default: {
      double lw_core = std::log1p(-w_) + core_c_ * t + log_sinhc(core_r_ * t) - lm;
      double w_core = std::exp(lw_core);
      double lo = core_lo_, hi = core_hi_;
      // Tilted uniform core: density proportional to e^{t x} on [lo, hi].
      auto core_sample = [lo, hi, t](SplitRng& rng) {
        double u = rng.next_double();
        if (std::fabs(t) * (hi - lo) < 1e-8) return lo + u * (hi - lo);
        double m = std::max(t * lo, t * hi);
        double ea = std::exp(t * lo - m), eb = std::exp(t * hi - m);
        return (m + std::log(ea + u * (eb - ea))) / t;
      };
      if (family_ == StepFamily::NegWeibullTail && alpha_ == 1.0) {
        // Exponential tail tilts to an exponential with rate lambda + t.
        double rate = lambda_ + t;
        double x0 = x0_;
        ts.sample = [w_core, core_sample, rate, x0](SplitRng& rng) {
          if (rng.next_double() < w_core) return core_sample(rng);
          return -(x0 - std::log(rng.next_open()) / rate);
        };
      } else {
        auto lz = [this, t](double z) {
          double y = std::exp(z);
          return tail_log_density(y) - t * y + z;
        };
        auto table = build_ztable(lz, std::log(x0_));
        ts.sample = [w_core, core_sample, table](SplitRng& rng) {
          if (rng.next_double() < w_core) return core_sample(rng);
          return -std::exp(table->sample(rng));
        };
      }
      break;
    }
  }
  return ts;
}

// ---------------------------------------------------------------------------

const char* step_family_name(StepFamily f) {
  switch (f) {
    case StepFamily::Rademacher:
      return "rademacher";
    case StepFamily::FiniteSupport:
      return "finite_support";
    case StepFamily::Gaussian:
      return "gaussian";
    case StepFamily::NegWeibullTail:
      return "neg_weibull";
    case StepFamily::NegParetoTail:
      return "neg_pareto";
    case StepFamily::NegGumbelTail:
      return "neg_gumbel";
  }
  return "?";
}

std::string StepLaw::describe() const {
  std::ostringstream os;
  os << step_family_name(family_);
  switch (family_) {
    case StepFamily::Rademacher:
      os << "(s=" << s_ << ")";
      break;
    case StepFamily::FiniteSupport:
      os << "(k=" << pts_.size() << ")";
      break;
    case StepFamily::Gaussian:
      os << "(sigma=" << sigma_ << ")";
      break;
    case StepFamily::NegWeibullTail:
      os << "(lambda=" << lambda_ << ",alpha=" << alpha_ << ",q=" << q_ << ",x0=" << x0_ << ")";
      break;
    case StepFamily::NegParetoTail:
      os << "(alpha=" << alpha_ << ",q=" << q_ << ",x0=" << x0_ << ")";
      break;
    case StepFamily::NegGumbelTail:
      os << "(alpha=" << alpha_ << ",x0=" << x0_ << ")";
      break;
  }
  return os.str();
}

}  // namespace brw

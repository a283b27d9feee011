#include "brw/rate_function.hpp"

#include <cmath>

#include "brw/errors.hpp"

namespace brw {

MgfSource make_mgf_source(const StepLaw& law) {
  MgfSource src;
  src.log_mgf = [law](double t) { return law.log_mgf(t); };
  src.t_lo = law.mgf_domain_lo();
  src.t_lo_closed = law.mgf_domain_lo_closed();
  src.t_hi = kInf;
  src.ess_inf = law.ess_inf();
  src.ess_sup = law.ess_sup();
  src.atom_at_inf = law.atom_at_inf();
  src.atom_at_sup = law.atom_at_sup();
  return src;
}

const char* rate_case_name(RateCase c) {
  switch (c) {
    case RateCase::SteepTail:
      return "steep_tail";
    case RateCase::InfiniteLambdaFiniteSlope:
      return "infinite_lambda_finite_slope";
    case RateCase::FiniteLambdaFiniteSlope:
      return "finite_lambda_finite_slope";
  }
  return "?";
}

RateFunction::RateFunction(MgfSource src) : src_(std::move(src)) { classify(); }

double RateFunction::derivative(double t, double hscale) const {
  double h = hscale * std::max(1.0, std::fabs(t));
  if (src_.t_hi < kInf) {
    double gap = src_.t_hi - t;
    h = std::min(h, gap / 4.0);
  }
  if (src_.t_lo > -kInf) {
    double gap = t - src_.t_lo;
    h = std::min(h, gap / 4.0);
  }
  return (src_.log_mgf(t + h) - src_.log_mgf(t - h)) / (2.0 * h);
}

RateFunction::ProbeResult RateFunction::probe_slope(double t0, double hscale) const {
  ProbeResult res;
  double prev = 0.0;
  bool have_prev = false;
  for (int k = 0; k < 60; ++k) {
    double t;
    if (src_.t_hi == kInf) {
      t = t0 * std::pow(2.0, k);
    } else {
      t = src_.t_hi - (src_.t_hi - std::min(t0, src_.t_hi / 2.0)) * std::pow(2.0, -k);
    }
    double d = derivative(t, hscale);
    if (!std::isfinite(d)) break;
    if (d > 1e9) {
      res.diverged = true;
      return res;
    }
    if (have_prev && k >= 2 && std::fabs(d - prev) <= 1e-7 * std::max(1.0, std::fabs(d))) {
      res.converged = true;
      res.limit = d;
      return res;
    }
    prev = d;
    have_prev = true;
  }
  return res;
}

void RateFunction::classify() {
  ProbeResult a = probe_slope(1.0, 1e-5);
  ProbeResult b = probe_slope(0.75, 1e-6);
  auto tag = [](const ProbeResult& r) { return r.diverged ? 1 : (r.converged ? 2 : 0); };
  if (tag(a) == 0 || tag(a) != tag(b))
    throw ClassificationInconclusive("rate function classification probes disagree");
  if (a.converged && std::fabs(a.limit - b.limit) > 1e-3 * std::max(1.0, std::fabs(a.limit)))
    throw ClassificationInconclusive("rate function slope limits disagree across refinements");

  cls_.lambda_star = src_.t_hi >= 0.0 ? src_.t_hi : 0.0;
  cls_.ess_sup = src_.ess_sup;
  if (a.diverged) {
    cls_.rate_case = RateCase::SteepTail;
    cls_.limit_slope = kInf;
  } else if (src_.t_hi == kInf) {
    cls_.rate_case = RateCase::InfiniteLambdaFiniteSlope;
    cls_.limit_slope = a.limit;
  } else {
    cls_.rate_case = RateCase::FiniteLambdaFiniteSlope;
    cls_.limit_slope = a.limit;
  }
}

double RateFunction::operator()(double x) const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(x);
    if (it != cache_.end()) return it->second;
  }
  double v = evaluate(x);
  std::lock_guard<std::mutex> lock(mu_);
  cache_.emplace(x, v);
  return v;
}

double RateFunction::evaluate(double x) const {
  double tol_sup = 1e-12 * std::max(1.0, std::fabs(src_.ess_sup));
  if (src_.ess_sup < kInf) {
    if (x > src_.ess_sup + tol_sup) return kInf;
    if (x >= src_.ess_sup - tol_sup)
      return src_.atom_at_sup > 0.0 ? -std::log(src_.atom_at_sup) : kInf;
  }
  double tol_inf = 1e-12 * std::max(1.0, std::fabs(src_.ess_inf));
  if (src_.ess_inf > -kInf) {
    if (x < src_.ess_inf - tol_inf) return kInf;
    if (x <= src_.ess_inf + tol_inf)
      return src_.atom_at_inf > 0.0 ? -std::log(src_.atom_at_inf) : kInf;
  }
  if (x == 0.0) return 0.0;

  auto phi = [&](double t) { return t * x - src_.log_mgf(t); };
  // The supremum of the concave map t -> t x - Lambda(t) sits where
  // Lambda'(t) = x; h below is increasing in t with a root at that point.
  auto h = [&](double t) {
    double step = 1e-6 * std::max(1.0, std::fabs(t));
    if (src_.t_hi < kInf) step = std::min(step, (src_.t_hi - t) / 4.0);
    if (src_.t_lo > -kInf) step = std::min(step, (t - src_.t_lo) / 4.0);
    return (src_.log_mgf(t + step) - src_.log_mgf(t - step)) / (2.0 * step) - x;
  };

  double lo, hi, flo, fhi;
  if (x > 0.0) {
    lo = 0.0;
    flo = -x;
    if (src_.t_hi == kInf) {
      hi = 1.0;
      fhi = h(hi);
      while (fhi < 0.0 && hi < 1e17) {
        hi *= 2.0;
        fhi = h(hi);
      }
      if (fhi < 0.0) return kInf;  // slope never reaches x
    } else if (src_.t_hi_closed) {
      hi = src_.t_hi;
      fhi = h(hi);
      if (fhi < 0.0) return std::max(0.0, phi(src_.t_hi));  // boundary max
    } else {
      // Lambda' blows up at the open endpoint; approach it geometrically.
      int k = 1;
      do {
        hi = src_.t_hi - src_.t_hi * std::pow(2.0, -k);
        if (hi <= 0.0) hi = src_.t_hi * (1.0 - std::pow(2.0, -k));
        fhi = h(hi);
      } while (fhi < 0.0 && ++k < 60);
      if (fhi < 0.0) return std::max(0.0, phi(hi));
    }
  } else {
    hi = 0.0;
    fhi = -x;
    if (src_.t_lo == -kInf) {
      lo = -1.0;
      flo = h(lo);
      while (flo > 0.0 && lo > -1e17) {
        lo *= 2.0;
        flo = h(lo);
      }
      if (flo > 0.0) return kInf;
    } else if (src_.t_lo_closed) {
      lo = src_.t_lo;
      if (lo == hi) return std::max(0.0, phi(lo));
      flo = h(lo);
      if (flo > 0.0) return std::max(0.0, phi(src_.t_lo));
    } else {
      int k = 2;
      do {
        lo = src_.t_lo + (0.0 - src_.t_lo) * std::pow(2.0, -k);
        flo = h(lo);
      } while (flo > 0.0 && ++k < 60);
      if (flo > 0.0) return std::max(0.0, phi(lo));
    }
  }

  double tstar = illinois_root(h, lo, hi, flo, fhi, 1e-12);
  return std::max(phi(tstar), 0.0);
}

void RateFunction::dump_cache(std::ostream& os) const {
  std::lock_guard<std::mutex> lock(mu_);
  os << "x,I\n";
  for (auto& [x, v] : cache_) os << x << "," << v << "\n";
}

Classification classify(const StepLaw& law) {
  RateFunction rf(law);
  return rf.classification();
}

double x_star(const OffspringLaw& off, const RateFunction& rf) {
  double log_m = std::log(off.mean());
  double sup = rf.ess_sup();
  if (sup < kInf && rf(sup) <= log_m) return sup;
  double hi = 1.0;
  if (sup < kInf) hi = std::min(hi, sup);
  while (rf(hi) <= log_m) {
    double next = sup < kInf ? std::min(2.0 * hi, sup) : 2.0 * hi;
    if (next == hi) break;  // pinned at a finite support edge
    hi = next;
    if (hi > 1e18) throw Error("x_star: no finite crossing of log m");
  }
  auto pred = [&](double x) { return rf(x) <= log_m; };
  return predicate_sup(pred, 0.0, hi, 1e-10);
}

}  // namespace brw

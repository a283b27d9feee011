#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

namespace brw {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Compensated accumulation; the rare-event bounds sum terms spanning ~300
// orders of magnitude in the exponent.
struct KahanSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    double y = x - comp;
    double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

inline double log_sum_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  double m = std::max(a, b);
  if (m == kInf) return kInf;
  return m + std::log1p(std::exp(-std::fabs(a - b)));
}

// log(sinh(z)/z), stable for both tiny and large |z|.
inline double log_sinhc(double z) {
  double az = std::fabs(z);
  if (az < 1e-4) {
    double z2 = az * az;
    return std::log1p(z2 / 6.0 + z2 * z2 / 120.0);
  }
  if (az > 30.0) return az - std::log(2.0 * az) + std::log1p(-std::exp(-2.0 * az));
  return std::log(std::sinh(az) / az);
}

// Root of a continuous sign-changing function by plain bisection.
// Requires f(lo) and f(hi) of opposite sign (0 counts as either).
inline double bisect_root(const std::function<double(double)>& f, double lo, double hi,
                          double xtol) {
  double flo = f(lo);
  for (int it = 0; it < 200 && hi - lo > xtol; ++it) {
    double mid = 0.5 * (lo + hi);
    double fm = f(mid);
    if ((flo <= 0.0 && fm <= 0.0) || (flo >= 0.0 && fm >= 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// sup{x in [lo,hi] : pred(x)} for a predicate that is true on [lo, x*] and
// false beyond. pred(lo) must hold.
inline double predicate_sup(const std::function<bool(double)>& pred, double lo, double hi,
                            double xtol) {
  if (pred(hi)) return hi;
  for (int it = 0; it < 200 && hi - lo > xtol; ++it) {
    double mid = 0.5 * (lo + hi);
    if (pred(mid))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

// Minimum of a unimodal function on [lo,hi] by golden-section search.
inline double golden_min(const std::function<double(double)>& f, double lo, double hi,
                         double xtol) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 300 && b - a > xtol; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Root of an increasing function on [lo, hi] with f(lo) <= 0 <= f(hi), by
// the Illinois variant of regula falsi (bisection fallback keeps it safe).
inline double illinois_root(const std::function<double(double)>& f, double lo, double hi,
                            double flo, double fhi, double xtol) {
  int side = 0;
  for (int it = 0; it < 200 && hi - lo > xtol; ++it) {
    double mid = fhi != flo ? (lo * fhi - hi * flo) / (fhi - flo) : 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) mid = 0.5 * (lo + hi);
    double fm = f(mid);
    if (fm < 0.0) {
      lo = mid;
      flo = fm;
      if (side == -1) fhi *= 0.5;
      side = -1;
    } else if (fm > 0.0) {
      hi = mid;
      fhi = fm;
      if (side == 1) flo *= 0.5;
      side = 1;
    } else {
      return mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Maximum of a concave function on [lo,hi]; returns the argmax.
inline double ternary_max(const std::function<double(double)>& f, double lo, double hi,
                          double xtol) {
  for (int it = 0; it < 400 && hi - lo > xtol; ++it) {
    double m1 = lo + (hi - lo) / 3.0;
    double m2 = hi - (hi - lo) / 3.0;
    if (f(m1) < f(m2))
      lo = m1;
    else
      hi = m2;
  }
  return 0.5 * (lo + hi);
}

// Least-squares slope of y against x.
inline double lsq_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace brw

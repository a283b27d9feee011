#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <ostream>

#include "brw/laws.hpp"
#include "brw/numeric.hpp"

namespace brw {

// Everything the Legendre-transform engine needs from a law. StepLaw
// provides one; tests may supply synthetic sources (e.g. laws whose log-MGF
// domain ends at a finite point) directly.
struct MgfSource {
  std::function<double(double)> log_mgf;
  double t_lo = -kInf, t_hi = kInf;  // effective domain endpoints
  bool t_lo_closed = false, t_hi_closed = false;
  double ess_inf = -kInf, ess_sup = kInf;
  double atom_at_inf = 0.0, atom_at_sup = 0.0;
};

MgfSource make_mgf_source(const StepLaw& law);

// Shape of I on the right side: slope of I(x)/x diverges (i), lambda* is
// infinite with Lambda' tending to ess sup X (ii), or lambda* is finite
// with a finite limit slope so I continues affinely (iii).
enum class RateCase { SteepTail, InfiniteLambdaFiniteSlope, FiniteLambdaFiniteSlope };

const char* rate_case_name(RateCase c);

struct Classification {
  RateCase rate_case;
  double lambda_star;  // sup{lambda >= 0 : Lambda(lambda) < inf}
  double limit_slope;  // T in the finite-lambda case, ess sup probe otherwise
  double ess_sup;
};

// I(x) = sup_t {t x - Lambda(t)} with lazy caching. Evaluation locates the
// supremum of the concave map t -> t x - Lambda(t) by ternary search over an
// expanding bracket, refined to |t|-resolution 1e-12.
class RateFunction {
 public:
  explicit RateFunction(MgfSource src);
  explicit RateFunction(const StepLaw& law) : RateFunction(make_mgf_source(law)) {}

  double operator()(double x) const;

  const Classification& classification() const { return cls_; }
  double ess_sup() const { return src_.ess_sup; }
  double ess_inf() const { return src_.ess_inf; }
  double log_mgf(double t) const { return src_.log_mgf(t); }

  void dump_cache(std::ostream& os) const;  // CSV rows "x,I(x)"

 private:
  double evaluate(double x) const;
  // Centered finite-difference probe of Lambda'.
  double derivative(double t, double hscale) const;
  struct ProbeResult {
    bool diverged = false;
    bool converged = false;
    double limit = 0.0;
  };
  ProbeResult probe_slope(double t0, double hscale) const;
  void classify();

  MgfSource src_;
  Classification cls_{};
  mutable std::mutex mu_;
  mutable std::map<double, double> cache_;
};

Classification classify(const StepLaw& law);

// x* = sup{x >= 0 : I(x) <= log m}, by bisection with a doubling upper
// bracket; returns ess sup X when I stays below log m on the whole support.
double x_star(const OffspringLaw& off, const RateFunction& rf);

}  // namespace brw

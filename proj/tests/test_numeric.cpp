#include <doctest.h>

#include <cmath>

#include "brw/numeric.hpp"

using namespace brw;

TEST_CASE("bisect_root finds the sign change") {
  auto f = [](double x) { return x * x - 2.0; };
  CHECK(bisect_root(f, 0.0, 2.0, 1e-12) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
}

TEST_CASE("predicate_sup finds the boundary of a monotone predicate") {
  auto pred = [](double x) { return x <= 0.37; };
  CHECK(predicate_sup(pred, 0.0, 1.0, 1e-11) == doctest::Approx(0.37).epsilon(1e-9));
  CHECK(predicate_sup(pred, 0.0, 0.2, 1e-11) == 0.2);  // true everywhere
}

TEST_CASE("golden_min on a unimodal function") {
  auto f = [](double x) { return (x - 0.3) * (x - 0.3) + 1.0; };
  CHECK(golden_min(f, -1.0, 2.0, 1e-10) == doctest::Approx(0.3).epsilon(1e-7));
}

TEST_CASE("ternary_max on a concave function") {
  auto f = [](double x) { return -(x - 1.7) * (x - 1.7); };
  CHECK(ternary_max(f, -5.0, 5.0, 1e-10) == doctest::Approx(1.7).epsilon(1e-7));
}

TEST_CASE("log_sum_exp handles extreme ranges") {
  CHECK(log_sum_exp(0.0, -kInf) == 0.0);
  CHECK(log_sum_exp(-800.0, -800.0) == doctest::Approx(-800.0 + std::log(2.0)));
  CHECK(log_sum_exp(700.0, 0.0) == doctest::Approx(700.0));
}

TEST_CASE("log_sinhc matches sinh(z)/z") {
  for (double z : {1e-6, 0.1, 1.0, 10.0, 50.0}) {
    CHECK(log_sinhc(z) == doctest::Approx(std::log(std::sinh(z) / z)).epsilon(1e-12));
  }
  CHECK(log_sinhc(1000.0) == doctest::Approx(1000.0 - std::log(2000.0)).epsilon(1e-12));
}

TEST_CASE("KahanSum keeps tiny terms") {
  KahanSum acc;
  acc.add(1.0);
  for (int i = 0; i < 1000000; ++i) acc.add(1e-16);
  CHECK(acc.value() == doctest::Approx(1.0 + 1e-10).epsilon(1e-12));
}

TEST_CASE("lsq_slope recovers a line") {
  std::vector<double> x, y;
  for (int i = 0; i < 20; ++i) {
    x.push_back(i);
    y.push_back(3.5 * i - 2.0);
  }
  CHECK(lsq_slope(x, y) == doctest::Approx(3.5).epsilon(1e-12));
}

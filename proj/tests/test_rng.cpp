#include <doctest.h>

#include <cmath>
#include <set>

#include "brw/rng.hpp"

using namespace brw;

TEST_CASE("same seed reproduces the stream") {
  SplitRng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("split streams are keyed, not positional") {
  SplitRng root(7);
  SplitRng s1 = root.split(1, 2, 3);
  SplitRng s2 = root.split(1, 2, 3);
  SplitRng s3 = root.split(1, 2, 4);
  CHECK(s1.next_u64() == s2.next_u64());
  CHECK(s1.next_u64() != s3.next_u64());
}

TEST_CASE("distinct keys give distinct streams") {
  SplitRng root(99);
  std::set<std::uint64_t> firsts;
  for (std::uint64_t r = 0; r < 1000; ++r)
    for (std::uint64_t g = 0; g < 10; ++g) firsts.insert(root.split(r, g).next_u64());
  CHECK(firsts.size() == 10000);
}

TEST_CASE("uniform doubles have the right first moments") {
  SplitRng rng(3);
  double sum = 0.0, sumsq = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    double u = rng.next_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
    sumsq += u * u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(2e-3));
  CHECK(sumsq / n - 0.25 == doctest::Approx(1.0 / 12.0).epsilon(5e-3));
}

TEST_CASE("gaussian draws have mean 0 and variance 1") {
  SplitRng rng(4);
  double sum = 0.0, sumsq = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    double g = rng.next_gaussian();
    sum += g;
    sumsq += g * g;
  }
  CHECK(std::fabs(sum / n) < 0.004);
  CHECK(sumsq / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("binomial_draw matches mean and variance") {
  SplitRng rng(5);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    double k = static_cast<double>(binomial_draw(rng, 1000, 0.3));
    sum += k;
    sumsq += k * k;
  }
  double mean = sum / n;
  CHECK(mean == doctest::Approx(300.0).epsilon(0.002));
  CHECK(sumsq / n - mean * mean == doctest::Approx(210.0).epsilon(0.02));
}

TEST_CASE("multinomial_draw conserves trials") {
  SplitRng rng(6);
  std::vector<double> probs{0.2, 0.5, 0.3};
  std::vector<std::uint64_t> out;
  for (int i = 0; i < 1000; ++i) {
    multinomial_draw(rng, 12345, probs, out);
    std::uint64_t total = 0;
    for (auto v : out) total += v;
    CHECK(total == 12345);
  }
}

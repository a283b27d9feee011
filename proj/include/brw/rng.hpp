#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace brw {

// Counter-based splittable random source. Each stream is a SplitMix64
// sequence (Steele, Lea & Flood 2014; Vigna's fixed-increment variant) whose
// starting state is a keyed hash of (seed, replica, generation, site).
// Streams derived from distinct keys are independent for Monte Carlo
// purposes, so replicas and lattice sites can be processed in any order or
// in parallel and still reproduce bit-identically from the seed.
class SplitRng {
 public:
  using result_type = std::uint64_t;

  explicit SplitRng(std::uint64_t seed) : state_(mix(seed ^ kGolden)) {}

  // Derives an independent substream keyed by up to three tags.
  SplitRng split(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const {
    std::uint64_t h = state_;
    h = mix(h ^ mix(a + 0x9e3779b97f4a7c15ULL));
    h = mix(h ^ mix(b + 0xbf58476d1ce4e5b9ULL));
    h = mix(h ^ mix(c + 0x94d049bb133111ebULL));
    return SplitRng(h, FromState{});
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += kGolden);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0,1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1); safe to pass through log().
  double next_open() {
    for (;;) {
      double u = next_double();
      if (u > 0.0) return u;
    }
  }

  double next_gaussian() {
    double u1 = next_open();
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // UniformRandomBitGenerator interface (for std distributions).
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~static_cast<result_type>(0); }
  result_type operator()() { return next_u64(); }

 private:
  struct FromState {};
  SplitRng(std::uint64_t raw, FromState) : state_(raw) {}

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  std::uint64_t state_;
};

// Exact binomial draw (delegates to the standard library's rejection
// sampler, which is exact in distribution).
inline std::uint64_t binomial_draw(SplitRng& rng, std::uint64_t n, double p) {
  if (n == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  std::binomial_distribution<long long> dist(static_cast<long long>(n), p);
  return static_cast<std::uint64_t>(dist(rng));
}

// Multinomial split of n trials over the given probabilities (must sum to 1).
inline void multinomial_draw(SplitRng& rng, std::uint64_t n, const std::vector<double>& probs,
                             std::vector<std::uint64_t>& out) {
  out.assign(probs.size(), 0);
  double remaining_p = 1.0;
  std::uint64_t remaining_n = n;
  for (size_t i = 0; i + 1 < probs.size() && remaining_n > 0; ++i) {
    double cond = probs[i] / remaining_p;
    if (cond > 1.0) cond = 1.0;
    std::uint64_t k = binomial_draw(rng, remaining_n, cond);
    out[i] = k;
    remaining_n -= k;
    remaining_p -= probs[i];
    if (remaining_p <= 0.0) remaining_p = 1e-300;
  }
  if (!probs.empty()) out.back() += remaining_n;
}

}  // namespace brw

// SPDX-License-Identifier: MIT
//
// Shared numeric utilities: units, deterministic RNG streams, reductions.
//
// Unit system used throughout the library:
//   length  -> nm
//   time    -> microseconds
//   angular frequency / coupling -> rad/us
// User-facing frequencies in MHz are converted at the boundary with a 2*pi.

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace sqz {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Bare dipolar coupling scale J0 such that J(r) = J0 / r^3.
// 2*pi * 52 MHz nm^3, expressed in rad nm^3 / us.
inline constexpr double kJ0Default = kTwoPi * 52.0;

// Carbon number density of diamond, nm^-3. Used to convert a ppm*nm areal
// defect density into spins per nm^2 (configurable at call sites).
inline constexpr double kDiamondCarbonDensityPerNm3 = 176.25;

inline double mhz_to_rad_per_us(double f_mhz) { return kTwoPi * f_mhz; }
inline double rad_per_us_to_mhz(double w) { return w / kTwoPi; }

inline double ppm_nm_to_per_nm2(double ppm_nm,
                                double carbon_density = kDiamondCarbonDensityPerNm3) {
  return ppm_nm * 1e-6 * carbon_density;
}

// ---------------------------------------------------------------------------
// RNG. splitmix64 for seeding, xoshiro256++ for the stream. Streams are
// derived counter-style from (master seed, stream index) so adding more
// realizations never perturbs the draws of existing ones, and results are
// independent of thread scheduling.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64_next(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t s = master;
  std::uint64_t base = splitmix64_next(s);
  std::uint64_t t = base + 0x632be59bd9b4e019ULL * (stream + 1);
  return splitmix64_next(t);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix64_next(s);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0,1) with 53 random bits.
  double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  // Exact Poisson sampling by inversion; large means are split into chunks
  // (Poisson is additive) to keep the product-of-uniforms method stable.
  std::uint64_t poisson(double mean) {
    if (!(mean >= 0.0)) throw std::invalid_argument("poisson: mean must be >= 0");
    std::uint64_t total = 0;
    while (mean > 30.0) {
      total += poisson_small(30.0);
      mean -= 30.0;
    }
    return total + poisson_small(mean);
  }

  double normal() {
    // Box-Muller, no caching (keeps the stream consumption deterministic).
    double u1 = 0.0;
    do { u1 = uniform01(); } while (u1 <= 0.0);
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t poisson_small(double mean) {
    const double limit = std::exp(-mean);
    double prod = 1.0;
    std::uint64_t n = 0;
    for (;;) {
      prod *= uniform01();
      if (prod <= limit) return n;
      ++n;
    }
  }

  std::uint64_t state_[4];
};

// ---------------------------------------------------------------------------
// Deterministic reductions. Pairwise tree over a fixed index order, so sums
// are byte-identical regardless of how work was scheduled across threads.
// ---------------------------------------------------------------------------

inline double pairwise_sum(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

inline double pairwise_sum(const std::vector<double>& v) {
  return pairwise_sum(std::span<const double>(v.data(), v.size()));
}

struct MeanErr {
  double mean = 0.0;
  double stderr_mean = 0.0;
};

// Mean and standard error across independent samples, deterministic order.
inline MeanErr mean_and_stderr(std::span<const double> v) {
  MeanErr out;
  const std::size_t n = v.size();
  if (n == 0) return out;
  out.mean = pairwise_sum(v) / double(n);
  if (n == 1) return out;
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = v[i] - out.mean;
    sq[i] = d * d;
  }
  const double var = pairwise_sum(sq) / double(n - 1);
  out.stderr_mean = std::sqrt(var / double(n));
  return out;
}

}  // namespace sqz

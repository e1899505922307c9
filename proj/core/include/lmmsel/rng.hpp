#pragma once

#include <array>
#include <cstdint>

namespace lmmsel {

/// Seedable, splittable generator: xoshiro256++ core seeded through
/// SplitMix64, with deterministic substreams keyed by (seed, stream).
/// Normal variates use the inverse-CDF transform so each draw consumes
/// exactly one 64-bit word. Reproducibility is per platform; the
/// floating-point reduction order of consumers is fixed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  /// Independent deterministic substream (same seed, derived stream key).
  Rng split(std::uint64_t substream) const;

  std::uint64_t next_u64();

  /// Uniform on the open interval (0, 1).
  double uniform();

  /// Standard normal.
  double normal();

  /// Gamma(shape, rate) with mean shape/rate (Marsaglia-Tsang).
  double gamma(double shape, double rate);

  /// Inverse-Gamma(shape, rate): 1/Gamma(shape, rate), mean rate/(shape-1).
  double inv_gamma(double shape, double rate);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::array<std::uint64_t, 4> s_{};
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
};

}  // namespace lmmsel

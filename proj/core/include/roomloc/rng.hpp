#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace roomloc {

/// Portable pseudo-random source.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The distribution transforms are implemented here rather than
/// taken from <random> because the standard library distributions are
/// implementation-defined and differ between libstdc++, libc++ and MSVC.
///
///   uniform()  -> (engine() >> 11) * 2^-53, in [0, 1)
///   normal()   -> Box-Muller, both variates used in turn
///   below(n)   -> rejection sampling on the top bits
///
/// Independent sub-streams are derived with fork(tag), which mixes the
/// parent seed and an FNV-1a hash of the tag through splitmix64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  /// Exponential variate with the given mean.
  double exponential(double mean);
  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }

  Rng fork(std::string_view tag) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace roomloc

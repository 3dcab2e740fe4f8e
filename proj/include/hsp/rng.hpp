#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace hsp {

/// Deterministic sub-stream derivation: every sampling operation gets its
/// own seed derived from the run's master seed and a fixed stream id, so
/// adding or reordering operations never perturbs unrelated streams.
/// mix is the splitmix64 finalizer applied to master + GOLDEN * (id + 1).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream_id);

/// Fixed stream ids for the simulation pipeline.
enum class Stream : std::uint64_t {
  Coincidences = 1,
  MarginalUnknown = 2,
  MarginalReference = 3,
  DarkCoincidences = 4,
  DarkMarginalUnknown = 5,
  DarkMarginalReference = 6,
  GlobalSearch = 7,
  McTrial = 0x100000,  // trial t uses McTrial + t
};

inline std::uint64_t derive_seed(std::uint64_t master, Stream s) {
  return derive_seed(master, static_cast<std::uint64_t>(s));
}

/// Seedable generator with portable sampling routines. The engine is
/// std::mt19937_64 (bit-exact by the standard); uniform, Poisson and
/// multinomial draws are implemented here rather than with std::
/// distributions so that output streams do not depend on the standard
/// library implementation.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Poisson draw; inversion for small means, Hormann's PTRS transformed
  /// rejection for large ones.
  std::int64_t poisson(double mean);

  /// n draws from the categorical distribution with the given nonnegative
  /// weights (need not be normalized); returns per-category counts.
  std::vector<std::int64_t> multinomial(std::int64_t n, const std::vector<double>& weights);

private:
  std::int64_t poisson_inversion(double mean);
  std::int64_t poisson_ptrs(double mean);

  std::mt19937_64 engine_;
};

}  // namespace hsp

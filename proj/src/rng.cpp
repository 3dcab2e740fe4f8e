#include "hsp/rng.hpp"

#include <algorithm>
#include <cmath>

#include "hsp/errors.hpp"

namespace hsp {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream_id) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream_id + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::int64_t Rng::poisson(double mean) {
  if (!(mean >= 0.0)) throw ConfigError("poisson: mean must be nonnegative");
  if (mean == 0.0) return 0;
  if (mean < 30.0) return poisson_inversion(mean);
  return poisson_ptrs(mean);
}

std::int64_t Rng::poisson_inversion(double mean) {
  const double limit = std::exp(-mean);
  std::int64_t k = 0;
  double prod = uniform01();
  while (prod > limit) {
    ++k;
    prod *= uniform01();
  }
  return k;
}

// Transformed rejection with squeeze (Hormann 1993), exact for large means.
std::int64_t Rng::poisson_ptrs(double mean) {
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);

  for (;;) {
    const double u = uniform01() - 0.5;
    const double v = uniform01();
    const double us = 0.5 - std::abs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    const double k = kf;
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        k * loglam - mean - std::lgamma(k + 1.0)) {
      return static_cast<std::int64_t>(kf);
    }
  }
}

std::vector<std::int64_t> Rng::multinomial(std::int64_t n, const std::vector<double>& weights) {
  if (n < 0) throw ConfigError("multinomial: n must be nonnegative");
  std::vector<std::int64_t> counts(weights.size(), 0);
  if (n == 0) return counts;

  std::vector<double> cdf(weights.size());
  double acc = 0.0;
  std::size_t last_nonzero = weights.size();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0)) throw NumericalError("multinomial: negative weight");
    if (weights[i] > 0.0) last_nonzero = i;
    acc += weights[i];
    cdf[i] = acc;
  }
  if (!(acc > 0.0)) throw DataError("multinomial: all weights are zero");

  for (std::int64_t d = 0; d < n; ++d) {
    const double u = uniform01() * acc;
    // upper_bound cannot land on a zero-weight category (its cdf entry
    // equals its predecessor's), but u may round up to acc itself.
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t idx = static_cast<std::size_t>(it - cdf.begin());
    if (idx >= counts.size()) idx = last_nonzero;
    ++counts[idx];
  }
  return counts;
}

}  // namespace hsp

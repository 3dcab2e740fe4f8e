#include "hsp/sampler.hpp"

#include <cmath>
#include <numeric>

#include "hsp/errors.hpp"
#include "hsp/rng.hpp"

namespace hsp {

std::string to_string(MeasurementMode mode) {
  switch (mode) {
    case MeasurementMode::AmplitudeUnknown: return "amplitude_u";
    case MeasurementMode::AmplitudeReference: return "amplitude_r";
    case MeasurementMode::Hologram: return "hologram";
  }
  return "unknown";
}

MeasurementMode measurement_mode_from_string(const std::string& s) {
  if (s == "amplitude_u") return MeasurementMode::AmplitudeUnknown;
  if (s == "amplitude_r") return MeasurementMode::AmplitudeReference;
  if (s == "hologram") return MeasurementMode::Hologram;
  throw DataError("unknown measurement mode: " + s);
}

std::int64_t CoincidenceCounts::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

std::int64_t MarginalCounts::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

CoincidenceCounts sample_coincidences(const JointDistribution& jd, std::int64_t n_pairs,
                                      std::uint64_t seed) {
  if (n_pairs < 0) throw ConfigError("sample_coincidences: n_pairs must be nonnegative");
  CoincidenceCounts cc{jd.grid, std::vector<std::int64_t>(jd.p.size(), 0), 0, seed};
  if (n_pairs == 0) return cc;
  if (!(jd.total() > 0.0)) {
    throw DataError("sample_coincidences: joint distribution has zero total probability");
  }
  Rng rng(seed);
  cc.counts = rng.multinomial(n_pairs, jd.p);
  cc.n_pairs = n_pairs;
  return cc;
}

MarginalCounts sample_marginal(const Wavefunction& wf, std::int64_t n_events,
                               MeasurementMode mode, std::uint64_t seed) {
  if (mode == MeasurementMode::Hologram) {
    throw ConfigError("sample_marginal: hologram mode collects pairs, not marginals");
  }
  if (n_events < 0) throw ConfigError("sample_marginal: n_events must be nonnegative");
  MarginalCounts mc{wf.grid, std::vector<std::int64_t>(wf.amplitude.size(), 0), 0, mode, seed};
  if (n_events == 0) return mc;
  std::vector<double> probs(wf.amplitude.size());
  for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = wf.amplitude[i] * wf.amplitude[i];
  Rng rng(seed);
  mc.counts = rng.multinomial(n_events, probs);
  mc.n_events = n_events;
  return mc;
}

namespace {

std::int64_t add_dark_to_bins(std::vector<std::int64_t>& bins, const DetectorConfig& det,
                              std::uint64_t seed) {
  if (det.dark_rate < 0.0) throw ConfigError("add_dark_counts: dark_rate must be nonnegative");
  const double mean = det.dark_rate * static_cast<double>(det.n_frames);
  if (mean == 0.0) return 0;
  Rng rng(seed);
  std::int64_t added = 0;
  for (auto& c : bins) {
    const std::int64_t d = rng.poisson(mean);
    c += d;
    added += d;
  }
  return added;
}

}  // namespace

MarginalCounts add_dark_counts(MarginalCounts counts, const DetectorConfig& det,
                               std::uint64_t seed) {
  counts.n_events += add_dark_to_bins(counts.counts, det, seed);
  return counts;
}

CoincidenceCounts add_dark_counts(CoincidenceCounts counts, const DetectorConfig& det,
                                  std::uint64_t seed) {
  counts.n_pairs += add_dark_to_bins(counts.counts, det, seed);
  return counts;
}

SimulatedExperiment simulate_experiment(const Wavefunction& psi_u, const Wavefunction& psi_r,
                                        double visibility, std::int64_t n_pairs,
                                        std::int64_t n_marginal_events,
                                        const DetectorConfig& det, std::uint64_t master_seed) {
  if (!(det.pair_efficiency > 0.0 && det.pair_efficiency <= 1.0)) {
    throw ConfigError("simulate_experiment: pair_efficiency must lie in (0, 1]");
  }
  const auto jd = hsp_distribution(psi_u, psi_r, visibility);
  const auto detected_pairs =
      static_cast<std::int64_t>(std::llround(static_cast<double>(n_pairs) * det.pair_efficiency));

  auto cc = sample_coincidences(jd, detected_pairs, derive_seed(master_seed, Stream::Coincidences));
  auto mu = sample_marginal(psi_u, n_marginal_events, MeasurementMode::AmplitudeUnknown,
                            derive_seed(master_seed, Stream::MarginalUnknown));
  auto mr = sample_marginal(psi_r, n_marginal_events, MeasurementMode::AmplitudeReference,
                            derive_seed(master_seed, Stream::MarginalReference));

  if (det.dark_rate > 0.0 && det.n_frames > 0) {
    cc = add_dark_counts(std::move(cc), det, derive_seed(master_seed, Stream::DarkCoincidences));
    mu = add_dark_counts(std::move(mu), det, derive_seed(master_seed, Stream::DarkMarginalUnknown));
    mr = add_dark_counts(std::move(mr), det,
                         derive_seed(master_seed, Stream::DarkMarginalReference));
  }
  return SimulatedExperiment{std::move(cc), std::move(mu), std::move(mr)};
}

}  // namespace hsp

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hsp/forward.hpp"
#include "hsp/grid.hpp"
#include "hsp/wavefunction.hpp"

namespace hsp {

/// Half-wave-plate setting: which output statistics a run collects.
/// 0 deg and 45 deg send one photon each to a fixed port (single-photon
/// amplitude measurement); 22.5 deg realizes the balanced beam splitter
/// producing the coincidence hologram.
enum class MeasurementMode { AmplitudeUnknown, AmplitudeReference, Hologram };

std::string to_string(MeasurementMode mode);
MeasurementMode measurement_mode_from_string(const std::string& s);

/// Detector model reduced to what affects binned counts.
struct DetectorConfig {
  double dark_rate = 0.0;      // expected dark counts per bin per frame
  std::int64_t n_frames = 0;   // frames collected
  double pair_efficiency = 1.0;  // in (0, 1]; scales the detected-pair budget
};

/// Binned coincidence events drawn from a joint distribution.
struct CoincidenceCounts {
  Grid grid;
  std::vector<std::int64_t> counts;  // row-major n x n
  std::int64_t n_pairs = 0;
  std::uint64_t seed = 0;

  std::int64_t at(int i, int j) const {
    return counts[static_cast<std::size_t>(i) * static_cast<std::size_t>(grid.n_bins()) +
                  static_cast<std::size_t>(j)];
  }
  std::int64_t total() const;
};

/// Binned single-photon events for one amplitude-measurement mode.
struct MarginalCounts {
  Grid grid;
  std::vector<std::int64_t> counts;
  std::int64_t n_events = 0;
  MeasurementMode mode = MeasurementMode::AmplitudeUnknown;
  std::uint64_t seed = 0;

  std::int64_t total() const;
};

/// The full dataset one experimental run produces.
struct SimulatedExperiment {
  CoincidenceCounts coincidences;
  MarginalCounts marginal_u;
  MarginalCounts marginal_r;
};

/// Draws n_pairs coincidences from the multinomial distribution over bin
/// pairs with probabilities p[i][j] / sum(p). Deterministic given seed.
/// The full (unfolded) matrix is sampled: the pair (x, x') is recorded in
/// two distinct detector regions, so (i, j) and (j, i) are separate bins.
CoincidenceCounts sample_coincidences(const JointDistribution& jd, std::int64_t n_pairs,
                                      std::uint64_t seed);

/// Draws n_events single-photon detections from |psi(x_i)|^2 dx.
/// Only the amplitude modes are valid here.
MarginalCounts sample_marginal(const Wavefunction& wf, std::int64_t n_events,
                               MeasurementMode mode, std::uint64_t seed);

/// Adds independent Poisson(dark_rate * n_frames) dark counts per bin.
MarginalCounts add_dark_counts(MarginalCounts counts, const DetectorConfig& det,
                               std::uint64_t seed);
/// Same, per bin pair.
CoincidenceCounts add_dark_counts(CoincidenceCounts counts, const DetectorConfig& det,
                                  std::uint64_t seed);

/// One call producing everything the retrieval pipeline needs. Sub-seeds
/// are derived deterministically from the master seed (see rng.hpp), and
/// pair_efficiency scales n_pairs to the expected detected-pair budget.
/// Dark counts are injected only when dark_rate > 0.
SimulatedExperiment simulate_experiment(const Wavefunction& psi_u, const Wavefunction& psi_r,
                                        double visibility, std::int64_t n_pairs,
                                        std::int64_t n_marginal_events,
                                        const DetectorConfig& det, std::uint64_t master_seed);

}  // namespace hsp

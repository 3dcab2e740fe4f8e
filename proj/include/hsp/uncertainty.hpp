#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hsp/retrieval.hpp"
#include "hsp/sampler.hpp"

namespace hsp {

struct McConfig {
  RetrievalConfig retrieval;
  /// Warm-started trials rerun only the local refinement from the base
  /// reconstruction instead of the full global search, co-fitting the
  /// visibility so its spread stays meaningful. Turning this off runs
  /// the complete two-stage retrieval in every trial.
  bool warm_start = true;
  double radius_k = 0.0;  // wave number for the per-trial radius fit; 0 = 2*pi/800nm
  int threads = 0;        // 0 = hardware concurrency
  double max_failure_fraction = 0.10;
  bool keep_trial_phases = false;  // retain per-trial phase vectors for dumping
};

/// Gauge-unified Monte-Carlo statistics over Poisson-resampled datasets.
struct McSummary {
  Grid grid;
  int n_trials = 0;    // requested
  int n_failures = 0;  // excluded trials
  std::vector<double> phase_mean;  // radians; NaN outside support
  std::vector<double> phase_std;   // one standard deviation; NaN outside support
  std::vector<bool> support_mask;  // fixed to the base reconstruction's mask
  std::vector<double> amp_u_base;  // base amplitude estimates (for region cuts)
  std::vector<double> amp_r_base;
  double visibility_mean = 0.0;
  double visibility_std = 0.0;
  std::vector<double> mean_reconstructed_hsp;  // n x n row-major
  double r_mean = 0.0;  // mm
  double r_std = 0.0;   // mm
  std::vector<std::uint64_t> seeds;  // per-trial master seeds
  std::optional<std::vector<std::vector<double>>> trial_phases;  // successful trials
};

/// Replaces every bin by an independent Poisson draw with the observed
/// count as its mean. Deterministic given the seed.
CoincidenceCounts poisson_resample(const CoincidenceCounts& counts, std::uint64_t seed);
MarginalCounts poisson_resample(const MarginalCounts& counts, std::uint64_t seed);

/// Repeats the retrieval on resampled count data and aggregates
/// gauge-unified per-bin phase statistics, the visibility and radius
/// spreads, and the mean reconstructed hologram. Trials run concurrently;
/// the reduction is ordered by trial index, so the summary is a pure
/// function of (inputs, master_seed, n_trials).
McSummary mc_run(const CoincidenceCounts& counts, const MarginalCounts& m_u,
                 const MarginalCounts& m_r, const McConfig& cfg, int n_trials,
                 std::uint64_t master_seed);

}  // namespace hsp

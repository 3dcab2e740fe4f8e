#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "hsp/forward.hpp"
#include "hsp/grid.hpp"
#include "hsp/sampler.hpp"
#include "hsp/wavefunction.hpp"

namespace hsp {

struct RetrievalConfig {
  int poly_degree = 4;       // stage-1 polynomial degree (no constant term)
  int n_global_starts = 32;  // stage-1 local runs
  /// Per-degree [lo, hi] bounds for coefficients 1..poly_degree (rad/mm^d).
  /// Empty = derived defaults: degree 2 bounded by 10x the curvature a
  /// double pass through the nominal lens would imprint, other degrees by
  /// +-2*pi / extent^d.
  std::vector<std::array<double, 2>> coeff_bounds;
  std::array<double, 2> visibility_bounds{0.0, 1.0};
  double local_tol = 1e-12;  // stage-2 stop: objective decrease below this
  int max_iters = 5000;      // stage-2 iteration cap
  double support_threshold = kDefaultSupportThreshold;
  bool co_optimize_visibility = false;  // stage 2 refits V along with the phase
  double auto_bounds_k = 0.0;           // 0 = 2*pi/800nm
  double auto_bounds_focal = 75.0;      // nominal lens focal length, mm
};

/// Gauge moves applied to a reconstructed phase profile.
struct GaugeRecord {
  double offset = 0.0;            // weighted mean subtracted (before any flip)
  int sign = 1;                   // +1 kept, -1 flipped
  bool convexity_fit_ok = true;   // false: degenerate fit, offset-only gauge
};

struct Stage1Result {
  std::vector<double> coeffs;  // c1..cD of phi(x) = sum_d c_d x^d
  double visibility = 0.0;
  double objective = 0.0;      // Frobenius objective at the stage-1 optimum
};

struct RetrievalResult {
  Grid grid;
  std::vector<double> phase;  // radians; NaN at unsupported bins
  std::vector<bool> support_mask;
  double visibility_est = 0.0;
  double objective = 0.0;  // Frobenius norm at the solution
  std::vector<double> poly_coeffs_stage1;
  double stage1_objective = 0.0;
  GaugeRecord gauge;
  std::vector<double> objective_trace;  // accepted stage-2 iterates, non-increasing
  std::vector<double> amp_u;            // amplitude estimates used by the fit
  std::vector<double> amp_r;
};

struct RadiusFit {
  double radius = 0.0;     // mm
  double std_error = 0.0;  // mm
  double quad_coeff = 0.0; // rad/mm^2
  double quad_std_error = 0.0;
};

/// Converts counts into a probability density: p = counts / (total dx^2),
/// so the empirical distribution integrates to one. The visibility field
/// is left unset.
JointDistribution empirical_distribution(const CoincidenceCounts& counts);

/// |psi(x_i)| = sqrt(counts_i / (total dx)); normalized by construction.
std::vector<double> amplitude_estimate(const MarginalCounts& m);

/// Frobenius-norm data misfit between a measured joint distribution and
/// the forward model built from (amp_u, amp_r, phase, visibility).
/// Both matrices are restricted to bins where both amplitudes reach the
/// support threshold and renormalized to unit total there, so the
/// comparison is shape-only. The caching variant below is what the
/// optimizer uses; this free function is the one-shot form.
double objective(const JointDistribution& p_meas, const std::vector<double>& amp_u,
                 const std::vector<double>& amp_r, const std::vector<double>& phase,
                 double visibility, double support_threshold = kDefaultSupportThreshold);

/// Precomputed misfit evaluator over the supported bins. Phases are
/// handled in packed form (one entry per supported bin); gradients are
/// analytic.
class PhaseRetrievalProblem {
public:
  PhaseRetrievalProblem(const JointDistribution& p_meas, std::vector<double> amp_u,
                        std::vector<double> amp_r, double support_threshold,
                        const std::vector<bool>* mask_override = nullptr);

  int n_supported() const { return static_cast<int>(bins_.size()); }
  const std::vector<bool>& mask() const { return mask_; }
  const std::vector<int>& supported_bins() const { return bins_; }
  const Grid& grid() const { return grid_; }
  const std::vector<double>& amp_u() const { return amp_u_full_; }
  const std::vector<double>& amp_r() const { return amp_r_full_; }

  /// Frobenius norm (not squared) of the unit-normalized difference.
  double objective_packed(const std::vector<double>& phase, double visibility) const;
  /// Squared objective; what the optimizer minimizes.
  double objective_sq(const std::vector<double>& phase, double visibility) const;
  /// Analytic gradient of objective_sq (diagnostic surface, checked
  /// against finite differences in the tests). grad_vis may be null.
  void gradient_sq(const std::vector<double>& phase, double visibility,
                   std::vector<double>& grad_phase, double* grad_vis) const;

  /// One deterministic coordinate-descent sweep: every supported bin's
  /// phase moves to its conditional optimum. For one bin the misfit is a
  /// low-degree trigonometric rational, so the 1D minimization is dense
  /// sampling plus golden-section refinement in O(n_supported). The
  /// model only constrains the phase mod 2*pi; the stored value takes
  /// the branch nearest branch_anchor (the refinement starting point),
  /// keeping the unwrapped profile stable across sweeps. Returns the
  /// number of bins that moved.
  int refine_sweep(std::vector<double>& phase, double visibility,
                   const std::vector<double>* branch_anchor = nullptr) const;

  std::vector<double> pack(const std::vector<double>& full) const;
  std::vector<double> unpack(const std::vector<double>& packed) const;  // NaN outside

private:
  Grid grid_;
  std::vector<bool> mask_;
  std::vector<int> bins_;
  std::vector<double> amp_u_full_, amp_r_full_;
  std::vector<double> u_, r_;        // packed amplitudes
  std::vector<double> meas_;         // packed, unit total, symmetrized
  std::vector<double> s_;            // packed: direct (non-interference) term
  std::vector<double> w0_;           // packed: u_i u_j r_i r_j / 2
  double asym_const_ = 0.0;          // misfit floor from data asymmetry
};

/// Stage 1: multi-start bounded derivative-free minimization over the
/// polynomial coefficients (degrees 1..D) and the visibility. Start
/// points combine a deterministic coarse scan over the quadratic
/// coefficient with seeded random points in the bound box; the best of
/// n_global_starts local runs wins, ties broken by start index.
Stage1Result global_poly_search(const JointDistribution& p_meas, const std::vector<double>& amp_u,
                                const std::vector<double>& amp_r, const RetrievalConfig& cfg,
                                std::uint64_t seed);

/// Stage 2: monotone descent over the per-bin phase vector starting from
/// phase_init (full-length; values outside the support are ignored).
/// The visibility is held fixed unless cfg.co_optimize_visibility.
RetrievalResult local_refine(const JointDistribution& p_meas, const std::vector<double>& amp_u,
                             const std::vector<double>& amp_r,
                             const std::vector<double>& phase_init, double visibility,
                             const RetrievalConfig& cfg,
                             const std::vector<bool>* mask_override = nullptr);

/// Removes the offset and sign ambiguities of a phase profile:
/// (1) subtracts the |psi|^2-weighted mean phase, (2) flips the sign if
/// the weighted quadratic fit has negative curvature. Idempotent.
/// Returns the gauged phase (NaN kept at non-finite inputs).
std::pair<std::vector<double>, GaugeRecord> gauge_fix(
    const std::vector<double>& phase, const std::vector<double>& amp_u, const Grid& grid,
    double support_threshold = kDefaultSupportThreshold);

/// Full pipeline from count data: empirical distribution -> amplitude
/// estimates -> global polynomial search -> local refinement -> gauge fix.
RetrievalResult retrieve_phase(const CoincidenceCounts& counts, const MarginalCounts& m_u,
                               const MarginalCounts& m_r, const RetrievalConfig& cfg,
                               std::uint64_t seed);

/// Same pipeline fed with an already-formed distribution and amplitudes
/// (noiseless studies, exact exported holograms).
RetrievalResult retrieve_phase_from_distribution(const JointDistribution& p_meas,
                                                 const std::vector<double>& amp_u,
                                                 const std::vector<double>& amp_r,
                                                 const RetrievalConfig& cfg, std::uint64_t seed);

/// Weighted least-squares fit phi(x) = a x^2 + b x + c over supported
/// bins; returns R = k / (2a) with the standard error propagated from
/// the fit covariance. Needs >= 3 supported bins and nonzero curvature.
RadiusFit fit_radius(const std::vector<double>& phase, const std::vector<double>& amp_weights,
                     const Grid& grid, double k,
                     double support_threshold = kDefaultSupportThreshold);

/// Forward model rebuilt from retrieval outputs (non-finite phases are
/// treated as zero); used for rendering and Monte-Carlo averaging.
JointDistribution reconstruct_hsp(const Grid& grid, const std::vector<double>& amp_u,
                                  const std::vector<double>& amp_r,
                                  const std::vector<double>& phase, double visibility);

/// Effective stage-1 bounds for a grid (resolves the auto defaults).
std::vector<std::array<double, 2>> effective_coeff_bounds(const RetrievalConfig& cfg,
                                                          const Grid& grid);

}  // namespace hsp

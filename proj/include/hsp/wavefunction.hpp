#pragma once

#include <complex>
#include <vector>

#include "hsp/grid.hpp"

namespace hsp {

/// Wave number 2*pi / (800 nm) expressed in rad/mm.
inline constexpr double kWavelength800nmMm = 8.0e-4;
double default_wave_number();

/// Relative amplitude below which a bin's phase is treated as undefined.
inline constexpr double kDefaultSupportThreshold = 1e-3;

/// Parameters of a quadratic phase profile phi(x) = k x^2 / (2 R).
struct QuadraticPhaseParams {
  double k;       // wave number, rad/mm; must be > 0
  double radius;  // radius of curvature, mm; must be nonzero
};

/// Discretized single-photon spatial wavefunction, split into a
/// nonnegative amplitude (units mm^-1/2) and a local phase (radians)
/// per bin. Values are immutable after construction; all operations
/// return new wavefunctions.
struct Wavefunction {
  Grid grid;
  std::vector<double> amplitude;
  std::vector<double> phase;

  std::complex<double> value(int i) const {
    const auto idx = static_cast<std::size_t>(i);
    return std::polar(amplitude[idx], phase[idx]);
  }
};

/// Validates invariants (sizes, nonnegative amplitude) and returns the
/// wavefunction scaled so that sum(|psi|^2 dx) = 1.
Wavefunction make_wavefunction(Grid grid, std::vector<double> amplitude,
                               std::vector<double> phase);

/// Rescales the amplitude so that sum(amplitude^2 dx) = 1.
Wavefunction normalize(Wavefunction wf);

/// Gaussian mode: amplitude ~ exp(-(x - center)^2 / waist^2), flat phase.
/// The waist is the field 1/e radius. Rejects modes whose analytically
/// estimated probability mass outside the grid exceeds 1e-4, since
/// truncation would silently break the normalization semantics.
Wavefunction gaussian_mode(const Grid& grid, double waist, double center = 0.0);

/// Adds phi(x) = k x^2 / (2 R) to the local phase. Amplitude unchanged.
Wavefunction apply_quadratic_phase(Wavefunction wf, const QuadraticPhaseParams& params);

/// Two transits through a thin lens of the given focal length, each
/// imprinting -k x^2 / (2 f); equivalent to a quadratic phase with
/// R = -f/2. The sign only matters for reporting (the joint distribution
/// is invariant under a global phase sign flip); report |R| = f/2.
Wavefunction apply_lens_double_pass(Wavefunction wf, double k, double focal_length);

/// Adds an arbitrary per-bin phase profile.
Wavefunction apply_phase_profile(Wavefunction wf, const std::vector<double>& phase_values);

/// Inner product sum(conj(psi_a) psi_b dx). Grids must match.
std::complex<double> overlap(const Wavefunction& a, const Wavefunction& b);

/// Bins whose amplitude reaches rel_threshold times the maximum amplitude.
std::vector<bool> support_mask(const std::vector<double>& amplitude,
                               double rel_threshold = kDefaultSupportThreshold);

}  // namespace hsp

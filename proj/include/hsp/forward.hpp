#pragma once

#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include "hsp/grid.hpp"
#include "hsp/wavefunction.hpp"

namespace hsp {

/// Two-photon probability amplitude Psi(x_i, x'_j) on a common grid,
/// antisymmetric by construction. Units mm^-1. Row-major storage.
struct AmplitudeMatrix {
  Grid grid;
  std::vector<std::complex<double>> values;

  std::complex<double> at(int i, int j) const {
    return values[static_cast<std::size_t>(i) * static_cast<std::size_t>(grid.n_bins()) +
                  static_cast<std::size_t>(j)];
  }
};

/// Joint coincidence probability density p(x_i, x'_j) (units mm^-2):
/// the single-photon hologram. Symmetric and nonnegative. `visibility`
/// is set for model-built distributions and empty for empirical ones.
struct JointDistribution {
  Grid grid;
  std::vector<double> p;
  std::optional<double> visibility;

  double at(int i, int j) const {
    return p[static_cast<std::size_t>(i) * static_cast<std::size_t>(grid.n_bins()) +
             static_cast<std::size_t>(j)];
  }
  /// sum(p) * dx^2
  double total() const;
};

/// Psi(x_i, x'_j) = (psi_u(x_i) psi_r(x'_j) - psi_r(x_i) psi_u(x'_j)) / 2,
/// the superposition of the two-transmission and two-reflection paths
/// behind a balanced beam splitter.
AmplitudeMatrix two_photon_amplitude(const Wavefunction& psi_u, const Wavefunction& psi_r);

/// Joint detection probability density for partially distinguishable
/// photons:
///   p(x,x') = (|u(x)|^2 |r(x')|^2 + |r(x)|^2 |u(x')|^2) / 4
///             - (V/2) |u(x)||u(x')||r(x)||r(x')| cos(phi(x) - phi(x'))
/// where V in [0,1] is the spectral-mode-overlap visibility and phi is
/// the local phase of psi_u. Requires a flat-phase reference: all
/// psi_r phases equal within 1e-9 on its supported bins.
JointDistribution hsp_distribution(const Wavefunction& psi_u, const Wavefunction& psi_r,
                                   double visibility);

/// Row sums and column sums times dx. Equal within 1e-12 by symmetry.
std::pair<std::vector<double>, std::vector<double>> marginals(const JointDistribution& jd);

/// Total coincidence probability 1/2 - (V/2)|<psi_r|psi_u>|^2, the
/// integral of the joint density.
double coincidence_probability(const Wavefunction& psi_u, const Wavefunction& psi_r,
                               double visibility);

/// Hong-Ou-Mandel dip visibility V |<psi_r|psi_u>|^2
/// = 1 - coincidence_probability / (1/2).
double hom_dip_visibility(const Wavefunction& psi_u, const Wavefunction& psi_r,
                          double visibility);

}  // namespace hsp

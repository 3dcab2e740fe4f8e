#pragma once

// Independent brute-force references used to pin expected values. These
// deliberately do not call into the forward-module code paths they check.

#include <cmath>
#include <complex>
#include <vector>

#include "hsp/grid.hpp"
#include "hsp/rng.hpp"
#include "hsp/wavefunction.hpp"

namespace test_oracles {

/// |(u(x_i) r(x_j) - r(x_i) u(x_j)) / 2|^2 by direct complex arithmetic.
inline std::vector<double> two_photon_density_brute(const hsp::Wavefunction& psi_u,
                                                    const hsp::Wavefunction& psi_r) {
  const int n = psi_u.grid.n_bins();
  std::vector<double> out(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const std::complex<double> ui =
          psi_u.amplitude[static_cast<std::size_t>(i)] *
          std::exp(std::complex<double>(0.0, psi_u.phase[static_cast<std::size_t>(i)]));
      const std::complex<double> uj =
          psi_u.amplitude[static_cast<std::size_t>(j)] *
          std::exp(std::complex<double>(0.0, psi_u.phase[static_cast<std::size_t>(j)]));
      const std::complex<double> ri =
          psi_r.amplitude[static_cast<std::size_t>(i)] *
          std::exp(std::complex<double>(0.0, psi_r.phase[static_cast<std::size_t>(i)]));
      const std::complex<double> rj =
          psi_r.amplitude[static_cast<std::size_t>(j)] *
          std::exp(std::complex<double>(0.0, psi_r.phase[static_cast<std::size_t>(j)]));
      const std::complex<double> amp = 0.5 * (ui * rj - ri * uj);
      out[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
          static_cast<std::size_t>(j)] = std::norm(amp);
    }
  }
  return out;
}

/// Direct elementwise evaluation of the joint density formula, written
/// independently of the library (no pair mirroring, no clamping).
inline std::vector<double> joint_density_brute(const hsp::Wavefunction& psi_u,
                                               const hsp::Wavefunction& psi_r,
                                               double visibility) {
  const int n = psi_u.grid.n_bins();
  std::vector<double> out(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double au_i = psi_u.amplitude[static_cast<std::size_t>(i)];
      const double au_j = psi_u.amplitude[static_cast<std::size_t>(j)];
      const double ar_i = psi_r.amplitude[static_cast<std::size_t>(i)];
      const double ar_j = psi_r.amplitude[static_cast<std::size_t>(j)];
      const double dphi = psi_u.phase[static_cast<std::size_t>(i)] -
                          psi_u.phase[static_cast<std::size_t>(j)];
      out[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
          static_cast<std::size_t>(j)] =
          0.25 * (au_i * au_i * ar_j * ar_j + ar_i * ar_i * au_j * au_j) -
          0.5 * visibility * au_i * au_j * ar_i * ar_j * std::cos(dphi);
    }
  }
  return out;
}

/// Random normalized wavefunction: positive amplitude with a floor (so
/// every bin is supported) and, unless flat, a smooth random cubic phase.
inline hsp::Wavefunction random_wavefunction(hsp::Rng& rng, const hsp::Grid& grid,
                                             bool flat_phase) {
  const auto n = static_cast<std::size_t>(grid.n_bins());
  std::vector<double> amp(n), phase(n, 0.0);
  for (auto& a : amp) a = 0.1 + rng.uniform01();
  if (!flat_phase) {
    const double c1 = (rng.uniform01() - 0.5) * 4.0;
    const double c2 = (rng.uniform01() - 0.5) * 6.0;
    const double c3 = (rng.uniform01() - 0.5) * 2.0;
    for (int i = 0; i < grid.n_bins(); ++i) {
      const double x = grid.center(i);
      phase[static_cast<std::size_t>(i)] = c1 * x + c2 * x * x + c3 * x * x * x;
    }
  }
  return hsp::make_wavefunction(grid, std::move(amp), std::move(phase));
}

}  // namespace test_oracles

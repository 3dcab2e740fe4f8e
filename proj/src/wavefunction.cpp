#include "hsp/wavefunction.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "hsp/errors.hpp"

namespace hsp {

double default_wave_number() {
  return 2.0 * std::numbers::pi / kWavelength800nmMm;
}

namespace {

void check_sizes(const Grid& grid, const std::vector<double>& amplitude,
                 const std::vector<double>& phase, const char* where) {
  const auto n = static_cast<std::size_t>(grid.n_bins());
  if (amplitude.size() != n || phase.size() != n) {
    std::ostringstream os;
    os << where << ": array length (" << amplitude.size() << "/" << phase.size()
       << ") does not match grid n_bins (" << n << ")";
    throw ConfigError(os.str());
  }
}

}  // namespace

Wavefunction make_wavefunction(Grid grid, std::vector<double> amplitude,
                               std::vector<double> phase) {
  check_sizes(grid, amplitude, phase, "make_wavefunction");
  for (double a : amplitude) {
    if (!(a >= 0.0)) throw ConfigError("make_wavefunction: amplitude must be nonnegative and finite");
  }
  return normalize(Wavefunction{std::move(grid), std::move(amplitude), std::move(phase)});
}

Wavefunction normalize(Wavefunction wf) {
  double total = 0.0;
  for (double a : wf.amplitude) total += a * a;
  total *= wf.grid.dx();
  if (!(total > 0.0)) throw NumericalError("normalize: wavefunction has zero norm");
  const double scale = 1.0 / std::sqrt(total);
  for (double& a : wf.amplitude) a *= scale;
  return wf;
}

Wavefunction gaussian_mode(const Grid& grid, double waist, double center) {
  if (!(waist > 0.0)) throw ConfigError("gaussian_mode: waist must be > 0");

  // Probability density |psi|^2 ~ exp(-2 (x-c)^2 / w^2); the mass inside
  // [x_min, x_max] is (erf(sqrt(2)(x_max-c)/w) - erf(sqrt(2)(x_min-c)/w)) / 2.
  const double s = std::numbers::sqrt2 / waist;
  const double inside = 0.5 * (std::erf(s * (grid.x_max() - center)) -
                               std::erf(s * (grid.x_min() - center)));
  const double clipped = 1.0 - inside;
  if (clipped > 1e-4) {
    std::ostringstream os;
    os << "gaussian_mode: mode (waist " << waist << " mm, center " << center
       << " mm) is clipped by the grid [" << grid.x_min() << ", " << grid.x_max()
       << "] mm; probability mass outside = " << clipped << " exceeds 1e-4";
    throw ConfigError(os.str());
  }

  const auto n = static_cast<std::size_t>(grid.n_bins());
  std::vector<double> amp(n);
  for (int i = 0; i < grid.n_bins(); ++i) {
    const double u = (grid.center(i) - center) / waist;
    amp[static_cast<std::size_t>(i)] = std::exp(-u * u);
  }
  return normalize(Wavefunction{grid, std::move(amp), std::vector<double>(n, 0.0)});
}

Wavefunction apply_quadratic_phase(Wavefunction wf, const QuadraticPhaseParams& params) {
  if (!(params.k > 0.0)) throw ConfigError("apply_quadratic_phase: k must be > 0");
  if (params.radius == 0.0) throw ConfigError("apply_quadratic_phase: R must be nonzero");
  const double c = params.k / (2.0 * params.radius);
  for (int i = 0; i < wf.grid.n_bins(); ++i) {
    const double x = wf.grid.center(i);
    wf.phase[static_cast<std::size_t>(i)] += c * x * x;
  }
  return wf;
}

Wavefunction apply_lens_double_pass(Wavefunction wf, double k, double focal_length) {
  if (focal_length == 0.0) throw ConfigError("apply_lens_double_pass: focal length must be nonzero");
  return apply_quadratic_phase(std::move(wf), QuadraticPhaseParams{k, -focal_length / 2.0});
}

Wavefunction apply_phase_profile(Wavefunction wf, const std::vector<double>& phase_values) {
  if (phase_values.size() != wf.phase.size()) {
    std::ostringstream os;
    os << "apply_phase_profile: profile length (" << phase_values.size()
       << ") does not match n_bins (" << wf.phase.size() << ")";
    throw ConfigError(os.str());
  }
  for (std::size_t i = 0; i < phase_values.size(); ++i) wf.phase[i] += phase_values[i];
  return wf;
}

std::complex<double> overlap(const Wavefunction& a, const Wavefunction& b) {
  if (!(a.grid == b.grid)) throw DataError("overlap: grid mismatch");
  std::complex<double> acc{0.0, 0.0};
  for (int i = 0; i < a.grid.n_bins(); ++i) {
    acc += std::conj(a.value(i)) * b.value(i);
  }
  return acc * a.grid.dx();
}

std::vector<bool> support_mask(const std::vector<double>& amplitude, double rel_threshold) {
  const double peak = amplitude.empty() ? 0.0 : *std::max_element(amplitude.begin(), amplitude.end());
  std::vector<bool> mask(amplitude.size(), false);
  const double cutoff = rel_threshold * peak;
  for (std::size_t i = 0; i < amplitude.size(); ++i) mask[i] = amplitude[i] >= cutoff && peak > 0.0;
  return mask;
}

}  // namespace hsp

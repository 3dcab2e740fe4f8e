#include "hsp/forward.hpp"

#include <cmath>
#include <sstream>

#include "hsp/errors.hpp"

namespace hsp {

namespace {

void require_same_grid(const Wavefunction& a, const Wavefunction& b, const char* where) {
  if (!(a.grid == b.grid)) {
    throw DataError(std::string(where) + ": grid mismatch");
  }
}

void require_flat_reference(const Wavefunction& psi_r, const char* where) {
  const auto mask = support_mask(psi_r.amplitude);
  double ref = 0.0;
  bool have_ref = false;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    if (!have_ref) {
      ref = psi_r.phase[i];
      have_ref = true;
    } else if (std::abs(psi_r.phase[i] - ref) > 1e-9) {
      throw DataError(std::string(where) +
                      ": reference photon must have a flat local phase on supported bins");
    }
  }
}

void require_visibility(double v, const char* where) {
  if (!(v >= 0.0 && v <= 1.0)) {
    std::ostringstream os;
    os << where << ": visibility (" << v << ") must lie in [0, 1]";
    throw ConfigError(os.str());
  }
}

}  // namespace

double JointDistribution::total() const {
  double s = 0.0;
  for (double v : p) s += v;
  return s * grid.dx() * grid.dx();
}

AmplitudeMatrix two_photon_amplitude(const Wavefunction& psi_u, const Wavefunction& psi_r) {
  require_same_grid(psi_u, psi_r, "two_photon_amplitude");
  const int n = psi_u.grid.n_bins();
  AmplitudeMatrix m{psi_u.grid, std::vector<std::complex<double>>(
                                    static_cast<std::size_t>(n) * static_cast<std::size_t>(n))};
  std::vector<std::complex<double>> u(static_cast<std::size_t>(n)), r(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    u[static_cast<std::size_t>(i)] = psi_u.value(i);
    r[static_cast<std::size_t>(i)] = psi_r.value(i);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto ui = u[static_cast<std::size_t>(i)];
      const auto uj = u[static_cast<std::size_t>(j)];
      const auto ri = r[static_cast<std::size_t>(i)];
      const auto rj = r[static_cast<std::size_t>(j)];
      m.values[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
               static_cast<std::size_t>(j)] = 0.5 * (ui * rj - ri * uj);
    }
  }
  return m;
}

JointDistribution hsp_distribution(const Wavefunction& psi_u, const Wavefunction& psi_r,
                                   double visibility) {
  require_same_grid(psi_u, psi_r, "hsp_distribution");
  require_visibility(visibility, "hsp_distribution");
  require_flat_reference(psi_r, "hsp_distribution");

  const int n = psi_u.grid.n_bins();
  const auto nn = static_cast<std::size_t>(n);
  JointDistribution jd{psi_u.grid, std::vector<double>(nn * nn, 0.0), visibility};

  const auto& au = psi_u.amplitude;
  const auto& ar = psi_r.amplitude;
  const auto& phi = psi_u.phase;

  // Entries are filled for i <= j and mirrored, which makes the symmetry
  // invariant bit-exact.
  for (int i = 0; i < n; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    for (int j = i; j < n; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      const double direct = 0.25 * (au[ii] * au[ii] * ar[jj] * ar[jj] +
                                    ar[ii] * ar[ii] * au[jj] * au[jj]);
      const double cross = 0.5 * visibility * au[ii] * au[jj] * ar[ii] * ar[jj] *
                           std::cos(phi[ii] - phi[jj]);
      double v = direct - cross;
      if (v < 0.0) {
        // The joint density is nonnegative for V <= 1 (arithmetic-geometric
        // mean bound); tolerate only rounding-level cancellation.
        if (v < -1e-14) {
          std::ostringstream os;
          os << "hsp_distribution: negative probability " << v << " at (" << i << ", " << j << ")";
          throw NumericalError(os.str());
        }
        v = 0.0;
      }
      jd.p[ii * nn + jj] = v;
      jd.p[jj * nn + ii] = v;
    }
  }
  return jd;
}

std::pair<std::vector<double>, std::vector<double>> marginals(const JointDistribution& jd) {
  const int n = jd.grid.n_bins();
  const auto nn = static_cast<std::size_t>(n);
  std::vector<double> rows(nn, 0.0), cols(nn, 0.0);
  for (std::size_t i = 0; i < nn; ++i) {
    for (std::size_t j = 0; j < nn; ++j) {
      rows[i] += jd.p[i * nn + j];
      cols[j] += jd.p[i * nn + j];
    }
  }
  const double dx = jd.grid.dx();
  for (std::size_t i = 0; i < nn; ++i) {
    rows[i] *= dx;
    cols[i] *= dx;
  }
  return {std::move(rows), std::move(cols)};
}

double coincidence_probability(const Wavefunction& psi_u, const Wavefunction& psi_r,
                               double visibility) {
  require_same_grid(psi_u, psi_r, "coincidence_probability");
  require_visibility(visibility, "coincidence_probability");
  require_flat_reference(psi_r, "coincidence_probability");
  const double o = std::norm(overlap(psi_r, psi_u));
  return 0.5 - 0.5 * visibility * o;
}

double hom_dip_visibility(const Wavefunction& psi_u, const Wavefunction& psi_r,
                          double visibility) {
  return 1.0 - coincidence_probability(psi_u, psi_r, visibility) / 0.5;
}

}  // namespace hsp

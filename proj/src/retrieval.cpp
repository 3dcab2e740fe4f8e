#include "hsp/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "hsp/errors.hpp"
#include "hsp/nelder_mead.hpp"
#include "hsp/polyfit.hpp"
#include "hsp/rng.hpp"

namespace hsp {

namespace {

constexpr double kHugeObjective = 1e300;

std::size_t sq(int n) { return static_cast<std::size_t>(n) * static_cast<std::size_t>(n); }

}  // namespace

JointDistribution empirical_distribution(const CoincidenceCounts& counts) {
  const std::int64_t total = counts.total();
  if (total <= 0) throw DataError("empirical_distribution: no counts");
  const double dx = counts.grid.dx();
  const double scale = 1.0 / (static_cast<double>(total) * dx * dx);
  JointDistribution jd{counts.grid, std::vector<double>(counts.counts.size()), std::nullopt};
  for (std::size_t i = 0; i < counts.counts.size(); ++i) {
    jd.p[i] = static_cast<double>(counts.counts[i]) * scale;
  }
  return jd;
}

std::vector<double> amplitude_estimate(const MarginalCounts& m) {
  const std::int64_t total = m.total();
  if (total <= 0) throw DataError("amplitude_estimate: no counts");
  const double scale = 1.0 / (static_cast<double>(total) * m.grid.dx());
  std::vector<double> amp(m.counts.size());
  for (std::size_t i = 0; i < m.counts.size(); ++i) {
    amp[i] = std::sqrt(static_cast<double>(m.counts[i]) * scale);
  }
  return amp;
}

PhaseRetrievalProblem::PhaseRetrievalProblem(const JointDistribution& p_meas,
                                             std::vector<double> amp_u, std::vector<double> amp_r,
                                             double support_threshold,
                                             const std::vector<bool>* mask_override)
    : grid_(p_meas.grid), amp_u_full_(std::move(amp_u)), amp_r_full_(std::move(amp_r)) {
  const int n = grid_.n_bins();
  const auto nn = static_cast<std::size_t>(n);
  if (amp_u_full_.size() != nn || amp_r_full_.size() != nn) {
    throw DataError("PhaseRetrievalProblem: amplitude length does not match the grid");
  }
  if (p_meas.p.size() != sq(n)) {
    throw DataError("PhaseRetrievalProblem: distribution size does not match the grid");
  }

  if (mask_override != nullptr) {
    if (mask_override->size() != nn) throw DataError("PhaseRetrievalProblem: mask size mismatch");
    mask_ = *mask_override;
  } else {
    const auto mu = support_mask(amp_u_full_, support_threshold);
    const auto mr = support_mask(amp_r_full_, support_threshold);
    mask_.resize(nn);
    for (std::size_t i = 0; i < nn; ++i) mask_[i] = mu[i] && mr[i];
  }
  for (int i = 0; i < n; ++i) {
    if (mask_[static_cast<std::size_t>(i)]) bins_.push_back(i);
  }
  const auto s = bins_.size();
  if (s < 2) throw DataError("PhaseRetrievalProblem: fewer than 2 supported bins");

  u_.resize(s);
  r_.resize(s);
  for (std::size_t a = 0; a < s; ++a) {
    u_[a] = amp_u_full_[static_cast<std::size_t>(bins_[a])];
    r_[a] = amp_r_full_[static_cast<std::size_t>(bins_[a])];
  }

  // Measured matrix restricted to the mask and renormalized to unit total.
  // The model is symmetric in (i, j), so only the symmetrized data enters
  // the misfit up to a phase-independent offset kept in asym_const_.
  meas_.resize(s * s);
  double meas_total = 0.0;
  for (std::size_t a = 0; a < s; ++a) {
    const auto ia = static_cast<std::size_t>(bins_[a]);
    for (std::size_t b = 0; b < s; ++b) {
      const auto ib = static_cast<std::size_t>(bins_[b]);
      meas_[a * s + b] = p_meas.p[ia * nn + ib];
      meas_total += meas_[a * s + b];
    }
  }
  if (!(meas_total > 0.0)) {
    throw DataError("PhaseRetrievalProblem: measured distribution is zero on the support");
  }
  for (auto& v : meas_) v /= meas_total;
  asym_const_ = 0.0;
  for (std::size_t a = 0; a < s; ++a) {
    for (std::size_t b = a + 1; b < s; ++b) {
      const double d = meas_[a * s + b] - meas_[b * s + a];
      asym_const_ += 0.5 * d * d;
      const double sym = 0.5 * (meas_[a * s + b] + meas_[b * s + a]);
      meas_[a * s + b] = sym;
      meas_[b * s + a] = sym;
    }
  }

  s_.resize(s * s);
  w0_.resize(s * s);
  for (std::size_t a = 0; a < s; ++a) {
    for (std::size_t b = 0; b < s; ++b) {
      s_[a * s + b] = 0.25 * (u_[a] * u_[a] * r_[b] * r_[b] + r_[a] * r_[a] * u_[b] * u_[b]);
      // Grouped as (u_a r_a)(u_b r_b) so the value is bit-identical under
      // a u <-> r relabeling.
      w0_[a * s + b] = 0.5 * (u_[a] * r_[a]) * (u_[b] * r_[b]);
    }
  }

}

double PhaseRetrievalProblem::objective_sq(const std::vector<double>& phase,
                                           double visibility) const {
  const std::size_t s = bins_.size();
  if (phase.size() != s) throw DataError("objective_sq: packed phase length mismatch");

  thread_local std::vector<double> model;
  model.resize(s * s);

  double total = 0.0;
  for (std::size_t a = 0; a < s; ++a) {
    model[a * s + a] = s_[a * s + a] - visibility * w0_[a * s + a];
    total += model[a * s + a];
    for (std::size_t b = a + 1; b < s; ++b) {
      const double c = std::cos(phase[a] - phase[b]);
      const double p = s_[a * s + b] - visibility * w0_[a * s + b] * c;
      model[a * s + b] = p;
      total += 2.0 * p;
    }
  }
  if (!(total > 1e-300)) return kHugeObjective;

  double f2 = asym_const_;
  const double inv = 1.0 / total;
  for (std::size_t a = 0; a < s; ++a) {
    const double dd = model[a * s + a] * inv - meas_[a * s + a];
    f2 += dd * dd;
    for (std::size_t b = a + 1; b < s; ++b) {
      const double d = model[a * s + b] * inv - meas_[a * s + b];
      f2 += 2.0 * d * d;
    }
  }
  return f2;
}

double PhaseRetrievalProblem::objective_packed(const std::vector<double>& phase,
                                               double visibility) const {
  return std::sqrt(objective_sq(phase, visibility));
}

void PhaseRetrievalProblem::gradient_sq(const std::vector<double>& phase, double visibility,
                                        std::vector<double>& grad_phase, double* grad_vis) const {
  const std::size_t s = bins_.size();
  if (phase.size() != s) throw DataError("gradient_sq: packed phase length mismatch");

  thread_local std::vector<double> q;
  q.resize(s * s);

  double total = 0.0;
  for (std::size_t a = 0; a < s; ++a) {
    for (std::size_t b = a; b < s; ++b) {
      const double c = (a == b) ? 1.0 : std::cos(phase[a] - phase[b]);
      const double p = s_[a * s + b] - visibility * w0_[a * s + b] * c;
      q[a * s + b] = p;
      q[b * s + a] = p;
      total += (a == b) ? p : 2.0 * p;
    }
  }
  if (!(total > 1e-300)) {
    throw NumericalError("gradient_sq: model distribution vanished");
  }
  const double inv = 1.0 / total;
  double cross = 0.0;  // sum (q - m) q over all entries
  for (std::size_t ab = 0; ab < s * s; ++ab) {
    q[ab] *= inv;
    cross += (q[ab] - meas_[ab]) * q[ab];
  }

  grad_phase.assign(s, 0.0);
  for (std::size_t a = 0; a < s; ++a) {
    double acc = 0.0;
    for (std::size_t b = 0; b < s; ++b) {
      if (b == a) continue;
      const double sn = std::sin(phase[a] - phase[b]);
      acc += w0_[a * s + b] * sn * (q[a * s + b] - meas_[a * s + b] - cross);
    }
    grad_phase[a] = 4.0 * visibility * inv * acc;
  }

  if (grad_vis != nullptr) {
    double acc = 0.0;
    for (std::size_t a = 0; a < s; ++a) {
      for (std::size_t b = 0; b < s; ++b) {
        const double c = (a == b) ? 1.0 : std::cos(phase[a] - phase[b]);
        acc += w0_[a * s + b] * c * (q[a * s + b] - meas_[a * s + b] - cross);
      }
    }
    *grad_vis = -2.0 * inv * acc;
  }
}

int PhaseRetrievalProblem::refine_sweep(std::vector<double>& phase, double visibility,
                                        const std::vector<double>* branch_anchor) const {
  const std::size_t s = bins_.size();
  if (phase.size() != s) throw DataError("refine_sweep: packed phase length mismatch");
  if (branch_anchor != nullptr && branch_anchor->size() != s) {
    throw DataError("refine_sweep: branch anchor length mismatch");
  }

  std::vector<double> cs(s), sn(s);
  for (std::size_t a = 0; a < s; ++a) {
    cs[a] = std::cos(phase[a]);
    sn[a] = std::sin(phase[a]);
  }

  // Maintained full-matrix sums (refreshed here, adjusted incrementally
  // per accepted move): T = sum p, P2 = sum p^2, PM = sum p*m.
  double total = 0.0, p2 = 0.0, pm = 0.0;
  for (std::size_t a = 0; a < s; ++a) {
    for (std::size_t b = 0; b < s; ++b) {
      const double c = cs[a] * cs[b] + sn[a] * sn[b];  // cos(phi_a - phi_b)
      const double p = s_[a * s + b] - visibility * w0_[a * s + b] * c;
      total += p;
      p2 += p * p;
      pm += p * meas_[a * s + b];
    }
  }

  int moved = 0;
  for (std::size_t k = 0; k < s; ++k) {
    // Row-k contributions (off-diagonal, counted for row and column).
    double row_t = 0.0, row_p2 = 0.0, row_pm = 0.0;
    for (std::size_t j = 0; j < s; ++j) {
      if (j == k) continue;
      const double c = cs[k] * cs[j] + sn[k] * sn[j];
      const double p = s_[k * s + j] - visibility * w0_[k * s + j] * c;
      row_t += p;
      row_p2 += p * p;
      row_pm += p * meas_[k * s + j];
    }
    const double t_rest = total - 2.0 * row_t;
    const double p2_rest = p2 - 2.0 * row_p2;
    const double pm_rest = pm - 2.0 * row_pm;

    // p_kj(theta) = s_kj - V w0_kj (cos(theta) c_j + sin(theta) s_j):
    // accumulate the trig-polynomial coefficients of T, sum p^2, sum p*m.
    double row_static = 0.0;             // T(theta) constant part
    double ac = 0.0, as = 0.0;           // T(theta) linear terms
    double b0 = 0.0, bc = 0.0, bs = 0.0; // sum p^2 terms
    double bcc = 0.0, bcs = 0.0, bss = 0.0;
    double d0 = 0.0, dc = 0.0, ds = 0.0; // sum p*m terms
    for (std::size_t j = 0; j < s; ++j) {
      if (j == k) continue;
      const double w = visibility * w0_[k * s + j];
      const double sv = s_[k * s + j];
      const double mv = meas_[k * s + j];
      const double wc = w * cs[j];
      const double ws = w * sn[j];
      row_static += sv;
      ac -= wc;
      as -= ws;
      b0 += sv * sv;
      bc -= 2.0 * sv * wc;
      bs -= 2.0 * sv * ws;
      bcc += wc * wc;
      bcs += 2.0 * wc * ws;
      bss += ws * ws;
      d0 += sv * mv;
      dc -= wc * mv;
      ds -= ws * mv;
    }

    const auto misfit = [&](double ct, double st) {
      const double t = t_rest + 2.0 * (row_static + ac * ct + as * st);
      if (!(t > 1e-300)) return kHugeObjective;
      const double sum_p2 =
          p2_rest + 2.0 * (b0 + bc * ct + bs * st + bcc * ct * ct + bcs * ct * st +
                           bss * st * st);
      const double sum_pm = pm_rest + 2.0 * (d0 + dc * ct + ds * st);
      return sum_p2 / (t * t) - 2.0 * sum_pm / t;
    };
    const auto misfit_at = [&](double theta) { return misfit(std::cos(theta), std::sin(theta)); };

    const double h_current = misfit(cs[k], sn[k]);

    // The 1D section is a ratio of trig polynomials of degree <= 2 over
    // degree 1, so a modest uniform scan brackets every minimum.
    const int n_scan = 128;
    double best_theta = phase[k];
    double best_h = h_current;
    for (int i = 0; i < n_scan; ++i) {
      const double theta =
          -std::numbers::pi + 2.0 * std::numbers::pi * (static_cast<double>(i) / n_scan);
      const double v = misfit_at(theta);
      if (v < best_h) {
        best_h = v;
        best_theta = theta;
      }
    }
    // Golden-section refinement around the best sample.
    {
      const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
      double lo = best_theta - 2.0 * std::numbers::pi / n_scan;
      double hi = best_theta + 2.0 * std::numbers::pi / n_scan;
      double x1 = hi - gr * (hi - lo);
      double x2 = lo + gr * (hi - lo);
      double f1 = misfit_at(x1);
      double f2 = misfit_at(x2);
      for (int it = 0; it < 60; ++it) {
        if (f1 < f2) {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - gr * (hi - lo);
          f1 = misfit_at(x1);
        } else {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + gr * (hi - lo);
          f2 = misfit_at(x2);
        }
      }
      const double mid = 0.5 * (lo + hi);
      const double fm = misfit_at(mid);
      if (fm < best_h) {
        best_h = fm;
        best_theta = mid;
      }
    }

    if (!(best_h < h_current)) continue;

    const double two_pi = 2.0 * std::numbers::pi;
    const double anchor = branch_anchor != nullptr ? (*branch_anchor)[k] : phase[k];
    const double branch = std::round((anchor - best_theta) / two_pi);
    const double updated = best_theta + two_pi * branch;

    const double new_c = std::cos(updated);
    const double new_s = std::sin(updated);
    double new_row_t = 0.0, new_row_p2 = 0.0, new_row_pm = 0.0;
    for (std::size_t j = 0; j < s; ++j) {
      if (j == k) continue;
      const double c = new_c * cs[j] + new_s * sn[j];
      const double p = s_[k * s + j] - visibility * w0_[k * s + j] * c;
      new_row_t += p;
      new_row_p2 += p * p;
      new_row_pm += p * meas_[k * s + j];
    }
    total += 2.0 * (new_row_t - row_t);
    p2 += 2.0 * (new_row_p2 - row_p2);
    pm += 2.0 * (new_row_pm - row_pm);
    phase[k] = updated;
    cs[k] = new_c;
    sn[k] = new_s;
    ++moved;
  }
  return moved;
}

std::vector<double> PhaseRetrievalProblem::pack(const std::vector<double>& full) const {
  if (full.size() != static_cast<std::size_t>(grid_.n_bins())) {
    throw DataError("pack: phase length does not match the grid");
  }
  std::vector<double> packed(bins_.size());
  for (std::size_t a = 0; a < bins_.size(); ++a) {
    packed[a] = full[static_cast<std::size_t>(bins_[a])];
  }
  return packed;
}

std::vector<double> PhaseRetrievalProblem::unpack(const std::vector<double>& packed) const {
  std::vector<double> full(static_cast<std::size_t>(grid_.n_bins()),
                           std::numeric_limits<double>::quiet_NaN());
  for (std::size_t a = 0; a < bins_.size(); ++a) {
    full[static_cast<std::size_t>(bins_[a])] = packed[a];
  }
  return full;
}

double objective(const JointDistribution& p_meas, const std::vector<double>& amp_u,
                 const std::vector<double>& amp_r, const std::vector<double>& phase,
                 double visibility, double support_threshold) {
  PhaseRetrievalProblem problem(p_meas, amp_u, amp_r, support_threshold);
  return problem.objective_packed(problem.pack(phase), visibility);
}

std::vector<std::array<double, 2>> effective_coeff_bounds(const RetrievalConfig& cfg,
                                                          const Grid& grid) {
  if (cfg.poly_degree < 2) throw ConfigError("retrieval: poly_degree must be >= 2");
  if (!cfg.coeff_bounds.empty()) {
    if (static_cast<int>(cfg.coeff_bounds.size()) != cfg.poly_degree) {
      throw ConfigError("retrieval: coeff_bounds must have one [lo, hi] entry per degree");
    }
    for (const auto& b : cfg.coeff_bounds) {
      if (!(b[0] < b[1])) throw ConfigError("retrieval: coeff_bounds entries need lo < hi");
    }
    return cfg.coeff_bounds;
  }
  const double k = cfg.auto_bounds_k > 0.0 ? cfg.auto_bounds_k : default_wave_number();
  if (!(cfg.auto_bounds_focal > 0.0)) {
    throw ConfigError("retrieval: auto_bounds_focal must be > 0");
  }
  const double extent = grid.extent();
  std::vector<std::array<double, 2>> bounds(static_cast<std::size_t>(cfg.poly_degree));
  for (int d = 1; d <= cfg.poly_degree; ++d) {
    double b;
    if (d == 2) {
      // 10x the curvature of a double pass through the nominal lens.
      b = 10.0 * k / cfg.auto_bounds_focal;
    } else {
      b = 2.0 * std::numbers::pi / std::pow(extent, d);
    }
    bounds[static_cast<std::size_t>(d - 1)] = {-b, b};
  }
  return bounds;
}

namespace {

void validate_visibility_bounds(const std::array<double, 2>& vb) {
  if (!(vb[0] >= 0.0 && vb[1] <= 1.0 && vb[0] <= vb[1])) {
    throw ConfigError("retrieval: visibility_bounds must satisfy 0 <= lo <= hi <= 1");
  }
}

}  // namespace

Stage1Result global_poly_search(const JointDistribution& p_meas, const std::vector<double>& amp_u,
                                const std::vector<double>& amp_r, const RetrievalConfig& cfg,
                                std::uint64_t seed) {
  validate_visibility_bounds(cfg.visibility_bounds);
  PhaseRetrievalProblem problem(p_meas, amp_u, amp_r, cfg.support_threshold);
  const auto bounds = effective_coeff_bounds(cfg, p_meas.grid);
  const int degree = cfg.poly_degree;
  const std::size_t dim = static_cast<std::size_t>(degree) + 1;  // coeffs + visibility

  // Powers of the supported bin centers, once.
  const std::size_t s = static_cast<std::size_t>(problem.n_supported());
  std::vector<double> powers(s * static_cast<std::size_t>(degree));
  for (std::size_t a = 0; a < s; ++a) {
    const double x = p_meas.grid.center(problem.supported_bins()[a]);
    double acc = 1.0;
    for (int d = 0; d < degree; ++d) {
      acc *= x;
      powers[a * static_cast<std::size_t>(degree) + static_cast<std::size_t>(d)] = acc;
    }
  }

  std::vector<double> lo(dim), hi(dim);
  for (int d = 0; d < degree; ++d) {
    lo[static_cast<std::size_t>(d)] = bounds[static_cast<std::size_t>(d)][0];
    hi[static_cast<std::size_t>(d)] = bounds[static_cast<std::size_t>(d)][1];
  }
  lo[dim - 1] = cfg.visibility_bounds[0];
  hi[dim - 1] = cfg.visibility_bounds[1];

  // Work in the unit box so the simplex geometry is scale-free.
  const auto to_actual = [&](const std::vector<double>& y) {
    std::vector<double> x(dim);
    for (std::size_t d = 0; d < dim; ++d) x[d] = lo[d] + y[d] * (hi[d] - lo[d]);
    return x;
  };
  const auto to_unit = [&](const std::vector<double>& x) {
    std::vector<double> y(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      const double range = hi[d] - lo[d];
      y[d] = range > 0.0 ? std::clamp((x[d] - lo[d]) / range, 0.0, 1.0) : 0.0;
    }
    return y;
  };

  std::vector<double> phase_buf(s);
  const auto eval_actual = [&](const std::vector<double>& x) {
    for (std::size_t a = 0; a < s; ++a) {
      double acc = 0.0;
      for (int d = 0; d < degree; ++d) {
        acc += x[static_cast<std::size_t>(d)] *
               powers[a * static_cast<std::size_t>(degree) + static_cast<std::size_t>(d)];
      }
      phase_buf[a] = acc;
    }
    return problem.objective_sq(phase_buf, x[dim - 1]);
  };
  const auto eval_unit = [&](const std::vector<double>& y) { return eval_actual(to_actual(y)); };

  // Deterministic coarse scan over the quadratic coefficient: the misfit
  // decorrelates quickly away from the true curvature, so uniform random
  // starts alone cannot reliably land in the global basin within the
  // wide default bounds.
  const int n_scan = 241;
  const int n_scan_vis = 5;
  std::vector<double> scan_best(static_cast<std::size_t>(n_scan));
  std::vector<double> scan_vis(static_cast<std::size_t>(n_scan));
  std::vector<double> trial(dim, 0.0);
  for (int i = 0; i < n_scan; ++i) {
    const double c2 = bounds[1][0] + (bounds[1][1] - bounds[1][0]) *
                                         (static_cast<double>(i) / (n_scan - 1));
    double best_v = kHugeObjective;
    double best_vis = 0.5 * (cfg.visibility_bounds[0] + cfg.visibility_bounds[1]);
    for (int j = 0; j < n_scan_vis; ++j) {
      const double vis = cfg.visibility_bounds[0] +
                         (cfg.visibility_bounds[1] - cfg.visibility_bounds[0]) *
                             (static_cast<double>(j) / (n_scan_vis - 1));
      std::fill(trial.begin(), trial.end(), 0.0);
      trial[1] = c2;
      trial[dim - 1] = vis;
      const double v = eval_actual(trial);
      if (v < best_v) {
        best_v = v;
        best_vis = vis;
      }
    }
    scan_best[static_cast<std::size_t>(i)] = best_v;
    scan_vis[static_cast<std::size_t>(i)] = best_vis;
  }

  // Local minima of the scan curve, best first.
  std::vector<int> minima;
  for (int i = 0; i < n_scan; ++i) {
    const double v = scan_best[static_cast<std::size_t>(i)];
    const bool left_ok = (i == 0) || v <= scan_best[static_cast<std::size_t>(i - 1)];
    const bool right_ok = (i == n_scan - 1) || v <= scan_best[static_cast<std::size_t>(i + 1)];
    if (left_ok && right_ok) minima.push_back(i);
  }
  std::stable_sort(minima.begin(), minima.end(), [&](int a, int b) {
    return scan_best[static_cast<std::size_t>(a)] < scan_best[static_cast<std::size_t>(b)];
  });

  const int n_starts = std::max(cfg.n_global_starts, 1);
  std::vector<std::vector<double>> starts;
  starts.reserve(static_cast<std::size_t>(n_starts));
  const int n_candidates = std::min({static_cast<int>(minima.size()), 4, n_starts});
  for (int c = 0; c < n_candidates; ++c) {
    const int i = minima[static_cast<std::size_t>(c)];
    std::fill(trial.begin(), trial.end(), 0.0);
    trial[1] = bounds[1][0] +
               (bounds[1][1] - bounds[1][0]) * (static_cast<double>(i) / (n_scan - 1));
    trial[dim - 1] = scan_vis[static_cast<std::size_t>(i)];
    starts.push_back(to_unit(trial));
  }
  Rng rng(seed);
  while (static_cast<int>(starts.size()) < n_starts) {
    std::vector<double> y(dim);
    for (auto& v : y) v = rng.uniform01();
    starts.push_back(std::move(y));
  }

  NelderMeadOptions nm;
  nm.max_evals = 420 * static_cast<int>(dim);
  nm.value_tol = 1e-14;
  nm.simplex_tol = 1e-13;
  nm.initial_step = 0.08;

  std::vector<double> lo01(dim, 0.0), hi01(dim, 1.0);
  std::vector<double> best_y;
  double best_value = std::numeric_limits<double>::infinity();
  for (const auto& y0 : starts) {
    const auto run = nelder_mead_minimize(eval_unit, y0, lo01, hi01, nm);
    if (run.value < best_value) {
      best_value = run.value;
      best_y = run.x;
    }
  }

  // One polishing run with a tight simplex around the incumbent.
  NelderMeadOptions polish = nm;
  polish.initial_step = 0.004;
  polish.max_evals = 3000;
  const auto run = nelder_mead_minimize(eval_unit, best_y, lo01, hi01, polish);
  if (run.value < best_value) {
    best_value = run.value;
    best_y = run.x;
  }

  const auto x = to_actual(best_y);
  Stage1Result result;
  result.coeffs.assign(x.begin(), x.end() - 1);
  result.visibility = x[dim - 1];
  result.objective = std::sqrt(best_value);
  return result;
}

RetrievalResult local_refine(const JointDistribution& p_meas, const std::vector<double>& amp_u,
                             const std::vector<double>& amp_r,
                             const std::vector<double>& phase_init, double visibility,
                             const RetrievalConfig& cfg, const std::vector<bool>* mask_override) {
  validate_visibility_bounds(cfg.visibility_bounds);
  PhaseRetrievalProblem problem(p_meas, amp_u, amp_r, cfg.support_threshold, mask_override);

  auto phase = problem.pack(phase_init);
  for (auto& v : phase) {
    if (!std::isfinite(v)) v = 0.0;
  }
  double vis = std::clamp(visibility, cfg.visibility_bounds[0], cfg.visibility_bounds[1]);

  double f2 = problem.objective_sq(phase, vis);
  if (!std::isfinite(f2) || f2 >= kHugeObjective) {
    throw NumericalError("local_refine: non-finite objective at the starting point");
  }

  RetrievalResult result;
  result.grid = problem.grid();
  result.support_mask = problem.mask();
  result.amp_u = amp_u;
  result.amp_r = amp_r;
  result.objective_trace.push_back(std::sqrt(f2));

  const bool co_vis = cfg.co_optimize_visibility;
  const std::vector<double> branch_anchor = phase;
  std::vector<double> previous(phase.size());

  for (int sweep = 0; sweep < cfg.max_iters; ++sweep) {
    previous = phase;
    const double vis_prev = vis;

    const int moved = problem.refine_sweep(phase, vis, &branch_anchor);

    if (co_vis) {
      // Golden-section line search over the visibility box.
      const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
      double lo = cfg.visibility_bounds[0], hi = cfg.visibility_bounds[1];
      if (hi - lo > 1e-12) {
        double x1 = hi - gr * (hi - lo);
        double x2 = lo + gr * (hi - lo);
        double f1 = problem.objective_sq(phase, x1);
        double fx2 = problem.objective_sq(phase, x2);
        for (int it = 0; it < 50; ++it) {
          if (f1 < fx2) {
            hi = x2;
            x2 = x1;
            fx2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = problem.objective_sq(phase, x1);
          } else {
            lo = x1;
            x1 = x2;
            f1 = fx2;
            x2 = lo + gr * (hi - lo);
            fx2 = problem.objective_sq(phase, x2);
          }
        }
        const double candidate = 0.5 * (lo + hi);
        if (problem.objective_sq(phase, candidate) < problem.objective_sq(phase, vis)) {
          vis = candidate;
        }
      }
    }

    // Sweep acceptance is decided on the directly evaluated objective so
    // the recorded trace is non-increasing by construction.
    const double f2_new = problem.objective_sq(phase, vis);
    if (!std::isfinite(f2_new) || !(f2_new < f2)) {
      phase = previous;
      vis = vis_prev;
      break;
    }
    const double decrease = std::sqrt(f2) - std::sqrt(f2_new);
    f2 = f2_new;
    result.objective_trace.push_back(std::sqrt(f2));
    if (moved == 0 || decrease < cfg.local_tol) break;
  }

  result.phase = problem.unpack(phase);
  result.visibility_est = vis;
  result.objective = std::sqrt(f2);
  return result;
}

std::pair<std::vector<double>, GaugeRecord> gauge_fix(const std::vector<double>& phase,
                                                      const std::vector<double>& amp_u,
                                                      const Grid& grid,
                                                      double support_threshold) {
  const auto n = static_cast<std::size_t>(grid.n_bins());
  if (phase.size() != n || amp_u.size() != n) {
    throw DataError("gauge_fix: array length does not match the grid");
  }
  const auto mask = support_mask(amp_u, support_threshold);

  double wsum = 0.0, wphi = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i] || !std::isfinite(phase[i])) continue;
    const double w = amp_u[i] * amp_u[i];
    wsum += w;
    wphi += w * phase[i];
  }

  GaugeRecord record;
  std::vector<double> out = phase;
  if (!(wsum > 0.0)) {
    record.convexity_fit_ok = false;
    return {std::move(out), record};
  }

  record.offset = wphi / wsum;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isfinite(out[i])) out[i] -= record.offset;
  }

  // Convexity gauge: flip if the weighted quadratic fit curves downward.
  std::vector<double> xs, ys, ws;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i] || !std::isfinite(out[i])) continue;
    xs.push_back(grid.center(static_cast<int>(i)));
    ys.push_back(out[i]);
    ws.push_back(amp_u[i] * amp_u[i]);
  }
  bool flipped = false;
  if (xs.size() >= 3) {
    try {
      const auto fit = polyfit_weighted(xs, ys, ws, 2);
      if (fit.coeffs[2] < 0.0) flipped = true;
    } catch (const NumericalError&) {
      record.convexity_fit_ok = false;
    }
  } else {
    record.convexity_fit_ok = false;
  }
  if (flipped) {
    record.sign = -1;
    for (auto& v : out) {
      if (std::isfinite(v)) v = -v;
    }
  }
  return {std::move(out), record};
}

RetrievalResult retrieve_phase_from_distribution(const JointDistribution& p_meas,
                                                 const std::vector<double>& amp_u,
                                                 const std::vector<double>& amp_r,
                                                 const RetrievalConfig& cfg, std::uint64_t seed) {
  const auto stage1 = global_poly_search(p_meas, amp_u, amp_r, cfg, seed);

  std::vector<double> phase_init(static_cast<std::size_t>(p_meas.grid.n_bins()), 0.0);
  for (int i = 0; i < p_meas.grid.n_bins(); ++i) {
    const double x = p_meas.grid.center(i);
    double acc = 0.0;
    double xp = 1.0;
    for (const double c : stage1.coeffs) {
      xp *= x;
      acc += c * xp;
    }
    phase_init[static_cast<std::size_t>(i)] = acc;
  }

  auto result = local_refine(p_meas, amp_u, amp_r, phase_init, stage1.visibility, cfg);
  result.poly_coeffs_stage1 = stage1.coeffs;
  result.stage1_objective = stage1.objective;

  auto [gauged, record] = gauge_fix(result.phase, result.amp_u, result.grid,
                                    cfg.support_threshold);
  result.phase = std::move(gauged);
  result.gauge = record;
  return result;
}

RetrievalResult retrieve_phase(const CoincidenceCounts& counts, const MarginalCounts& m_u,
                               const MarginalCounts& m_r, const RetrievalConfig& cfg,
                               std::uint64_t seed) {
  if (!(counts.grid == m_u.grid) || !(counts.grid == m_r.grid)) {
    throw DataError("retrieve_phase: count datasets live on different grids");
  }
  const auto jd = empirical_distribution(counts);
  const auto amp_u = amplitude_estimate(m_u);
  const auto amp_r = amplitude_estimate(m_r);
  return retrieve_phase_from_distribution(jd, amp_u, amp_r, cfg, seed);
}

RadiusFit fit_radius(const std::vector<double>& phase, const std::vector<double>& amp_weights,
                     const Grid& grid, double k, double support_threshold) {
  if (!(k > 0.0)) throw ConfigError("fit_radius: k must be > 0");
  const auto n = static_cast<std::size_t>(grid.n_bins());
  if (phase.size() != n || amp_weights.size() != n) {
    throw DataError("fit_radius: array length does not match the grid");
  }
  const auto mask = support_mask(amp_weights, support_threshold);
  std::vector<double> xs, ys, ws;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i] || !std::isfinite(phase[i])) continue;
    xs.push_back(grid.center(static_cast<int>(i)));
    ys.push_back(phase[i]);
    ws.push_back(amp_weights[i] * amp_weights[i]);
  }
  if (xs.size() < 3) throw DataError("fit_radius: needs at least 3 supported bins");

  const auto fit = polyfit_weighted(xs, ys, ws, 2);
  const double a = fit.coeffs[2];
  if (std::abs(a) < 1e-12) {
    throw NumericalError("fit_radius: no measurable curvature in the phase profile");
  }
  RadiusFit out;
  out.quad_coeff = a;
  out.quad_std_error = fit.std_error[2];
  out.radius = k / (2.0 * a);
  out.std_error = std::abs(k / (2.0 * a * a)) * fit.std_error[2];
  return out;
}

JointDistribution reconstruct_hsp(const Grid& grid, const std::vector<double>& amp_u,
                                  const std::vector<double>& amp_r,
                                  const std::vector<double>& phase, double visibility) {
  std::vector<double> clean(phase.size());
  for (std::size_t i = 0; i < phase.size(); ++i) {
    clean[i] = std::isfinite(phase[i]) ? phase[i] : 0.0;
  }
  const auto psi_u = make_wavefunction(grid, amp_u, std::move(clean));
  const auto psi_r = make_wavefunction(
      grid, amp_r, std::vector<double>(static_cast<std::size_t>(grid.n_bins()), 0.0));
  return hsp_distribution(psi_u, psi_r, visibility);
}

}  // namespace hsp

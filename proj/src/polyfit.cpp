#include "hsp/polyfit.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "hsp/errors.hpp"

namespace hsp {

PolyFit polyfit_weighted(const std::vector<double>& x, const std::vector<double>& y,
                         const std::vector<double>& w, int degree) {
  if (degree < 0) throw ConfigError("polyfit_weighted: degree must be >= 0");
  if (x.size() != y.size() || x.size() != w.size()) {
    throw ConfigError("polyfit_weighted: x, y, w must have equal length");
  }
  const int p = degree + 1;

  int n_used = 0;
  for (double wi : w) {
    if (wi < 0.0) throw ConfigError("polyfit_weighted: negative weight");
    if (wi > 0.0) ++n_used;
  }
  if (n_used < p) throw NumericalError("polyfit_weighted: not enough weighted points");

  // Normal equations A^T W A c = A^T W y with the Vandermonde design matrix.
  Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd aty = Eigen::VectorXd::Zero(p);
  std::vector<double> pows(static_cast<std::size_t>(p));
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (w[i] == 0.0) continue;
    pows[0] = 1.0;
    for (int d = 1; d < p; ++d) pows[static_cast<std::size_t>(d)] = pows[static_cast<std::size_t>(d - 1)] * x[i];
    for (int a = 0; a < p; ++a) {
      aty(a) += w[i] * pows[static_cast<std::size_t>(a)] * y[i];
      for (int b = a; b < p; ++b) {
        ata(a, b) += w[i] * pows[static_cast<std::size_t>(a)] * pows[static_cast<std::size_t>(b)];
      }
    }
  }
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < a; ++b) ata(a, b) = ata(b, a);

  Eigen::LDLT<Eigen::MatrixXd> ldlt(ata);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw NumericalError("polyfit_weighted: singular normal equations");
  }
  // A rank-deficient but consistent system still passes LDLT; the pivot
  // spread exposes it.
  const auto d = ldlt.vectorD();
  const double d_max = d.maxCoeff();
  const double d_min = d.minCoeff();
  if (!(d_min > 0.0) || d_min < 1e-12 * d_max) {
    throw NumericalError("polyfit_weighted: singular normal equations");
  }
  Eigen::VectorXd c = ldlt.solve(aty);
  Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(p, p));

  const double rel_resid = (ata * c - aty).norm() / (aty.norm() + 1e-300);
  if (!std::isfinite(rel_resid) || rel_resid > 1e-6) {
    throw NumericalError("polyfit_weighted: ill-conditioned normal equations");
  }

  PolyFit fit;
  fit.n_points = n_used;
  fit.coeffs.assign(c.data(), c.data() + p);

  double ssr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (w[i] == 0.0) continue;
    const double r = y[i] - polyval(fit.coeffs, x[i]);
    ssr += w[i] * r * r;
  }
  fit.weighted_ssr = ssr;

  // Relative weights: scale covariance by the reduced chi-square.
  const double s2 = (n_used > p) ? ssr / static_cast<double>(n_used - p) : 0.0;
  fit.covariance.resize(static_cast<std::size_t>(p) * static_cast<std::size_t>(p));
  fit.std_error.resize(static_cast<std::size_t>(p));
  for (int a = 0; a < p; ++a) {
    for (int b = 0; b < p; ++b) {
      fit.covariance[static_cast<std::size_t>(a * p + b)] = s2 * inv(a, b);
    }
    fit.std_error[static_cast<std::size_t>(a)] = std::sqrt(std::max(0.0, s2 * inv(a, a)));
  }
  return fit;
}

double polyval(const std::vector<double>& coeffs, double x) {
  double acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
  return acc;
}

}  // namespace hsp

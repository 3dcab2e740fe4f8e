#pragma once

#include <vector>

namespace hsp {

/// Weighted least-squares polynomial fit y ~ c0 + c1 x + ... + cD x^D.
struct PolyFit {
  std::vector<double> coeffs;      // c0..cD
  std::vector<double> std_error;   // per-coefficient standard error
  std::vector<double> covariance;  // (D+1)x(D+1), row-major
  double weighted_ssr = 0.0;
  int n_points = 0;
};

/// Minimizes sum_i w_i (y_i - poly(x_i))^2. Weights are relative, so the
/// covariance is scaled by the reduced chi-square; for an exact fit the
/// standard errors are zero. Points with zero weight are ignored.
/// Throws NumericalError when the normal equations are singular (fewer
/// distinct weighted points than coefficients).
PolyFit polyfit_weighted(const std::vector<double>& x, const std::vector<double>& y,
                         const std::vector<double>& w, int degree);

/// Evaluates c0 + c1 x + ... at one point.
double polyval(const std::vector<double>& coeffs, double x);

}  // namespace hsp

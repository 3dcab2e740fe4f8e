#pragma once

#include <functional>
#include <vector>

namespace hsp {

struct NelderMeadOptions {
  int max_evals = 2000;
  double value_tol = 1e-13;    // relative spread of simplex values
  double simplex_tol = 1e-12;  // simplex diameter
  double initial_step = 0.1;   // per-coordinate offset of the start simplex
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int evals = 0;
};

/// Deterministic bounded Nelder-Mead simplex minimization. Points are
/// clamped into [lower, upper] before evaluation; non-finite objective
/// values are treated as +infinity. Contains no internal randomness, so
/// the result is a pure function of (f, x0, bounds, options).
NelderMeadResult nelder_mead_minimize(const std::function<double(const std::vector<double>&)>& f,
                                      const std::vector<double>& x0,
                                      const std::vector<double>& lower,
                                      const std::vector<double>& upper,
                                      const NelderMeadOptions& options = {});

}  // namespace hsp

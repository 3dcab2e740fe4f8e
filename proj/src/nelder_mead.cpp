#include "hsp/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hsp/errors.hpp"

namespace hsp {

namespace {

using Point = std::vector<double>;

void clamp_into(Point& x, const Point& lo, const Point& hi) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
}

double diameter(const std::vector<Point>& simplex) {
  double best = 0.0;
  for (std::size_t i = 0; i < simplex.size(); ++i) {
    for (std::size_t j = i + 1; j < simplex.size(); ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < simplex[i].size(); ++k) {
        const double d = simplex[i][k] - simplex[j][k];
        d2 += d * d;
      }
      best = std::max(best, std::sqrt(d2));
    }
  }
  return best;
}

}  // namespace

NelderMeadResult nelder_mead_minimize(const std::function<double(const std::vector<double>&)>& f,
                                      const std::vector<double>& x0,
                                      const std::vector<double>& lower,
                                      const std::vector<double>& upper,
                                      const NelderMeadOptions& options) {
  const std::size_t dim = x0.size();
  if (dim == 0) throw ConfigError("nelder_mead_minimize: empty start point");
  if (lower.size() != dim || upper.size() != dim) {
    throw ConfigError("nelder_mead_minimize: bounds dimension mismatch");
  }

  int evals = 0;
  auto eval = [&](Point& x) {
    clamp_into(x, lower, upper);
    ++evals;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::max();
  };

  // Standard (non-adaptive) coefficients.
  const double rho = 1.0, chi = 2.0, gamma = 0.5, sigma = 0.5;

  std::vector<Point> simplex(dim + 1, x0);
  std::vector<double> values(dim + 1);
  clamp_into(simplex[0], lower, upper);
  for (std::size_t i = 0; i < dim; ++i) {
    double step = options.initial_step * std::max(1.0, std::abs(x0[i]));
    Point p = simplex[0];
    p[i] += step;
    clamp_into(p, lower, upper);
    if (p[i] == simplex[0][i]) {
      p[i] = simplex[0][i] - step;
      clamp_into(p, lower, upper);
    }
    simplex[i + 1] = p;
  }
  for (std::size_t i = 0; i <= dim; ++i) values[i] = eval(simplex[i]);

  std::vector<std::size_t> order(dim + 1);
  const auto sort_order = [&] {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  };

  while (evals < options.max_evals) {
    sort_order();
    const std::size_t best = order[0];
    const std::size_t worst = order[dim];
    const std::size_t second_worst = order[dim - 1];

    const double spread = (values[worst] - values[best]) / (1.0 + std::abs(values[best]));
    if (spread < options.value_tol && diameter(simplex) < options.simplex_tol) break;

    Point centroid(dim, 0.0);
    for (std::size_t i = 0; i <= dim; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < dim; ++k) centroid[k] += simplex[i][k];
    }
    for (double& c : centroid) c /= static_cast<double>(dim);

    Point reflected(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      reflected[k] = centroid[k] + rho * (centroid[k] - simplex[worst][k]);
    }
    const double f_reflect = eval(reflected);

    if (f_reflect < values[best]) {
      Point expanded(dim);
      for (std::size_t k = 0; k < dim; ++k) {
        expanded[k] = centroid[k] + chi * (reflected[k] - centroid[k]);
      }
      const double f_expand = eval(expanded);
      if (f_expand < f_reflect) {
        simplex[worst] = std::move(expanded);
        values[worst] = f_expand;
      } else {
        simplex[worst] = std::move(reflected);
        values[worst] = f_reflect;
      }
    } else if (f_reflect < values[second_worst]) {
      simplex[worst] = std::move(reflected);
      values[worst] = f_reflect;
    } else {
      Point contracted(dim);
      bool shrink = false;
      if (f_reflect < values[worst]) {
        for (std::size_t k = 0; k < dim; ++k) {
          contracted[k] = centroid[k] + gamma * (reflected[k] - centroid[k]);
        }
        const double f_contract = eval(contracted);
        if (f_contract <= f_reflect) {
          simplex[worst] = std::move(contracted);
          values[worst] = f_contract;
        } else {
          shrink = true;
        }
      } else {
        for (std::size_t k = 0; k < dim; ++k) {
          contracted[k] = centroid[k] - gamma * (centroid[k] - simplex[worst][k]);
        }
        const double f_contract = eval(contracted);
        if (f_contract < values[worst]) {
          simplex[worst] = std::move(contracted);
          values[worst] = f_contract;
        } else {
          shrink = true;
        }
      }
      if (shrink) {
        for (std::size_t i = 0; i <= dim; ++i) {
          if (i == best) continue;
          for (std::size_t k = 0; k < dim; ++k) {
            simplex[i][k] = simplex[best][k] + sigma * (simplex[i][k] - simplex[best][k]);
          }
          values[i] = eval(simplex[i]);
        }
      }
    }
  }

  sort_order();
  NelderMeadResult result;
  result.x = simplex[order[0]];
  result.value = values[order[0]];
  result.evals = evals;
  return result;
}

}  // namespace hsp

#include <doctest.h>

#include <cmath>

#include "hsp/errors.hpp"
#include "hsp/nelder_mead.hpp"
#include "hsp/polyfit.hpp"
#include "hsp/rng.hpp"

using namespace hsp;

TEST_CASE("polyfit recovers an exact quadratic with zero standard errors") {
  std::vector<double> x, y, w;
  for (int i = 0; i < 11; ++i) {
    const double xi = -1.0 + 0.2 * i;
    x.push_back(xi);
    y.push_back(3.0 - 0.5 * xi + 2.25 * xi * xi);
    w.push_back(1.0 + 0.1 * i);
  }
  const auto fit = polyfit_weighted(x, y, w, 2);
  CHECK(fit.coeffs[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(fit.coeffs[1] == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(fit.coeffs[2] == doctest::Approx(2.25).epsilon(1e-12));
  for (double se : fit.std_error) CHECK(se < 1e-9);
  CHECK(fit.weighted_ssr < 1e-20);
}

TEST_CASE("polyfit weights select the matching subset") {
  // Two inconsistent point clouds; zero weight silences the second.
  std::vector<double> x{0.0, 1.0, 2.0, 3.0, 0.5, 1.5};
  std::vector<double> y{1.0, 3.0, 5.0, 7.0, 100.0, -40.0};
  std::vector<double> w{1.0, 1.0, 1.0, 1.0, 0.0, 0.0};
  const auto fit = polyfit_weighted(x, y, w, 1);
  CHECK(fit.coeffs[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.coeffs[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.n_points == 4);
}

TEST_CASE("polyfit noisy linear fit has sane covariance") {
  Rng rng(77);
  std::vector<double> x, y, w;
  for (int i = 0; i < 200; ++i) {
    const double xi = -1.0 + 0.01 * i;
    x.push_back(xi);
    y.push_back(2.0 + 5.0 * xi + 0.1 * (rng.uniform01() - 0.5));
    w.push_back(1.0);
  }
  const auto fit = polyfit_weighted(x, y, w, 1);
  CHECK(fit.coeffs[0] == doctest::Approx(2.0).epsilon(0.02));
  CHECK(fit.coeffs[1] == doctest::Approx(5.0).epsilon(0.02));
  CHECK(fit.std_error[0] > 0.0);
  CHECK(fit.std_error[1] > 0.0);
  CHECK(fit.std_error[1] < 0.05);
  // Covariance diagonal must match the reported standard errors.
  CHECK(std::sqrt(fit.covariance[0]) == doctest::Approx(fit.std_error[0]).epsilon(1e-12));
  CHECK(std::sqrt(fit.covariance[3]) == doctest::Approx(fit.std_error[1]).epsilon(1e-12));
}

TEST_CASE("polyfit degenerate inputs") {
  CHECK_THROWS_AS(polyfit_weighted({1.0}, {1.0}, {1.0}, 2), NumericalError);
  // All weight on a single abscissa: singular for degree 2.
  std::vector<double> x{1.0, 1.0, 1.0, 1.0};
  std::vector<double> y{2.0, 2.1, 1.9, 2.0};
  std::vector<double> w{1.0, 1.0, 1.0, 1.0};
  CHECK_THROWS_AS(polyfit_weighted(x, y, w, 2), NumericalError);
  CHECK_THROWS_AS(polyfit_weighted({1.0, 2.0}, {1.0}, {1.0, 1.0}, 1), ConfigError);
  CHECK_THROWS_AS(polyfit_weighted({1.0, 2.0}, {1.0, 2.0}, {1.0, -1.0}, 1), ConfigError);
}

TEST_CASE("polyval") {
  CHECK(polyval({1.0, 2.0, 3.0}, 2.0) == doctest::Approx(17.0).epsilon(1e-15));
  CHECK(polyval({}, 5.0) == 0.0);
}

TEST_CASE("nelder_mead finds a quadratic minimum inside the box") {
  const auto f = [](const std::vector<double>& v) {
    return (v[0] - 2.0) * (v[0] - 2.0) + (v[1] + 1.0) * (v[1] + 1.0);
  };
  NelderMeadOptions opts;
  opts.max_evals = 2000;
  const auto res = nelder_mead_minimize(f, {0.0, 0.0}, {-5.0, -5.0}, {5.0, 5.0}, opts);
  CHECK(std::abs(res.x[0] - 2.0) < 1e-6);
  CHECK(std::abs(res.x[1] + 1.0) < 1e-6);
  CHECK(res.value < 1e-10);
}

TEST_CASE("nelder_mead clamps to bounds when the minimum lies outside") {
  const auto f = [](const std::vector<double>& v) { return (v[0] - 10.0) * (v[0] - 10.0); };
  const auto res = nelder_mead_minimize(f, {0.0}, {-1.0}, {1.0}, {});
  CHECK(res.x[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("nelder_mead is deterministic") {
  const auto f = [](const std::vector<double>& v) {
    const double a = v[1] - v[0] * v[0];
    return 100.0 * a * a + (1.0 - v[0]) * (1.0 - v[0]);
  };
  NelderMeadOptions opts;
  opts.max_evals = 4000;
  const auto a = nelder_mead_minimize(f, {-1.2, 1.0}, {-5.0, -5.0}, {5.0, 5.0}, opts);
  const auto b = nelder_mead_minimize(f, {-1.2, 1.0}, {-5.0, -5.0}, {5.0, 5.0}, opts);
  CHECK(a.x[0] == b.x[0]);
  CHECK(a.x[1] == b.x[1]);
  CHECK(a.evals == b.evals);
  // Rosenbrock valley: close to (1, 1) with a tight value.
  CHECK(a.value < 1e-6);
  CHECK(std::abs(a.x[0] - 1.0) < 1e-2);
}

TEST_CASE("nelder_mead treats non-finite values as rejected") {
  const auto f = [](const std::vector<double>& v) {
    if (v[0] < 0.0) return std::nan("");
    return (v[0] - 0.5) * (v[0] - 0.5);
  };
  const auto res = nelder_mead_minimize(f, {0.9}, {-10.0}, {10.0}, {});
  CHECK(std::abs(res.x[0] - 0.5) < 1e-6);
}

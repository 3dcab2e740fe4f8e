#include "hsp/grid.hpp"

#include <sstream>

#include "hsp/errors.hpp"

namespace hsp {

Grid::Grid(double x_min, double x_max, int n_bins)
    : x_min_(x_min), x_max_(x_max), n_bins_(n_bins),
      dx_((x_max - x_min) / n_bins) {}

std::vector<double> Grid::centers() const {
  std::vector<double> xs(static_cast<std::size_t>(n_bins_));
  for (int i = 0; i < n_bins_; ++i) xs[static_cast<std::size_t>(i)] = center(i);
  return xs;
}

Grid make_grid(double x_min, double x_max, int n_bins) {
  if (!(x_min < x_max)) {
    std::ostringstream os;
    os << "make_grid: x_min (" << x_min << ") must be < x_max (" << x_max << ")";
    throw ConfigError(os.str());
  }
  if (n_bins < 2) {
    std::ostringstream os;
    os << "make_grid: n_bins (" << n_bins << ") must be >= 2";
    throw ConfigError(os.str());
  }
  return Grid(x_min, x_max, n_bins);
}

}  // namespace hsp

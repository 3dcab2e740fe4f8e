#pragma once

#include <cstddef>
#include <vector>

namespace hsp {

/// Uniform 1D spatial axis on which all wavefunctions and joint
/// distributions live. Lengths are in millimetres. Bin centers are
/// x_i = x_min + (i + 1/2) * dx with dx = (x_max - x_min) / n_bins.
class Grid {
public:
  Grid() = default;
  Grid(double x_min, double x_max, int n_bins);

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  int n_bins() const { return n_bins_; }
  double dx() const { return dx_; }
  double extent() const { return x_max_ - x_min_; }

  double center(int i) const { return x_min_ + (i + 0.5) * dx_; }
  std::vector<double> centers() const;

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.x_min_ == b.x_min_ && a.x_max_ == b.x_max_ && a.n_bins_ == b.n_bins_;
  }

private:
  double x_min_ = 0.0;
  double x_max_ = 1.0;
  int n_bins_ = 2;
  double dx_ = 0.5;
};

/// Constructs a grid, rejecting inverted bounds and n_bins < 2.
Grid make_grid(double x_min, double x_max, int n_bins);

}  // namespace hsp

#include "gfcond/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gfcond/errors.hpp"

namespace gfcond {

int Grid::find(double t, double atol) const {
  for (int i = 0; i < size(); ++i) {
    if (std::abs(points[i] - t) <= atol) return i;
  }
  return -1;
}

bool SubsetMask::contains(int grid_index) const {
  return std::binary_search(indices.begin(), indices.end(), grid_index);
}

Grid build_grid(double t_min, double t_max, int n) {
  if (!(t_min < t_max)) {
    fail("invalid-range", "build_grid: t_min must be strictly below t_max");
  }
  if (n < 2) {
    fail("invalid-count", "build_grid: need at least 2 points, got " + std::to_string(n));
  }
  Grid g;
  g.points.resize(n);
  const double span = t_max - t_min;
  for (int i = 0; i < n; ++i) {
    g.points[i] = t_min + span * (static_cast<double>(i) / (n - 1));
  }
  g.points.back() = t_max;  // exact endpoint
  return g;
}

SubsetMask mask_from_intervals(const Grid& grid,
                               const std::vector<std::pair<double, double>>& intervals) {
  if (intervals.empty()) {
    fail("empty-subset", "mask_from_intervals: no intervals given");
  }
  for (const auto& [lo, hi] : intervals) {
    if (lo > hi) {
      fail("invalid-interval", "mask_from_intervals: interval with lo > hi");
    }
  }
  SubsetMask mask;
  mask.parent_size = grid.size();
  for (int i = 0; i < grid.size(); ++i) {
    const double t = grid.points[i];
    for (const auto& [lo, hi] : intervals) {
      if (t >= lo && t <= hi) {
        mask.indices.push_back(i);
        break;
      }
    }
  }
  if (mask.indices.empty()) {
    fail("empty-subset", "mask_from_intervals: no grid point falls in the given intervals");
  }
  return mask;
}

std::vector<int> complement_indices(const SubsetMask& mask) {
  std::vector<int> out;
  out.reserve(mask.parent_size - mask.size());
  for (int i = 0; i < mask.parent_size; ++i) {
    if (!mask.contains(i)) out.push_back(i);
  }
  return out;
}

Eigen::VectorXd restrict_to(const Eigen::VectorXd& x, const SubsetMask& mask) {
  if (x.size() != mask.parent_size) {
    fail("length-mismatch", "restrict_to: vector length " + std::to_string(x.size()) +
                                " does not match parent size " + std::to_string(mask.parent_size));
  }
  Eigen::VectorXd y(mask.size());
  for (int k = 0; k < mask.size(); ++k) y[k] = x[mask.indices[k]];
  return y;
}

}  // namespace gfcond

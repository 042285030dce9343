#pragma once

#include <Eigen/Dense>
#include <vector>

namespace gfcond {

// Discretized compact parameter set T: an ordered list of points.
struct Grid {
  std::vector<double> points;

  int size() const { return static_cast<int>(points.size()); }
  double t_min() const { return points.front(); }
  double t_max() const { return points.back(); }

  // Index of the grid node equal to t (within atol); -1 if none.
  int find(double t, double atol = 1e-12) const;
};

// Closed observation subset S, stored as sorted grid indices.
struct SubsetMask {
  std::vector<int> indices;
  int parent_size = 0;

  int size() const { return static_cast<int>(indices.size()); }
  bool contains(int grid_index) const;
};

// n equally spaced points on [t_min, t_max], both endpoints included.
Grid build_grid(double t_min, double t_max, int n);

// Indices of grid points in the union of the closed intervals [lo, hi].
SubsetMask mask_from_intervals(const Grid& grid,
                               const std::vector<std::pair<double, double>>& intervals);

// Grid indices not in the mask, sorted.
std::vector<int> complement_indices(const SubsetMask& mask);

// The restriction map eta: coordinate selection of the masked entries.
Eigen::VectorXd restrict_to(const Eigen::VectorXd& x, const SubsetMask& mask);

// eta as above, wrapped as a value type.
struct Restriction {
  SubsetMask mask;

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return restrict_to(x, mask); }
};

}  // namespace gfcond

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gfcond/grid.hpp"

namespace gfcond {

// Covariance function selector. Parameters that do not apply to the chosen
// variant are ignored.
struct KernelSpec {
  enum class Kind {
    Brownian,            // c(t,s) = min(t,s), t,s >= 0
    OrnsteinUhlenbeck,   // c(t,s) = exp(-|t-s| / length_scale)
    SquaredExponential,  // c(t,s) = exp(-(t-s)^2 / (2 length_scale^2))
    RankOne,             // c(t,s) = f(t) f(s) with a named profile f
    Constant,            // c(t,s) = level
    Bumps,               // sum of scaled two-peak bump outer products (see bumps_kernel)
    CustomMatrix,        // explicit matrix, validated before use
  };

  Kind kind = Kind::Brownian;
  double length_scale = 1.0;      // OrnsteinUhlenbeck, SquaredExponential
  std::string profile = "linear"; // RankOne
  double level = 1.0;             // Constant
  int n_bumps = 1;                // Bumps
  double height_ratio = 2.0;      // Bumps, > 1
  double decay = 0.5;             // Bumps, in (0,1)
  Eigen::MatrixXd custom;         // CustomMatrix

  static KernelSpec brownian();
  static KernelSpec ornstein_uhlenbeck(double length_scale);
  static KernelSpec squared_exponential(double length_scale);
  static KernelSpec rank_one(std::string profile);
  static KernelSpec constant(double level);
  static KernelSpec bumps(int n_bumps, double height_ratio, double decay = 0.5);
  static KernelSpec custom_matrix(Eigen::MatrixXd entries);

  // Shift invariance of c implies the sup-ratio criterion equals 1.
  bool stationary() const;
};

// Evaluate the named rank-one profile at t. Known ids: "linear", "quadratic",
// "cosine". Unknown ids raise invalid-profile.
double rank_one_profile(const std::string& id, double t);

// Assembled covariance matrix C[i,j] = c(t_i, t_j) on a grid.
struct CovarianceMatrix {
  Eigen::MatrixXd entries;
  double psd_tolerance = 1e-10;  // relative to the largest eigenvalue

  int size() const { return static_cast<int>(entries.rows()); }
};

struct KernelValidation {
  double min_eigenvalue = 0.0;
  double lambda_max = 0.0;
  double schwarz_violation = 0.0;  // max over (i,j) of C[i,j]^2 - C[i,i] C[j,j]
  double max_asymmetry = 0.0;
  bool psd_ok = false;
  bool schwarz_ok = false;
  bool symmetric_ok = false;

  bool pass() const { return psd_ok && schwarz_ok && symmetric_ok; }
};

// C[i,j] = c(t_i, t_j). Bumps need the mask; use the three-argument overload.
CovarianceMatrix assemble(const KernelSpec& spec, const Grid& grid);
CovarianceMatrix assemble(const KernelSpec& spec, const Grid& grid, const SubsetMask& mask);

// PSD / Schwarz / symmetry report; never throws.
KernelValidation validate(const CovarianceMatrix& C);

// Node placement for the bumps kernel: n peaks inside S, n outside, all
// separated by at least two grid steps so the piecewise-linear tents around
// them have disjoint supports.
struct BumpsLayout {
  std::vector<int> inside_peaks;   // s_1..s_n, in S
  std::vector<int> outside_peaks;  // t_1..t_n, outside S
};

BumpsLayout bumps_layout(const Grid& grid, const SubsetMask& mask, int n_bumps);

// C = sum_n decay^n u_n u_n^T where u_n is the two-peak bump with height
// height_ratio^-n at a node inside S and height 1 at a node outside S.
// The resulting sup-ratio criterion equals height_ratio^n_bumps.
CovarianceMatrix bumps_kernel(int n_bumps, double height_ratio, double decay,
                              const Grid& grid, const SubsetMask& mask);

}  // namespace gfcond

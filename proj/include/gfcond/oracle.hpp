#pragma once

#include <Eigen/Dense>
#include <string>

#include "gfcond/grid.hpp"
#include "gfcond/kernels.hpp"

namespace gfcond {

// Brute-force reference results for validating the conditioning core on small
// instances. Nothing here shares factorization code with the core: solves go
// through a hand-written pivoted Cholesky, and the operator norm through
// explicit polytope-vertex enumeration.

struct OracleResult {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  std::string method_tag;
};

// Classical finite-dimensional Gaussian conditioning: mean C_TS solve(C_SS, y)
// and covariance C - C_TS solve(C_SS, C_ST), with minimum-norm solves through
// a pivoted square-root (Cholesky) factorization. Instances above 64 points
// raise oracle-scale-exceeded.
OracleResult schur_condition(const CovarianceMatrix& C, const SubsetMask& mask,
                             const Eigen::VectorXd& y);

// Exact sup of ||C_TS e||_inf / ||C_SS e||_inf for full-rank C_SS with
// |S| <= 3, by enumerating the vertices e = C_SS^{-1} sigma of the polytope
// ||C_SS e||_inf <= 1. Raises oracle-scale-exceeded / singular-denominator.
double exhaustive_m_opnorm(const CovarianceMatrix& C, const SubsetMask& mask);

// Numerical rank of a symmetric PSD matrix by pivoted Cholesky; used as a
// rank computation independent of the core's spectral cutoff.
int pivoted_cholesky_rank(const Eigen::MatrixXd& sym, double rel_tol = 1e-12);

}  // namespace gfcond

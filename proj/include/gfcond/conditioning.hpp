#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "gfcond/grid.hpp"
#include "gfcond/kernels.hpp"

namespace gfcond {

// Conditioning a mean-zero Gaussian field on its values over a subset S works
// entirely through the covariance matrix C and the index mask of S. Two
// coordinate systems appear below:
//
//   * grid coordinates: vectors over T (length n) and over S (length |S|);
//   * factor coordinates: the rank-r eigenbasis of C = Phi Lambda Phi^T, in
//     which the field is iota z with iota = Phi sqrt(Lambda) and z standard
//     normal. Restricting iota to the S rows gives the subset basis
//     B = iota^T restricted, whose column span is the subspace generated by
//     the observation functionals.
//
// The conditional mean map is the spectral pseudo-inverse C_TS C_SS^+, the
// conditional covariance is iota (I - pi) iota^T with pi the orthogonal
// projector onto span(B). Both quantities have a second, independent route
// (projector route for the mean, Schur form for the covariance); the two
// routes must agree and the code checks that they do.

// Sup-ratio continuity criterion and operator-norm bounds for the conditional
// mean. Fields mirror the JSON report emitted by the CLI.
struct MRatioReport {
  double m_delta = 0.0;              // max_s sup_t |C(s,t)| / sup_{s'} |C(s,s')|
  int m_delta_witness = -1;          // grid index in S attaining the max (smallest wins)
  double m_opnorm_lower = 0.0;       // certified search lower bound for the operator norm
  std::optional<double> m_opnorm_rowsum;  // max abs row sum of the mean map
  std::vector<int> skipped_rows;     // S rows with degenerate denominator
};

// Truncated eigendecomposition C ~ Phi Lambda Phi^T plus the projector onto
// the observation subspace in factor coordinates.
struct HilbertFactor {
  Eigen::MatrixXd eigenvectors;   // n x r, orthonormal columns, eigenvalues descending
  Eigen::VectorXd eigenvalues;    // r, positive, descending
  int rank = 0;                   // r
  Eigen::MatrixXd projection_hy;  // r x r symmetric idempotent
  Eigen::MatrixXd subset_basis;   // B: r x |S|, columns sqrt(Lambda) Phi^T e_s
  double cutoff = 0.0;            // relative eigenvalue cutoff used

  // iota: factor coordinates -> field values (n x r)
  Eigen::MatrixXd path_factor() const {
    return eigenvectors * eigenvalues.cwiseSqrt().asDiagonal();
  }
};

// Gaussian conditional law of the field given its values on S.
struct ConditionalLaw {
  Eigen::MatrixXd mean_map;    // |T| x |S|
  Eigen::VectorXd mean;        // mean_map * y_projected
  Eigen::MatrixXd cond_cov;    // |T| x |T|, PSD, independent of y
  Eigen::VectorXd y_projected; // projection of y onto the observable subspace
  double projection_residual = 0.0;  // ||y - y_projected||_inf
  MRatioReport m_report;

  SubsetMask mask;             // kept for samplers and verification
  Eigen::MatrixXd cov_factor;  // A with A A^T = cond_cov, |T| x r
};

struct IdentityCheck {
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

// The five operator identities checked on a conditional law:
//   a: cond_cov below C in the PSD order
//   b: mean_map C_SS mean_map^T = C_TS mean_map^T
//   c: rows of cond_cov at S vanish
//   d: the mean interpolates the projected observation on S
//   e: ||mean||_inf bounded by the mean-map norm times ||y_projected||_inf
struct IdentityReport {
  IdentityCheck a_cov_dominated;
  IdentityCheck b_mean_consistency;
  IdentityCheck c_kernel_rows_vanish;
  IdentityCheck d_interpolation;
  IdentityCheck e_bounded_extension;
  double m_bound_used = 0.0;

  bool all_pass() const {
    return a_cov_dominated.pass && b_mean_consistency.pass && c_kernel_rows_vanish.pass &&
           d_interpolation.pass && e_bounded_extension.pass;
  }
};

struct ConditionOptions {
  double cutoff = 1e-10;   // relative spectral cutoff for pseudo-inverses
  double tol = 1e-8;       // identity / projection tolerance
  double degenerate_tol = 1e-12;  // row-degeneracy threshold for m_delta
  int search_budget = 200;        // random candidates in the operator-norm search
  std::uint64_t seed = 0x9066c01dULL;
};

// --- criterion -------------------------------------------------------------

// Sup-ratio criterion over the delta functionals. Rows s whose denominator
// falls below tol * max|C| are recorded in skipped_rows; by the Schwarz bound
// their numerator must be degenerate too, otherwise inconsistent-kernel.
// Throws all-rows-degenerate when no row survives.
MRatioReport compute_m_delta(const CovarianceMatrix& C, const SubsetMask& mask,
                             double tol = 1e-12);

// Search lower bound for the operator norm of the inverse restriction, over
// signed deltas, random sign vectors, polytope-vertex seeds, and exact
// coordinate-ascent line searches. Also reports the max abs row sum of the
// mean map, which is the exact inf-operator norm of the mean map matrix (and
// of the conditional mean operator itself when C_SS has full rank).
MRatioReport compute_m_opnorm(const CovarianceMatrix& C, const SubsetMask& mask,
                              int search_budget = 200, std::uint64_t seed = 0x9066c01dULL,
                              double tol = 1e-12);

// --- factorization and conditional law --------------------------------------

// Eigendecomposition with relative cutoff, subset basis B, and the projector
// onto span(B). Throws factorization-failure if the eigensolver does not
// converge and validation-failed if C does not validate.
HilbertFactor factorize(const CovarianceMatrix& C, const SubsetMask& mask,
                        double cutoff = 1e-10);

// Spectral route: C_TS C_SS^+ with the same relative cutoff policy.
Eigen::MatrixXd mean_map_spectral(const CovarianceMatrix& C, const SubsetMask& mask,
                                  double cutoff = 1e-10);

// Projector route: iota pi pinv(B^T), the factor-coordinate construction.
Eigen::MatrixXd mean_map_factor_route(const HilbertFactor& factor);

// Computes both routes, checks they agree within tol (relative to the scale
// of C), and returns the spectral one. Throws route-mismatch otherwise.
Eigen::MatrixXd conditional_mean_map(const HilbertFactor& factor, const CovarianceMatrix& C,
                                     const SubsetMask& mask, double tol = 1e-8);

// Schur form C - mean_map C_ST, the subtraction route.
Eigen::MatrixXd conditional_cov_schur_route(const CovarianceMatrix& C, const SubsetMask& mask,
                                            const Eigen::MatrixXd& mean_map);

// Factor route iota (I - pi) iota^T, cross-checked against the Schur form
// within tol. Returns the factor-route matrix (exactly PSD by construction).
Eigen::MatrixXd conditional_cov(const HilbertFactor& factor, const CovarianceMatrix& C,
                                const SubsetMask& mask, double tol = 1e-8);

// Full conditioning pipeline: validate, factorize, project y onto the
// observable subspace, build mean and covariance. Throws y-not-in-Y0 when the
// projection residual exceeds tol * ||y||_inf.
ConditionalLaw condition(const CovarianceMatrix& C, const SubsetMask& mask,
                         const Eigen::VectorXd& y, const ConditionOptions& opts = {});

// Runs identity checks (a)-(e) on a computed law.
IdentityReport verify_identities(const ConditionalLaw& law, const CovarianceMatrix& C,
                                 const SubsetMask& mask, double tol = 1e-8);

// --- helpers shared with the oracle/tests -----------------------------------

// Projection of y onto the column space of C_SS under the relative cutoff.
Eigen::VectorXd project_onto_observable(const CovarianceMatrix& C, const SubsetMask& mask,
                                        const Eigen::VectorXd& y, double cutoff = 1e-10);

// Rank of C_SS under the relative spectral cutoff.
int observable_rank(const CovarianceMatrix& C, const SubsetMask& mask, double cutoff = 1e-10);

}  // namespace gfcond

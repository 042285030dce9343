#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gfcond/conditioning.hpp"
#include "gfcond/grid.hpp"
#include "gfcond/kernels.hpp"

namespace gfcond {

// Sampling and statistical verification. Every sampler draws path i from its
// own (seed, i) stream, so batches are reproducible bit for bit regardless of
// generation order.

struct SampleBatch {
  Eigen::MatrixXd paths;  // n x |T|, one path per row
  std::uint64_t seed = 0;
  std::string law_tag;    // "prior" or "conditional(<y-hash>)"

  int count() const { return static_cast<int>(paths.rows()); }
};

struct StatReport {
  std::string name;
  double estimate = 0.0;
  double reference = 0.0;
  double stderr_est = 0.0;
  double z_score = 0.0;
  bool pass = false;
};

struct PathFunctional {
  std::string name;
  std::function<double(const Eigen::VectorXd&)> fn;
};

PathFunctional constant_functional(double value);
PathFunctional coordinate_functional(int grid_index);
PathFunctional squared_coordinate_functional(int grid_index);
PathFunctional tanh_linear_functional(Eigen::VectorXd weights);
PathFunctional supnorm_clipped_functional(double cap);

// Mean-zero prior samples iota z. Every path lies in the range of C.
SampleBatch sample_prior(const HilbertFactor& factor, int n, std::uint64_t seed);

// Conditional samples mean + A z with A the stored covariance factor. Every
// path restricts to y_projected on S within 1e-6 (checked per path).
SampleBatch sample_conditional(const ConditionalLaw& law, int n, std::uint64_t seed);

// Two-sided Monte Carlo check of the disintegration equation: the direct
// prior estimate of E[f] against the nested estimate (outer draws of the
// restricted observation, inner conditional draws).
std::vector<StatReport> check_disintegration(const CovarianceMatrix& C, const SubsetMask& mask,
                                             const std::vector<PathFunctional>& functionals,
                                             int n_outer, int n_inner, std::uint64_t seed);

struct ContinuityReport {
  std::vector<double> scales;
  std::vector<double> ratios;  // ||mean(y_eps) - mean(y)||_inf / (eps ||d||_inf)
  double bound = 0.0;          // mean-map norm + tol
  bool cov_identical = false;  // conditional covariance byte-identical across scales
  bool pass = false;
};

// Perturbs y along a random direction inside the observable subspace and
// verifies the Lipschitz bound on the conditional mean at every scale, plus
// that the conditional covariance does not move at all.
ContinuityReport check_weak_continuity(const CovarianceMatrix& C, const SubsetMask& mask,
                                       const Eigen::VectorXd& y_target,
                                       const std::vector<double>& perturbation_scales,
                                       std::uint64_t seed, double tol = 1e-8);

// Rejection sampler oracle for the conditional mean: keeps prior paths that
// match y on a small probe sub-mask within delta and compares the empirical
// mean at the evaluation points against the core's conditional mean for the
// probe sub-problem. The acceptance window introduces an O(delta) bias, so
// the pass criterion is |empirical - reference| <= 3 stderr + delta
// (z_score reports the excess beyond the allowance in stderr units).
std::vector<StatReport> rejection_oracle(const CovarianceMatrix& C, const SubsetMask& mask,
                                         const Eigen::VectorXd& y, double delta,
                                         const std::vector<int>& probe_indices,
                                         const std::vector<int>& eval_indices, int n,
                                         std::uint64_t seed);

struct DivergenceRow {
  int n_bumps = 0;
  double m_delta = 0.0;
  double y_norm = 0.0;     // ||y_N||_inf = 1/N
  double mean_norm = 0.0;  // ||mean(y_N)||_inf
};

// Growth of the criterion along the bumps kernel family: for each N the
// normalized observation y_N shrinks like 1/N while the conditional mean it
// produces stays bounded away from zero.
std::vector<DivergenceRow> divergence_demo(double height_ratio,
                                           const std::vector<int>& n_bumps_range,
                                           const Grid& grid, const SubsetMask& mask,
                                           std::uint64_t seed);

}  // namespace gfcond

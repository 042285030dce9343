#include "gfcond/conditioning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "gfcond/errors.hpp"
#include "gfcond/rng.hpp"

namespace gfcond {

namespace {

Eigen::MatrixXd block_ss(const Eigen::MatrixXd& C, const SubsetMask& mask) {
  const int m = mask.size();
  Eigen::MatrixXd out(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) out(a, b) = C(mask.indices[a], mask.indices[b]);
  return out;
}

Eigen::MatrixXd block_ts(const Eigen::MatrixXd& C, const SubsetMask& mask) {
  const int n = static_cast<int>(C.rows());
  const int m = mask.size();
  Eigen::MatrixXd out(n, m);
  for (int b = 0; b < m; ++b) out.col(b) = C.col(mask.indices[b]);
  return out;
}

void check_shapes(const CovarianceMatrix& C, const SubsetMask& mask) {
  if (C.entries.rows() != C.entries.cols()) {
    fail("size-mismatch", "covariance matrix is not square");
  }
  if (mask.parent_size != C.size()) {
    fail("size-mismatch", "mask parent size does not match covariance size");
  }
  if (mask.size() == 0) fail("empty-subset", "mask has no indices");
}

void require_validated(const CovarianceMatrix& C) {
  const KernelValidation v = validate(C);
  if (!v.pass()) {
    fail("validation-failed",
         "covariance failed validation (min eigenvalue " + std::to_string(v.min_eigenvalue) +
             ", schwarz violation " + std::to_string(v.schwarz_violation) + ")");
  }
}

// Eigendecomposition of a symmetric PSD block with a relative cutoff.
struct SpectralDecomp {
  Eigen::MatrixXd vectors;  // m x k, kept eigenvectors
  Eigen::VectorXd values;   // k, descending
  int rank = 0;

  Eigen::MatrixXd pinv() const {
    if (rank == 0) {
      return Eigen::MatrixXd::Zero(vectors.rows(), vectors.rows());
    }
    return vectors * values.cwiseInverse().asDiagonal() * vectors.transpose();
  }

  Eigen::MatrixXd range_projector() const {
    if (rank == 0) {
      return Eigen::MatrixXd::Zero(vectors.rows(), vectors.rows());
    }
    return vectors * vectors.transpose();
  }
};

SpectralDecomp spectral_decomp(const Eigen::MatrixXd& sym, double cutoff) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (sym + sym.transpose()));
  if (es.info() != Eigen::Success) {
    fail("factorization-failure", "symmetric eigendecomposition did not converge");
  }
  const Eigen::VectorXd& vals = es.eigenvalues();  // ascending
  const int m = static_cast<int>(vals.size());
  const double lambda_max = m > 0 ? std::max(0.0, vals(m - 1)) : 0.0;
  const double threshold = cutoff * lambda_max;

  int k = 0;
  for (int i = 0; i < m; ++i) {
    if (vals(i) > threshold && vals(i) > 0.0) ++k;
  }
  SpectralDecomp d;
  d.rank = k;
  d.vectors.resize(m, k);
  d.values.resize(k);
  for (int j = 0; j < k; ++j) {
    const int src = m - 1 - j;  // descending order
    d.values(j) = vals(src);
    d.vectors.col(j) = es.eigenvectors().col(src);
  }
  return d;
}

double max_abs_row_sum(const Eigen::MatrixXd& M) {
  if (M.rows() == 0 || M.cols() == 0) return 0.0;
  return M.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace

MRatioReport compute_m_delta(const CovarianceMatrix& C, const SubsetMask& mask, double tol) {
  check_shapes(C, mask);
  const Eigen::MatrixXd& M = C.entries;
  const double max_abs = M.cwiseAbs().maxCoeff();
  const double max_diag = M.diagonal().maxCoeff();
  const double threshold = tol * max_abs;
  // A degenerate row must also have a degenerate numerator: Schwarz gives
  // |C(s,t)| <= sqrt(C(s,s) max_diag) and C(s,s) is below the row threshold.
  const double consistency_bound = 2.0 * std::sqrt(std::max(0.0, threshold * max_diag)) +
                                   4.0 * threshold;

  MRatioReport report;
  bool any = false;
  for (int a = 0; a < mask.size(); ++a) {
    const int s = mask.indices[a];
    double num = 0.0;
    for (int t = 0; t < C.size(); ++t) num = std::max(num, std::abs(M(s, t)));
    double den = 0.0;
    for (int b = 0; b < mask.size(); ++b) den = std::max(den, std::abs(M(s, mask.indices[b])));

    if (den <= threshold) {
      if (num > consistency_bound) {
        fail("inconsistent-kernel",
             "row " + std::to_string(s) + " has degenerate denominator but numerator " +
                 std::to_string(num));
      }
      report.skipped_rows.push_back(s);
      continue;
    }
    const double ratio = num / den;
    if (!any || ratio > report.m_delta) {
      report.m_delta = ratio;
      report.m_delta_witness = s;
      any = true;
    }
  }
  if (!any) {
    fail("all-rows-degenerate", "every row of the subset block is degenerate");
  }
  return report;
}

namespace {

// State for the operator-norm ratio search. e lives over S; the objective is
// ||C_TS e||_inf / ||C_SS e||_inf restricted to e with e^T C_SS e above a
// relative threshold (the discrete form of the nondegeneracy restriction).
struct RatioSearch {
  const Eigen::MatrixXd& cts;
  const Eigen::MatrixXd& css;
  double quad_threshold;  // compared against e^T C_SS e / ||e||^2

  double eval(const Eigen::VectorXd& e) const {
    const double nrm2 = e.squaredNorm();
    if (!(nrm2 > 0.0)) return -1.0;
    const Eigen::VectorXd w = css * e;
    const double quad = e.dot(w);
    if (quad <= quad_threshold * nrm2) return -1.0;
    const double den = w.cwiseAbs().maxCoeff();
    if (den <= 0.0) return -1.0;
    const double num = (cts * e).cwiseAbs().maxCoeff();
    return num / den;
  }

  // Exact 1-D maximization over coordinate j. On every segment where the
  // active denominator line is fixed, the ratio is a max of quasiconvex
  // functions of the coordinate, so the segment maximum sits at a breakpoint
  // of the denominator envelope. Candidate breakpoints: pairwise crossings
  // |p| = |q| of denominator lines and their zeros.
  double line_search(Eigen::VectorXd& e, int j, double current_best,
                     SplitMix64& rng, int max_candidates) const {
    const int m = static_cast<int>(css.rows());
    const Eigen::VectorXd c = css * e - e[j] * css.col(j);  // denominator offsets
    const Eigen::VectorXd d = css.col(j);                   // denominator slopes

    std::vector<double> alphas;
    alphas.push_back(e[j]);
    auto push_root = [&alphas](double num, double den) {
      if (std::abs(den) > 1e-300) alphas.push_back(-num / den);
    };
    for (int k = 0; k < m; ++k) {
      push_root(c[k], d[k]);
      for (int l = k + 1; l < m; ++l) {
        push_root(c[k] - c[l], d[k] - d[l]);
        push_root(c[k] + c[l], d[k] + d[l]);
      }
    }
    if (static_cast<int>(alphas.size()) > max_candidates) {
      // keep a random subset plus the current point
      for (int i = 1; i < max_candidates; ++i) {
        const std::size_t pick = 1 + rng.next() % (alphas.size() - 1);
        std::swap(alphas[i], alphas[pick]);
      }
      alphas.resize(max_candidates);
    }

    double best = current_best;
    double best_alpha = e[j];
    Eigen::VectorXd trial = e;
    for (double alpha : alphas) {
      if (!std::isfinite(alpha)) continue;
      trial[j] = alpha;
      const double r = eval(trial);
      if (r > best) {
        best = r;
        best_alpha = alpha;
      }
    }
    e[j] = best_alpha;
    return best;
  }
};

}  // namespace

MRatioReport compute_m_opnorm(const CovarianceMatrix& C, const SubsetMask& mask,
                              int search_budget, std::uint64_t seed, double tol) {
  MRatioReport report = compute_m_delta(C, mask, tol);

  const Eigen::MatrixXd css = block_ss(C.entries, mask);
  const Eigen::MatrixXd cts = block_ts(C.entries, mask);
  const int m = mask.size();

  const SpectralDecomp ss = spectral_decomp(css, 1e-10);
  const double lambda_max_ss = ss.rank > 0 ? ss.values(0) : 0.0;
  RatioSearch search{cts, css, 1e-12 * lambda_max_ss};

  double best = 0.0;
  Eigen::VectorXd best_e = Eigen::VectorXd::Zero(m);

  auto consider = [&](const Eigen::VectorXd& e) {
    const double r = search.eval(e);
    if (r > best) {
      best = r;
      best_e = e;
    }
  };

  // signed coordinate vectors reproduce the delta ratios
  for (int a = 0; a < m; ++a) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
    e[a] = 1.0;
    consider(e);
    e[a] = -1.0;
    consider(e);
  }

  SplitMix64 rng(GaussianStream::mix(seed, 0xa11ce));
  for (int trial = 0; trial < search_budget; ++trial) {
    Eigen::VectorXd e(m);
    for (int a = 0; a < m; ++a) e[a] = (rng.next() & 1) ? 1.0 : -1.0;
    consider(e);
  }

  // Vertex seeds: for full-rank C_SS the sup is attained at a vertex
  // e = C_SS^{-1} sigma of the polytope ||C_SS e||_inf <= 1.
  if (ss.rank == m && m > 0) {
    const Eigen::MatrixXd inv = ss.pinv();
    const long long total = (m < 62) ? (1LL << m) : std::numeric_limits<long long>::max();
    const long long budget = std::max<long long>(64, 2LL * search_budget);
    if (total <= budget) {
      for (long long bits = 0; bits < total; ++bits) {
        Eigen::VectorXd sigma(m);
        for (int a = 0; a < m; ++a) sigma[a] = (bits >> a) & 1 ? 1.0 : -1.0;
        consider(inv * sigma);
      }
    } else {
      for (long long trial = 0; trial < budget; ++trial) {
        Eigen::VectorXd sigma(m);
        for (int a = 0; a < m; ++a) sigma[a] = (rng.next() & 1) ? 1.0 : -1.0;
        consider(inv * sigma);
      }
    }
  }

  // coordinate ascent from the incumbent
  if (best > 0.0) {
    Eigen::VectorXd e = best_e;
    double current = best;
    const int max_sweeps = 6;
    const int max_candidates = 256;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
      const double before = current;
      for (int j = 0; j < m; ++j) {
        current = search.line_search(e, j, current, rng, max_candidates);
      }
      if (current <= before * (1.0 + 1e-13)) break;
    }
    best = std::max(best, current);
  }

  report.m_opnorm_lower = std::max(best, report.m_delta);

  // Max abs row sum of the mean map: the exact inf-operator norm of the mean
  // map matrix. It upper-bounds every feasible ratio, and equals the norm of
  // the conditional mean operator when C_SS has full rank.
  const Eigen::MatrixXd mean_map = cts * ss.pinv();
  report.m_opnorm_rowsum = max_abs_row_sum(mean_map);
  return report;
}

HilbertFactor factorize(const CovarianceMatrix& C, const SubsetMask& mask, double cutoff) {
  check_shapes(C, mask);
  require_validated(C);

  const SpectralDecomp full = spectral_decomp(C.entries, cutoff);
  HilbertFactor factor;
  factor.eigenvectors = full.vectors;
  factor.eigenvalues = full.values;
  factor.rank = full.rank;
  factor.cutoff = cutoff;

  // subset basis B: columns sqrt(Lambda) Phi^T e_s for s in S
  const int r = factor.rank;
  const int m = mask.size();
  factor.subset_basis.resize(r, m);
  const Eigen::VectorXd sqrt_vals = factor.eigenvalues.cwiseSqrt();
  for (int b = 0; b < m; ++b) {
    factor.subset_basis.col(b) =
        sqrt_vals.cwiseProduct(factor.eigenvectors.row(mask.indices[b]).transpose());
  }

  // projector onto span(B), with the singular-value threshold matched to the
  // eigenvalue cutoff policy (sigma^2 > cutoff * sigma_max^2)
  if (r == 0 || m == 0) {
    factor.projection_hy = Eigen::MatrixXd::Zero(r, r);
    return factor;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(factor.subset_basis, Eigen::ComputeThinU);
  const double sigma_max = svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
  const double sigma_cut = std::sqrt(cutoff) * sigma_max;
  int k = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i) {
    if (svd.singularValues()(i) > sigma_cut && svd.singularValues()(i) > 0.0) ++k;
  }
  const Eigen::MatrixXd uk = svd.matrixU().leftCols(k);
  factor.projection_hy = uk * uk.transpose();
  return factor;
}

Eigen::MatrixXd mean_map_spectral(const CovarianceMatrix& C, const SubsetMask& mask,
                                  double cutoff) {
  check_shapes(C, mask);
  const Eigen::MatrixXd css = block_ss(C.entries, mask);
  const Eigen::MatrixXd cts = block_ts(C.entries, mask);
  return cts * spectral_decomp(css, cutoff).pinv();
}

Eigen::MatrixXd mean_map_factor_route(const HilbertFactor& factor) {
  const int r = factor.rank;
  const int m = static_cast<int>(factor.subset_basis.cols());
  if (r == 0) return Eigen::MatrixXd::Zero(factor.eigenvectors.rows(), m);

  // pinv(B^T) lifts y in the observable subspace to factor coordinates; the
  // projector then maps through iota.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(factor.subset_basis.transpose(),
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double sigma_max = svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
  const double sigma_cut = std::sqrt(factor.cutoff) * sigma_max;
  const int kmax = static_cast<int>(svd.singularValues().size());
  int k = 0;
  for (int i = 0; i < kmax; ++i) {
    if (svd.singularValues()(i) > sigma_cut && svd.singularValues()(i) > 0.0) ++k;
  }
  Eigen::MatrixXd pinv_bt = Eigen::MatrixXd::Zero(r, m);
  if (k > 0) {
    pinv_bt = svd.matrixV().leftCols(k) *
              svd.singularValues().head(k).cwiseInverse().asDiagonal() *
              svd.matrixU().leftCols(k).transpose();
  }
  return factor.path_factor() * (factor.projection_hy * pinv_bt);
}

Eigen::MatrixXd conditional_mean_map(const HilbertFactor& factor, const CovarianceMatrix& C,
                                     const SubsetMask& mask, double tol) {
  const Eigen::MatrixXd spectral = mean_map_spectral(C, mask, factor.cutoff);
  const Eigen::MatrixXd projected = mean_map_factor_route(factor);
  const double diff = (spectral - projected).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, C.entries.cwiseAbs().maxCoeff());
  if (diff > tol * scale) {
    fail("route-mismatch", "mean map routes disagree by " + std::to_string(diff));
  }
  return spectral;
}

Eigen::MatrixXd conditional_cov_schur_route(const CovarianceMatrix& C, const SubsetMask& mask,
                                            const Eigen::MatrixXd& mean_map) {
  const Eigen::MatrixXd cts = block_ts(C.entries, mask);
  return C.entries - mean_map * cts.transpose();
}

namespace {

Eigen::MatrixXd cond_cov_factor(const HilbertFactor& factor) {
  const int r = factor.rank;
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(r, r);
  return factor.path_factor() * (identity - factor.projection_hy);
}

}  // namespace

Eigen::MatrixXd conditional_cov(const HilbertFactor& factor, const CovarianceMatrix& C,
                                const SubsetMask& mask, double tol) {
  const Eigen::MatrixXd a = cond_cov_factor(factor);
  const Eigen::MatrixXd cov = a * a.transpose();
  const Eigen::MatrixXd schur =
      conditional_cov_schur_route(C, mask, mean_map_spectral(C, mask, factor.cutoff));
  const double diff = (cov - schur).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, C.entries.cwiseAbs().maxCoeff());
  if (diff > tol * scale) {
    fail("route-mismatch", "conditional covariance routes disagree by " + std::to_string(diff));
  }
  return cov;
}

Eigen::VectorXd project_onto_observable(const CovarianceMatrix& C, const SubsetMask& mask,
                                        const Eigen::VectorXd& y, double cutoff) {
  check_shapes(C, mask);
  if (y.size() != mask.size()) {
    fail("length-mismatch", "observation length does not match mask size");
  }
  const Eigen::MatrixXd css = block_ss(C.entries, mask);
  return spectral_decomp(css, cutoff).range_projector() * y;
}

int observable_rank(const CovarianceMatrix& C, const SubsetMask& mask, double cutoff) {
  check_shapes(C, mask);
  return spectral_decomp(block_ss(C.entries, mask), cutoff).rank;
}

ConditionalLaw condition(const CovarianceMatrix& C, const SubsetMask& mask,
                         const Eigen::VectorXd& y, const ConditionOptions& opts) {
  check_shapes(C, mask);
  if (y.size() != mask.size()) {
    fail("length-mismatch", "observation length does not match mask size");
  }
  if (!y.allFinite()) fail("invalid-observation", "observation contains non-finite values");
  require_validated(C);

  const HilbertFactor factor = factorize(C, mask, opts.cutoff);

  ConditionalLaw law;
  law.mask = mask;
  law.y_projected = project_onto_observable(C, mask, y, opts.cutoff);
  law.projection_residual = (y - law.y_projected).cwiseAbs().maxCoeff();
  const double y_norm = y.cwiseAbs().maxCoeff();
  if (law.projection_residual > opts.tol * y_norm) {
    fail("y-not-in-Y0", "observation lies outside the observable subspace (residual " +
                            std::to_string(law.projection_residual) + ")");
  }

  law.mean_map = conditional_mean_map(factor, C, mask, opts.tol);
  law.mean = law.mean_map * law.y_projected;
  law.cov_factor = cond_cov_factor(factor);
  law.cond_cov = law.cov_factor * law.cov_factor.transpose();
  {
    const Eigen::MatrixXd schur = conditional_cov_schur_route(C, mask, law.mean_map);
    const double diff = (law.cond_cov - schur).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, C.entries.cwiseAbs().maxCoeff());
    if (diff > opts.tol * scale) {
      fail("route-mismatch", "conditional covariance routes disagree by " + std::to_string(diff));
    }
  }
  law.m_report = compute_m_opnorm(C, mask, opts.search_budget, opts.seed, opts.degenerate_tol);
  return law;
}

IdentityReport verify_identities(const ConditionalLaw& law, const CovarianceMatrix& C,
                                 const SubsetMask& mask, double tol) {
  const double scale = std::max(1.0, C.entries.cwiseAbs().maxCoeff());
  const double tol_s = tol * scale;
  IdentityReport rep;

  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        0.5 * ((C.entries - law.cond_cov) + (C.entries - law.cond_cov).transpose()),
        Eigen::EigenvaluesOnly);
    rep.a_cov_dominated.value = es.eigenvalues().minCoeff();
    rep.a_cov_dominated.threshold = -tol_s;
    rep.a_cov_dominated.pass = rep.a_cov_dominated.value >= -tol_s;
  }
  {
    const Eigen::MatrixXd css = block_ss(C.entries, mask);
    const Eigen::MatrixXd cts = block_ts(C.entries, mask);
    const Eigen::MatrixXd lhs = law.mean_map * css * law.mean_map.transpose();
    const Eigen::MatrixXd rhs = cts * law.mean_map.transpose();
    rep.b_mean_consistency.value = (lhs - rhs).cwiseAbs().maxCoeff();
    rep.b_mean_consistency.threshold = tol_s;
    rep.b_mean_consistency.pass = rep.b_mean_consistency.value <= tol_s;
  }
  {
    double worst = 0.0;
    for (int s : mask.indices) {
      worst = std::max(worst, law.cond_cov.row(s).cwiseAbs().maxCoeff());
    }
    rep.c_kernel_rows_vanish.value = worst;
    rep.c_kernel_rows_vanish.threshold = tol_s;
    rep.c_kernel_rows_vanish.pass = worst <= tol_s;
  }
  {
    rep.d_interpolation.value =
        (restrict_to(law.mean, mask) - law.y_projected).cwiseAbs().maxCoeff();
    rep.d_interpolation.threshold = tol_s;
    rep.d_interpolation.pass = rep.d_interpolation.value <= tol_s;
  }
  {
    rep.m_bound_used = max_abs_row_sum(law.mean_map);
    const double y_norm = law.y_projected.size() > 0 ? law.y_projected.cwiseAbs().maxCoeff() : 0.0;
    rep.e_bounded_extension.value = law.mean.size() > 0 ? law.mean.cwiseAbs().maxCoeff() : 0.0;
    rep.e_bounded_extension.threshold = (rep.m_bound_used + tol) * y_norm;
    rep.e_bounded_extension.pass =
        rep.e_bounded_extension.value <= rep.e_bounded_extension.threshold;
  }
  return rep;
}

}  // namespace gfcond

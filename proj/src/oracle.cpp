#include "gfcond/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gfcond/errors.hpp"

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
  Eigen::MatrixXd out(C.rows(), mask.size());
  for (int b = 0; b < mask.size(); ++b) out.col(b) = C.col(mask.indices[b]);
  return out;
}

// Outer-product Cholesky with greedy diagonal pivoting. Produces a
// permutation p and a lower-trapezoidal L (m x r) with
// A(p,p) = L L^T up to the stopping tolerance.
struct PivotedCholesky {
  std::vector<int> perm;
  Eigen::MatrixXd l;  // m x r
  int rank = 0;
};

PivotedCholesky pivoted_cholesky(const Eigen::MatrixXd& sym, double rel_tol) {
  const int m = static_cast<int>(sym.rows());
  Eigen::MatrixXd a = 0.5 * (sym + sym.transpose());
  PivotedCholesky out;
  out.perm.resize(m);
  std::iota(out.perm.begin(), out.perm.end(), 0);
  out.l = Eigen::MatrixXd::Zero(m, m);

  const double init_max = m > 0 ? a.diagonal().maxCoeff() : 0.0;
  const double stop = rel_tol * std::max(init_max, 0.0);

  for (int k = 0; k < m; ++k) {
    int pivot = k;
    for (int i = k + 1; i < m; ++i) {
      if (a(i, i) > a(pivot, pivot)) pivot = i;
    }
    if (!(a(pivot, pivot) > stop) || !(a(pivot, pivot) > 0.0)) break;

    if (pivot != k) {
      a.row(k).swap(a.row(pivot));
      a.col(k).swap(a.col(pivot));
      out.l.row(k).swap(out.l.row(pivot));
      std::swap(out.perm[k], out.perm[pivot]);
    }
    const double d = std::sqrt(a(k, k));
    out.l(k, k) = d;
    for (int i = k + 1; i < m; ++i) out.l(i, k) = a(i, k) / d;
    for (int i = k + 1; i < m; ++i) {
      for (int j = k + 1; j <= i; ++j) {
        a(i, j) -= out.l(i, k) * out.l(j, k);
        a(j, i) = a(i, j);
      }
    }
    out.rank = k + 1;
  }
  out.l.conservativeResize(m, out.rank);
  return out;
}

// Minimum-norm solve A x = y through the pivoted square root:
// x = P^T L G^{-2} L^T P y with G = L^T L.
struct MinNormSolver {
  PivotedCholesky chol;
  Eigen::LLT<Eigen::MatrixXd> gram_llt;  // of G = L^T L
  int m = 0;

  explicit MinNormSolver(const Eigen::MatrixXd& sym, double rel_tol)
      : chol(pivoted_cholesky(sym, rel_tol)), m(static_cast<int>(sym.rows())) {
    if (chol.rank > 0) {
      gram_llt.compute(chol.l.transpose() * chol.l);
    }
  }

  Eigen::VectorXd permute(const Eigen::VectorXd& y) const {
    Eigen::VectorXd out(m);
    for (int i = 0; i < m; ++i) out[i] = y[chol.perm[i]];
    return out;
  }

  Eigen::VectorXd unpermute(const Eigen::VectorXd& y) const {
    Eigen::VectorXd out(m);
    for (int i = 0; i < m; ++i) out[chol.perm[i]] = y[i];
    return out;
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& y) const {
    if (chol.rank == 0) return Eigen::VectorXd::Zero(m);
    const Eigen::VectorXd py = permute(y);
    const Eigen::VectorXd t = gram_llt.solve(gram_llt.solve(chol.l.transpose() * py));
    return unpermute(chol.l * t);
  }

  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const {
    Eigen::MatrixXd out(m, rhs.cols());
    for (int j = 0; j < rhs.cols(); ++j) out.col(j) = solve(Eigen::VectorXd(rhs.col(j)));
    return out;
  }
};

}  // namespace

int pivoted_cholesky_rank(const Eigen::MatrixXd& sym, double rel_tol) {
  return pivoted_cholesky(sym, rel_tol).rank;
}

OracleResult schur_condition(const CovarianceMatrix& C, const SubsetMask& mask,
                             const Eigen::VectorXd& y) {
  if (C.size() > 64) {
    fail("oracle-scale-exceeded", "schur_condition handles at most 64 grid points");
  }
  if (mask.parent_size != C.size()) fail("size-mismatch", "mask does not match covariance");
  if (y.size() != mask.size()) fail("length-mismatch", "observation does not match mask");

  const Eigen::MatrixXd css = block_ss(C.entries, mask);
  const Eigen::MatrixXd cts = block_ts(C.entries, mask);
  const MinNormSolver solver(css, 1e-12);

  OracleResult out;
  out.method_tag = "pivoted-cholesky-schur";
  out.mean = cts * solver.solve(y);
  out.cov = C.entries - cts * solver.solve(Eigen::MatrixXd(cts.transpose()));
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

double exhaustive_m_opnorm(const CovarianceMatrix& C, const SubsetMask& mask) {
  const int m = mask.size();
  if (m > 3) {
    fail("oracle-scale-exceeded", "exhaustive_m_opnorm handles at most 3 subset points");
  }
  const Eigen::MatrixXd css = block_ss(C.entries, mask);
  const Eigen::MatrixXd cts = block_ts(C.entries, mask);

  Eigen::FullPivLU<Eigen::MatrixXd> lu(css);
  if (lu.rank() < m) {
    fail("singular-denominator", "subset block is rank deficient");
  }

  double best = 0.0;
  for (int bits = 0; bits < (1 << m); ++bits) {
    Eigen::VectorXd sigma(m);
    for (int a = 0; a < m; ++a) sigma[a] = (bits >> a) & 1 ? 1.0 : -1.0;
    const Eigen::VectorXd e = lu.solve(sigma);
    const double den = (css * e).cwiseAbs().maxCoeff();
    if (!(den > 0.0)) continue;
    best = std::max(best, (cts * e).cwiseAbs().maxCoeff() / den);
  }
  return best;
}

}  // namespace gfcond

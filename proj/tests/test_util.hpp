#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "gfcond/grid.hpp"
#include "gfcond/kernels.hpp"
#include "gfcond/rng.hpp"

namespace gfcond::testing {

// Random validated covariance instance: C = A A^T with a random rank,
// normalized to unit diagonal scale, plus a random nonempty mask and an
// observation drawn inside the observable subspace (y = C_SS g).
struct RandomInstance {
  CovarianceMatrix cov;
  SubsetMask mask;
  Eigen::VectorXd y;       // inside the observable subspace
  int rank = 0;
};

inline RandomInstance random_psd_instance(std::uint64_t seed, int max_size = 12,
                                          bool full_rank = false, int max_subset = 0) {
  SplitMix64 mix(GaussianStream::mix(seed, 0x1257));
  GaussianStream gauss(seed, 0x90d5);

  const int n = 2 + static_cast<int>(mix.next() % (max_size - 1));
  const int rank = full_rank ? n : 1 + static_cast<int>(mix.next() % n);

  Eigen::MatrixXd a(n, rank);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < rank; ++j) a(i, j) = gauss.next();

  RandomInstance inst;
  inst.rank = rank;
  inst.cov.entries = a * a.transpose();
  inst.cov.entries /= inst.cov.entries.diagonal().maxCoeff();

  int m_max = max_subset > 0 ? std::min(max_subset, n) : n;
  const int m = 1 + static_cast<int>(mix.next() % m_max);
  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[i] = i;
  for (int i = n - 1; i > 0; --i) {
    std::swap(all[i], all[mix.next() % (i + 1)]);
  }
  all.resize(m);
  std::sort(all.begin(), all.end());
  inst.mask.indices = all;
  inst.mask.parent_size = n;

  Eigen::VectorXd g(m);
  for (int i = 0; i < m; ++i) g[i] = gauss.next();
  Eigen::MatrixXd css(m, m);
  for (int p = 0; p < m; ++p)
    for (int q = 0; q < m; ++q) css(p, q) = inst.cov.entries(all[p], all[q]);
  inst.y = css * g;
  return inst;
}

}  // namespace gfcond::testing

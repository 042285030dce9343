#include "gfcond/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gfcond/errors.hpp"

namespace gfcond {

KernelSpec KernelSpec::brownian() {
  KernelSpec s;
  s.kind = Kind::Brownian;
  return s;
}

KernelSpec KernelSpec::ornstein_uhlenbeck(double length_scale) {
  if (!(length_scale > 0.0)) fail("invalid-parameter", "ornstein_uhlenbeck: length_scale must be positive");
  KernelSpec s;
  s.kind = Kind::OrnsteinUhlenbeck;
  s.length_scale = length_scale;
  return s;
}

KernelSpec KernelSpec::squared_exponential(double length_scale) {
  if (!(length_scale > 0.0)) fail("invalid-parameter", "squared_exponential: length_scale must be positive");
  KernelSpec s;
  s.kind = Kind::SquaredExponential;
  s.length_scale = length_scale;
  return s;
}

KernelSpec KernelSpec::rank_one(std::string profile) {
  rank_one_profile(profile, 0.0);  // reject unknown ids early
  KernelSpec s;
  s.kind = Kind::RankOne;
  s.profile = std::move(profile);
  return s;
}

KernelSpec KernelSpec::constant(double level) {
  if (level < 0.0) fail("invalid-parameter", "constant: level must be nonnegative");
  KernelSpec s;
  s.kind = Kind::Constant;
  s.level = level;
  return s;
}

KernelSpec KernelSpec::bumps(int n_bumps, double height_ratio, double decay) {
  if (n_bumps < 1) fail("invalid-count", "bumps: n_bumps must be at least 1");
  if (!(height_ratio > 1.0)) fail("invalid-parameter", "bumps: height_ratio must exceed 1");
  if (!(decay > 0.0 && decay < 1.0)) fail("invalid-parameter", "bumps: decay must lie in (0,1)");
  KernelSpec s;
  s.kind = Kind::Bumps;
  s.n_bumps = n_bumps;
  s.height_ratio = height_ratio;
  s.decay = decay;
  return s;
}

KernelSpec KernelSpec::custom_matrix(Eigen::MatrixXd entries) {
  KernelSpec s;
  s.kind = Kind::CustomMatrix;
  s.custom = std::move(entries);
  return s;
}

bool KernelSpec::stationary() const {
  return kind == Kind::OrnsteinUhlenbeck || kind == Kind::SquaredExponential ||
         kind == Kind::Constant;
}

double rank_one_profile(const std::string& id, double t) {
  if (id == "linear") return t;
  if (id == "quadratic") return t * t;
  if (id == "cosine") return std::cos(t);
  fail("invalid-profile", "rank_one_profile: unknown profile '" + id + "'");
}

namespace {

double kernel_value(const KernelSpec& spec, double t, double s) {
  switch (spec.kind) {
    case KernelSpec::Kind::Brownian:
      return std::min(t, s);
    case KernelSpec::Kind::OrnsteinUhlenbeck:
      return std::exp(-std::abs(t - s) / spec.length_scale);
    case KernelSpec::Kind::SquaredExponential: {
      const double d = (t - s) / spec.length_scale;
      return std::exp(-0.5 * d * d);
    }
    case KernelSpec::Kind::RankOne:
      return rank_one_profile(spec.profile, t) * rank_one_profile(spec.profile, s);
    case KernelSpec::Kind::Constant:
      return spec.level;
    default:
      fail("invalid-parameter", "kernel_value: variant has no pointwise form");
  }
}

}  // namespace

CovarianceMatrix assemble(const KernelSpec& spec, const Grid& grid) {
  const int n = grid.size();
  CovarianceMatrix C;
  if (spec.kind == KernelSpec::Kind::Bumps) {
    fail("mask-required", "assemble: bumps kernel needs the observation mask");
  }
  if (spec.kind == KernelSpec::Kind::CustomMatrix) {
    if (spec.custom.rows() != n || spec.custom.cols() != n) {
      fail("size-mismatch", "assemble: custom matrix is " + std::to_string(spec.custom.rows()) +
                                "x" + std::to_string(spec.custom.cols()) + ", grid has " +
                                std::to_string(n) + " points");
    }
    C.entries = spec.custom;
    return C;
  }
  C.entries.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double v = kernel_value(spec, grid.points[i], grid.points[j]);
      C.entries(i, j) = v;
      C.entries(j, i) = v;
    }
  }
  return C;
}

CovarianceMatrix assemble(const KernelSpec& spec, const Grid& grid, const SubsetMask& mask) {
  if (spec.kind == KernelSpec::Kind::Bumps) {
    return bumps_kernel(spec.n_bumps, spec.height_ratio, spec.decay, grid, mask);
  }
  return assemble(spec, grid);
}

KernelValidation validate(const CovarianceMatrix& C) {
  KernelValidation r;
  const Eigen::MatrixXd& M = C.entries;
  const int n = C.size();
  r.max_asymmetry = (M - M.transpose()).cwiseAbs().maxCoeff();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()),
                                                    Eigen::EigenvaluesOnly);
  r.min_eigenvalue = es.eigenvalues().minCoeff();
  r.lambda_max = std::max(0.0, es.eigenvalues().maxCoeff());

  r.schwarz_violation = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      r.schwarz_violation =
          std::max(r.schwarz_violation, M(i, j) * M(i, j) - M(i, i) * M(j, j));
    }
  }

  const double max_abs = n > 0 ? M.cwiseAbs().maxCoeff() : 0.0;
  const double scale = std::max(1.0, max_abs);
  r.psd_ok = r.min_eigenvalue >= -C.psd_tolerance * std::max(1.0, r.lambda_max);
  r.schwarz_ok = r.schwarz_violation <= C.psd_tolerance * scale * scale;
  r.symmetric_ok = r.max_asymmetry <= C.psd_tolerance * scale;
  return r;
}

BumpsLayout bumps_layout(const Grid& grid, const SubsetMask& mask, int n_bumps) {
  if (n_bumps < 1) {
    fail("invalid-count", "bumps_layout: n_bumps must be at least 1");
  }
  const std::vector<int> outside = complement_indices(mask);

  // Greedy placement with a one-node blocking radius on each side, so the
  // tents (support = the two cells around a peak) never overlap.
  std::vector<char> blocked(grid.size(), 0);
  auto take = [&blocked](const std::vector<int>& pool, int want) {
    std::vector<int> picked;
    for (int idx : pool) {
      if (static_cast<int>(picked.size()) == want) break;
      bool free = !blocked[idx];
      if (idx > 0 && blocked[idx - 1]) free = false;
      if (idx + 1 < static_cast<int>(blocked.size()) && blocked[idx + 1]) free = false;
      if (!free) continue;
      picked.push_back(idx);
      blocked[idx] = 1;
      if (idx > 0) blocked[idx - 1] = 1;
      if (idx + 1 < static_cast<int>(blocked.size())) blocked[idx + 1] = 1;
    }
    return picked;
  };

  BumpsLayout layout;
  layout.inside_peaks = take(mask.indices, n_bumps);
  layout.outside_peaks = take(outside, n_bumps);
  if (static_cast<int>(layout.inside_peaks.size()) < n_bumps ||
      static_cast<int>(layout.outside_peaks.size()) < n_bumps) {
    fail("grid-too-coarse", "bumps_layout: grid cannot host " + std::to_string(n_bumps) +
                                " disjoint bumps inside and outside the subset");
  }
  return layout;
}

CovarianceMatrix bumps_kernel(int n_bumps, double height_ratio, double decay,
                              const Grid& grid, const SubsetMask& mask) {
  if (!(height_ratio > 1.0)) fail("invalid-parameter", "bumps_kernel: height_ratio must exceed 1");
  if (!(decay > 0.0 && decay < 1.0)) fail("invalid-parameter", "bumps_kernel: decay must lie in (0,1)");
  const BumpsLayout layout = bumps_layout(grid, mask, n_bumps);

  const int n = grid.size();
  CovarianceMatrix C;
  C.entries = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k <= n_bumps; ++k) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
    u[layout.inside_peaks[k - 1]] = std::pow(height_ratio, -k);
    u[layout.outside_peaks[k - 1]] = 1.0;
    C.entries += std::pow(decay, k) * u * u.transpose();
  }
  return C;
}

}  // namespace gfcond

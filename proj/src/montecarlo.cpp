#include "gfcond/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>

#include "gfcond/errors.hpp"
#include "gfcond/rng.hpp"

namespace gfcond {

namespace {

Eigen::VectorXd draw_standard_normal(int dim, std::uint64_t seed, std::uint64_t stream) {
  GaussianStream g(seed, stream);
  Eigen::VectorXd z(dim);
  for (int i = 0; i < dim; ++i) z[i] = g.next();
  return z;
}

std::string hash_tag(const Eigen::VectorXd& v) {
  SplitMix64 h(0x517cc1b727220a95ULL);
  for (int i = 0; i < v.size(); ++i) {
    std::uint64_t bits;
    static_assert(sizeof(double) == sizeof(std::uint64_t));
    std::memcpy(&bits, &v[i], sizeof(bits));
    h.state ^= bits;
    h.next();
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h.next()));
  return buf;
}

double sample_stddev(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / (static_cast<double>(xs.size()) - 1.0));
}

StatReport make_report(std::string name, double estimate, double reference, double stderr_est) {
  StatReport r;
  r.name = std::move(name);
  r.estimate = estimate;
  r.reference = reference;
  r.stderr_est = stderr_est;
  if (stderr_est > 0.0) {
    r.z_score = (estimate - reference) / stderr_est;
  } else {
    r.z_score = (estimate == reference) ? 0.0 : std::numeric_limits<double>::infinity();
  }
  r.pass = std::abs(r.z_score) <= 3.0;
  return r;
}

}  // namespace

PathFunctional constant_functional(double value) {
  return {"constant", [value](const Eigen::VectorXd&) { return value; }};
}

PathFunctional coordinate_functional(int grid_index) {
  return {"coordinate[" + std::to_string(grid_index) + "]",
          [grid_index](const Eigen::VectorXd& x) { return x[grid_index]; }};
}

PathFunctional squared_coordinate_functional(int grid_index) {
  return {"squared_coordinate[" + std::to_string(grid_index) + "]",
          [grid_index](const Eigen::VectorXd& x) { return x[grid_index] * x[grid_index]; }};
}

PathFunctional tanh_linear_functional(Eigen::VectorXd weights) {
  return {"tanh_linear", [w = std::move(weights)](const Eigen::VectorXd& x) {
            return std::tanh(w.dot(x));
          }};
}

PathFunctional supnorm_clipped_functional(double cap) {
  return {"supnorm_clipped", [cap](const Eigen::VectorXd& x) {
            return std::min(cap, x.cwiseAbs().maxCoeff());
          }};
}

SampleBatch sample_prior(const HilbertFactor& factor, int n, std::uint64_t seed) {
  if (n < 0) fail("invalid-count", "sample_prior: negative sample count");
  const Eigen::MatrixXd w = factor.path_factor();  // |T| x r
  SampleBatch batch;
  batch.seed = seed;
  batch.law_tag = "prior";
  batch.paths.resize(n, w.rows());
  for (int i = 0; i < n; ++i) {
    batch.paths.row(i) = (w * draw_standard_normal(factor.rank, seed, i)).transpose();
  }
  return batch;
}

SampleBatch sample_conditional(const ConditionalLaw& law, int n, std::uint64_t seed) {
  if (n < 0) fail("invalid-count", "sample_conditional: negative sample count");
  const int r = static_cast<int>(law.cov_factor.cols());
  SampleBatch batch;
  batch.seed = seed;
  batch.law_tag = "conditional(" + hash_tag(law.y_projected) + ")";
  batch.paths.resize(n, law.mean.size());
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd path = law.mean + law.cov_factor * draw_standard_normal(r, seed, i);
    const double fiber_dev = (restrict_to(path, law.mask) - law.y_projected).cwiseAbs().maxCoeff();
    if (fiber_dev > 1e-6) {
      fail("fiber-violation",
           "conditional path deviates from the observation on S by " + std::to_string(fiber_dev));
    }
    batch.paths.row(i) = path.transpose();
  }
  return batch;
}

std::vector<StatReport> check_disintegration(const CovarianceMatrix& C, const SubsetMask& mask,
                                             const std::vector<PathFunctional>& functionals,
                                             int n_outer, int n_inner, std::uint64_t seed) {
  if (n_outer < 1 || n_inner < 1) fail("invalid-count", "check_disintegration: counts must be >= 1");
  const HilbertFactor factor = factorize(C, mask);
  const Eigen::MatrixXd w = factor.path_factor();
  const Eigen::MatrixXd mean_map = conditional_mean_map(factor, C, mask);
  const Eigen::MatrixXd cov_factor =
      w * (Eigen::MatrixXd::Identity(factor.rank, factor.rank) - factor.projection_hy);

  const std::uint64_t seed_direct = GaussianStream::mix(seed, 1);
  const std::uint64_t seed_outer = GaussianStream::mix(seed, 2);
  const std::uint64_t seed_inner = GaussianStream::mix(seed, 3);

  const int nf = static_cast<int>(functionals.size());
  const long long n_direct = static_cast<long long>(n_outer) * n_inner;

  // direct prior estimate of E[f]
  std::vector<std::vector<double>> direct_vals(nf);
  for (long long i = 0; i < n_direct; ++i) {
    const Eigen::VectorXd path = w * draw_standard_normal(factor.rank, seed_direct, i);
    for (int f = 0; f < nf; ++f) direct_vals[f].push_back(functionals[f].fn(path));
  }

  // nested estimate: outer draws of y = restrict(prior path), inner
  // conditional draws around mean_map y
  std::vector<std::vector<double>> outer_means(nf);
  for (int i = 0; i < n_outer; ++i) {
    const Eigen::VectorXd prior_path = w * draw_standard_normal(factor.rank, seed_outer, i);
    const Eigen::VectorXd y = restrict_to(prior_path, mask);
    const Eigen::VectorXd y_proj = project_onto_observable(C, mask, y);
    const Eigen::VectorXd mean = mean_map * y_proj;
    std::vector<double> inner_acc(nf, 0.0);
    for (int j = 0; j < n_inner; ++j) {
      const Eigen::VectorXd path =
          mean + cov_factor * draw_standard_normal(factor.rank, seed_inner,
                                                   static_cast<std::uint64_t>(i) * n_inner + j);
      for (int f = 0; f < nf; ++f) inner_acc[f] += functionals[f].fn(path);
    }
    for (int f = 0; f < nf; ++f) outer_means[f].push_back(inner_acc[f] / n_inner);
  }

  std::vector<StatReport> reports;
  for (int f = 0; f < nf; ++f) {
    double direct_mean = 0.0;
    for (double v : direct_vals[f]) direct_mean += v;
    direct_mean /= static_cast<double>(n_direct);
    const double direct_se =
        sample_stddev(direct_vals[f], direct_mean) / std::sqrt(static_cast<double>(n_direct));

    double nested_mean = 0.0;
    for (double v : outer_means[f]) nested_mean += v;
    nested_mean /= static_cast<double>(n_outer);
    const double nested_se =
        sample_stddev(outer_means[f], nested_mean) / std::sqrt(static_cast<double>(n_outer));

    const double combined = std::sqrt(direct_se * direct_se + nested_se * nested_se);
    reports.push_back(make_report(functionals[f].name, nested_mean, direct_mean, combined));
  }
  return reports;
}

ContinuityReport check_weak_continuity(const CovarianceMatrix& C, const SubsetMask& mask,
                                       const Eigen::VectorXd& y_target,
                                       const std::vector<double>& perturbation_scales,
                                       std::uint64_t seed, double tol) {
  ConditionOptions opts;
  opts.tol = tol;
  const ConditionalLaw base = condition(C, mask, y_target, opts);

  // random direction inside the observable subspace: C_SS g stays in range
  Eigen::VectorXd g = draw_standard_normal(mask.size(), seed, 0x5ca1e);
  Eigen::MatrixXd css(mask.size(), mask.size());
  for (int a = 0; a < mask.size(); ++a)
    for (int b = 0; b < mask.size(); ++b)
      css(a, b) = C.entries(mask.indices[a], mask.indices[b]);
  Eigen::VectorXd d = css * g;
  const double d_norm = d.cwiseAbs().maxCoeff();
  if (!(d_norm > 0.0)) fail("degenerate-direction", "perturbation direction collapsed to zero");
  d /= d_norm;

  ContinuityReport rep;
  rep.scales = perturbation_scales;
  rep.bound = base.m_report.m_opnorm_rowsum.value_or(base.m_report.m_delta) + tol;
  rep.cov_identical = true;
  bool all_below = true;
  for (double eps : perturbation_scales) {
    const Eigen::VectorXd y_eps = y_target + eps * d;
    const ConditionalLaw law = condition(C, mask, y_eps, opts);
    double ratio = 0.0;
    if (eps != 0.0) {
      ratio = (law.mean - base.mean).cwiseAbs().maxCoeff() / (eps * d.cwiseAbs().maxCoeff());
    } else {
      ratio = (law.mean - base.mean).cwiseAbs().maxCoeff() > 0.0
                  ? std::numeric_limits<double>::infinity()
                  : 0.0;
    }
    rep.ratios.push_back(ratio);
    if (ratio > rep.bound) all_below = false;
    const bool same_cov =
        law.cond_cov.rows() == base.cond_cov.rows() &&
        std::equal(law.cond_cov.data(), law.cond_cov.data() + law.cond_cov.size(),
                   base.cond_cov.data());
    if (!same_cov) rep.cov_identical = false;
  }
  rep.pass = all_below && rep.cov_identical;
  return rep;
}

std::vector<StatReport> rejection_oracle(const CovarianceMatrix& C, const SubsetMask& mask,
                                         const Eigen::VectorXd& y, double delta,
                                         const std::vector<int>& probe_indices,
                                         const std::vector<int>& eval_indices, int n,
                                         std::uint64_t seed) {
  if (delta < 0.0) fail("invalid-delta", "rejection_oracle: delta must be nonnegative");
  if (probe_indices.empty() || probe_indices.size() > 5) {
    fail("invalid-probe", "rejection_oracle: probe must have 1..5 indices");
  }
  if (y.size() != mask.size()) fail("length-mismatch", "observation does not match mask");

  // probe sub-mask and the observation restricted to it
  SubsetMask probe;
  probe.parent_size = mask.parent_size;
  probe.indices = probe_indices;
  std::sort(probe.indices.begin(), probe.indices.end());
  Eigen::VectorXd y_probe(probe.size());
  for (int k = 0; k < probe.size(); ++k) {
    const auto it =
        std::find(mask.indices.begin(), mask.indices.end(), probe.indices[k]);
    if (it == mask.indices.end()) {
      fail("invalid-probe", "probe index " + std::to_string(probe.indices[k]) +
                                " is not part of the observation mask");
    }
    y_probe[k] = y[static_cast<int>(it - mask.indices.begin())];
  }

  // reference conditional mean for the probe sub-problem
  const ConditionalLaw probe_law = condition(C, probe, y_probe);

  const HilbertFactor factor = factorize(C, probe);
  const Eigen::MatrixXd w = factor.path_factor();

  std::vector<int> evals = eval_indices;
  if (evals.empty()) {
    for (int t = 0; t < C.size(); ++t) evals.push_back(t);
  }

  std::vector<std::vector<double>> accepted(evals.size());
  long long n_accepted = 0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd path = w * draw_standard_normal(factor.rank, seed, i);
    double dev = 0.0;
    for (int k = 0; k < probe.size(); ++k) {
      dev = std::max(dev, std::abs(path[probe.indices[k]] - y_probe[k]));
    }
    if (dev >= delta) continue;
    ++n_accepted;
    for (std::size_t t = 0; t < evals.size(); ++t) accepted[t].push_back(path[evals[t]]);
  }
  if (n_accepted < 100) {
    fail("too-few-acceptances", "rejection_oracle accepted only " + std::to_string(n_accepted) +
                                    " of " + std::to_string(n) + " paths");
  }

  std::vector<StatReport> reports;
  for (std::size_t t = 0; t < evals.size(); ++t) {
    double emp = 0.0;
    for (double v : accepted[t]) emp += v;
    emp /= static_cast<double>(n_accepted);
    const double se =
        sample_stddev(accepted[t], emp) / std::sqrt(static_cast<double>(n_accepted));
    const double ref = probe_law.mean[evals[t]];

    StatReport r;
    r.name = "rejection[t=" + std::to_string(evals[t]) + "]";
    r.estimate = emp;
    r.reference = ref;
    r.stderr_est = se;
    const double excess = std::max(0.0, std::abs(emp - ref) - delta);
    r.z_score = se > 0.0 ? excess / se
                         : (excess == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    r.pass = r.z_score <= 3.0;
    reports.push_back(std::move(r));
  }
  return reports;
}

std::vector<DivergenceRow> divergence_demo(double height_ratio,
                                           const std::vector<int>& n_bumps_range,
                                           const Grid& grid, const SubsetMask& mask,
                                           std::uint64_t /*seed*/) {
  std::vector<DivergenceRow> rows;
  for (int n_bumps : n_bumps_range) {
    const CovarianceMatrix C = bumps_kernel(n_bumps, height_ratio, 0.5, grid, mask);
    const BumpsLayout layout = bumps_layout(grid, mask, n_bumps);
    const MRatioReport m = compute_m_delta(C, mask);

    // the normalized observation from the delta functional at the last
    // (smallest) bump peak inside S: y_N = (1/N) C_SS g / ||C_SS g||_inf
    const int peak = layout.inside_peaks[n_bumps - 1];
    Eigen::VectorXd col(mask.size());
    for (int a = 0; a < mask.size(); ++a) col[a] = C.entries(mask.indices[a], peak);
    const double col_norm = col.cwiseAbs().maxCoeff();
    if (!(col_norm > 0.0)) fail("grid-too-coarse", "bump peak column vanished");
    const Eigen::VectorXd y_n = col / (col_norm * n_bumps);

    const ConditionalLaw law = condition(C, mask, y_n);
    DivergenceRow row;
    row.n_bumps = n_bumps;
    row.m_delta = m.m_delta;
    row.y_norm = y_n.cwiseAbs().maxCoeff();
    row.mean_norm = law.mean.cwiseAbs().maxCoeff();
    rows.push_back(row);
  }
  return rows;
}

}  // namespace gfcond

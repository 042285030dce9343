#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "gfcond/conditioning.hpp"
#include "gfcond/errors.hpp"
#include "gfcond/kernels.hpp"
#include "gfcond/oracle.hpp"
#include "test_util.hpp"

using namespace gfcond;

namespace {

bool throws_code(const std::function<void()>& fn, const std::string& code) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

}  // namespace

TEST_CASE("schur_condition: bivariate normal closed form") {
  const double rho = 0.6;
  const double a = 1.3;
  CovarianceMatrix C;
  C.entries.resize(2, 2);
  C.entries << 1.0, rho,
               rho, 1.0;
  SubsetMask mask;
  mask.indices = {0};
  mask.parent_size = 2;
  Eigen::VectorXd y(1);
  y << a;

  const OracleResult res = schur_condition(C, mask, y);
  CHECK(res.mean[0] == doctest::Approx(a).epsilon(1e-12));
  CHECK(res.mean[1] == doctest::Approx(rho * a).epsilon(1e-12));
  CHECK(std::abs(res.cov(0, 0)) <= 1e-12);
  CHECK(std::abs(res.cov(0, 1)) <= 1e-12);
  CHECK(res.cov(1, 1) == doctest::Approx(1.0 - rho * rho).epsilon(1e-12));
}

TEST_CASE("schur_condition: S = T reproduces the observation with zero covariance") {
  const Grid grid = build_grid(0.0, 1.0, 6);
  const SubsetMask mask = mask_from_intervals(grid, {{0.0, 1.0}});
  const CovarianceMatrix C = assemble(KernelSpec::ornstein_uhlenbeck(1.0), grid);
  GaussianStream g(5, 0);
  Eigen::VectorXd h(mask.size());
  for (int i = 0; i < h.size(); ++i) h[i] = g.next();
  const Eigen::VectorXd y = C.entries * h;

  const OracleResult res = schur_condition(C, mask, y);
  CHECK((res.mean - y).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(res.cov.cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("schur_condition: scale limit") {
  CovarianceMatrix big;
  big.entries = Eigen::MatrixXd::Identity(65, 65);
  SubsetMask mask;
  mask.indices = {0};
  mask.parent_size = 65;
  CHECK(throws_code([&] { schur_condition(big, mask, Eigen::VectorXd::Zero(1)); },
                    "oracle-scale-exceeded"));
}

TEST_CASE("oracle matches the core on brownian restriction of a prior draw") {
  const Grid grid = build_grid(0.0, 1.0, 5);
  SubsetMask mask;
  mask.indices = {0, 1, 2};
  mask.parent_size = 5;
  const CovarianceMatrix C = assemble(KernelSpec::brownian(), grid);

  // y = restriction of a draw from the prior factor
  const HilbertFactor factor = factorize(C, mask);
  GaussianStream g(11, 2);
  Eigen::VectorXd z(factor.rank);
  for (int i = 0; i < z.size(); ++i) z[i] = g.next();
  const Eigen::VectorXd y = restrict_to(factor.path_factor() * z, mask);

  const ConditionalLaw law = condition(C, mask, y);
  const OracleResult oracle = schur_condition(C, mask, y);
  CHECK((law.mean - oracle.mean).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((law.cond_cov - oracle.cov).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("oracle matches the core across 100 random instances") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto inst = gfcond::testing::random_psd_instance(seed);
    const ConditionalLaw law = condition(inst.cov, inst.mask, inst.y);
    const OracleResult oracle = schur_condition(inst.cov, inst.mask, inst.y);
    CAPTURE(seed);
    const double y_scale = 1.0 + inst.y.cwiseAbs().maxCoeff();
    CHECK((law.mean - oracle.mean).cwiseAbs().maxCoeff() <= 1e-8 * y_scale);
    CHECK((law.cond_cov - oracle.cov).cwiseAbs().maxCoeff() <= 1e-8);
    // oracle covariance is symmetric PSD on its own
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(oracle.cov, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  }
}

TEST_CASE("exhaustive_m_opnorm: single point equals the delta ratio") {
  const Grid grid = build_grid(0.0, 1.0, 7);
  SubsetMask mask;
  mask.indices = {3};
  mask.parent_size = 7;
  const CovarianceMatrix C = assemble(KernelSpec::ornstein_uhlenbeck(0.7), grid);
  const double exact = exhaustive_m_opnorm(C, mask);
  const MRatioReport r = compute_m_delta(C, mask);
  CHECK(exact == doctest::Approx(r.m_delta).epsilon(1e-12));
}

TEST_CASE("exhaustive_m_opnorm: brownian two-point subset stays at 1") {
  const Grid grid = build_grid(0.0, 1.0, 5);
  SubsetMask mask;
  mask.indices = {1, 2};  // 0.25 and 0.5
  mask.parent_size = 5;
  const CovarianceMatrix C = assemble(KernelSpec::brownian(), grid);
  const double exact = exhaustive_m_opnorm(C, mask);
  CHECK(exact == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(exact == doctest::Approx(compute_m_delta(C, mask).m_delta).epsilon(1e-12));
}

TEST_CASE("exhaustive_m_opnorm: errors on scale and singularity") {
  CovarianceMatrix C;
  C.entries = Eigen::MatrixXd::Identity(6, 6);
  SubsetMask big;
  big.indices = {0, 1, 2, 3};
  big.parent_size = 6;
  CHECK(throws_code([&] { exhaustive_m_opnorm(C, big); }, "oracle-scale-exceeded"));

  CovarianceMatrix singular;
  singular.entries = Eigen::MatrixXd::Zero(3, 3);
  singular.entries(2, 2) = 1.0;
  SubsetMask mask;
  mask.indices = {0, 1};
  mask.parent_size = 3;
  CHECK(throws_code([&] { exhaustive_m_opnorm(singular, mask); }, "singular-denominator"));
}

TEST_CASE("exhaustive value sandwiched between delta and row-sum norms") {
  int tested = 0;
  for (std::uint64_t seed = 0; tested < 50; ++seed) {
    const auto inst = gfcond::testing::random_psd_instance(seed, 10, true, 3);
    const double exact = exhaustive_m_opnorm(inst.cov, inst.mask);
    const MRatioReport r = compute_m_opnorm(inst.cov, inst.mask, 60, seed);
    CAPTURE(seed);
    CHECK(exact >= r.m_delta - 1e-10);
    REQUIRE(r.m_opnorm_rowsum.has_value());
    CHECK(exact <= *r.m_opnorm_rowsum + 1e-10);
    // the search lower bound lands within 5% of the exact value
    CHECK(r.m_opnorm_lower >= 0.95 * exact);
    CHECK(r.m_opnorm_lower <= exact + 1e-8 * (1.0 + exact));
    ++tested;
  }
}

TEST_CASE("pivoted cholesky rank agrees with the spectral rank") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto inst = gfcond::testing::random_psd_instance(seed);
    const int chol_rank = pivoted_cholesky_rank(inst.cov.entries);
    CHECK(chol_rank == std::min(inst.rank, inst.cov.size()));
  }
}

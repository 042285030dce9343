#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "gfcond/errors.hpp"
#include "gfcond/kernels.hpp"
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

Grid grid01(int n) { return build_grid(0.0, 1.0, n); }

}  // namespace

TEST_CASE("assemble brownian matches min(s,t) entrywise") {
  Grid g;
  g.points = {0.25, 0.5, 1.0};
  const CovarianceMatrix C = assemble(KernelSpec::brownian(), g);
  Eigen::MatrixXd expected(3, 3);
  expected << 0.25, 0.25, 0.25,
              0.25, 0.5, 0.5,
              0.25, 0.5, 1.0;
  CHECK((C.entries - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("assemble constant and ornstein-uhlenbeck") {
  const Grid g = grid01(4);
  const CovarianceMatrix ones = assemble(KernelSpec::constant(1.0), g);
  CHECK((ones.entries - Eigen::MatrixXd::Ones(4, 4)).cwiseAbs().maxCoeff() == 0.0);

  Grid ends;
  ends.points = {0.0, 1.0};
  const CovarianceMatrix ou = assemble(KernelSpec::ornstein_uhlenbeck(1.0), ends);
  CHECK(ou.entries(0, 0) == 1.0);
  CHECK(ou.entries(1, 1) == 1.0);
  CHECK(ou.entries(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(ou.entries(0, 1) == ou.entries(1, 0));
}

TEST_CASE("assemble custom matrix size checks") {
  const Grid g = grid01(3);
  Eigen::MatrixXd wrong(2, 2);
  wrong.setIdentity();
  CHECK(throws_code([&] { assemble(KernelSpec::custom_matrix(wrong), g); }, "size-mismatch"));

  Eigen::MatrixXd right = Eigen::MatrixXd::Identity(3, 3);
  const CovarianceMatrix C = assemble(KernelSpec::custom_matrix(right), g);
  CHECK(C.entries == right);
}

TEST_CASE("validate: brownian passes with positive spectrum") {
  Grid g;
  g.points = {0.25, 0.5, 1.0};
  const CovarianceMatrix C = assemble(KernelSpec::brownian(), g);
  const KernelValidation v = validate(C);
  CHECK(v.pass());
  // independent oracle: smallest eigenvalue by direct eigensolve
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C.entries, Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  CHECK(v.min_eigenvalue == doctest::Approx(es.eigenvalues().minCoeff()).epsilon(1e-12));

  // a grid containing t = 0 stays PSD with an exactly null direction
  const KernelValidation v0 = validate(assemble(KernelSpec::brownian(), grid01(8)));
  CHECK(v0.pass());
  CHECK(v0.min_eigenvalue >= -1e-15);
}

TEST_CASE("validate: schwarz violation fails, zero matrix passes") {
  CovarianceMatrix bad;
  bad.entries.resize(2, 2);
  bad.entries << 1.0, 2.0,
                 2.0, 1.0;
  const KernelValidation vb = validate(bad);
  CHECK_FALSE(vb.pass());
  CHECK(vb.schwarz_violation == doctest::Approx(3.0));

  CovarianceMatrix zero;
  zero.entries = Eigen::MatrixXd::Zero(3, 3);
  CHECK(validate(zero).pass());
}

TEST_CASE("every built-in kernel validates on random grids") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    SplitMix64 mix(seed);
    const int n = 3 + static_cast<int>(mix.next() % 14);
    const Grid g = grid01(n);
    const std::vector<KernelSpec> specs = {
        KernelSpec::brownian(),
        KernelSpec::ornstein_uhlenbeck(0.3 + 0.2 * (mix.next() % 10)),
        KernelSpec::squared_exponential(0.5 + 0.1 * (mix.next() % 10)),
        KernelSpec::rank_one("linear"),
        KernelSpec::constant(2.0),
    };
    for (const auto& spec : specs) {
      const CovarianceMatrix C = assemble(spec, g);
      CAPTURE(n);
      CHECK(validate(C).pass());
    }
  }
}

TEST_CASE("stationary kernels have constant diagonal") {
  const Grid g = grid01(9);
  for (const auto& spec : {KernelSpec::ornstein_uhlenbeck(0.7),
                           KernelSpec::squared_exponential(1.3), KernelSpec::constant(1.5)}) {
    CHECK(spec.stationary());
    const CovarianceMatrix C = assemble(spec, g);
    for (int i = 1; i < C.size(); ++i) {
      CHECK(C.entries(i, i) == C.entries(0, 0));
    }
  }
  CHECK_FALSE(KernelSpec::brownian().stationary());
  CHECK_FALSE(KernelSpec::rank_one("linear").stationary());
}

TEST_CASE("bumps kernel: entries, disjoint blocks, and validation") {
  const Grid g = grid01(21);
  const SubsetMask mask = mask_from_intervals(g, {{0.0, 0.5}});

  const int n_bumps = 2;
  const double ratio = 2.0;
  const double decay = 0.5;
  const CovarianceMatrix C = bumps_kernel(n_bumps, ratio, decay, g, mask);
  CHECK(validate(C).pass());

  const BumpsLayout layout = bumps_layout(g, mask, n_bumps);
  REQUIRE(layout.inside_peaks.size() == 2);
  REQUIRE(layout.outside_peaks.size() == 2);
  for (int k = 1; k <= n_bumps; ++k) {
    const int s = layout.inside_peaks[k - 1];
    const int t = layout.outside_peaks[k - 1];
    CHECK(mask.contains(s));
    CHECK_FALSE(mask.contains(t));
    CHECK(C.entries(s, s) == doctest::Approx(std::pow(decay, k) * std::pow(ratio, -2.0 * k)));
    CHECK(C.entries(s, t) == doctest::Approx(std::pow(decay, k) * std::pow(ratio, -1.0 * k)));
    CHECK(C.entries(t, t) == doctest::Approx(std::pow(decay, k)));
  }
  // cross-bump blocks vanish
  for (int a = 1; a <= n_bumps; ++a) {
    for (int b = 1; b <= n_bumps; ++b) {
      if (a == b) continue;
      CHECK(C.entries(layout.inside_peaks[a - 1], layout.outside_peaks[b - 1]) == 0.0);
      CHECK(C.entries(layout.inside_peaks[a - 1], layout.inside_peaks[b - 1]) == 0.0);
      CHECK(C.entries(layout.outside_peaks[a - 1], layout.outside_peaks[b - 1]) == 0.0);
    }
  }
}

TEST_CASE("bumps kernel degenerate inputs") {
  const Grid g = grid01(21);
  const SubsetMask mask = mask_from_intervals(g, {{0.0, 0.5}});
  bool rejected = false;
  try {
    bumps_kernel(0, 2.0, 0.5, g, mask);
  } catch (const Error& e) {
    rejected = e.code() == "invalid-count" || e.code() == "grid-too-coarse";
  }
  CHECK(rejected);

  CHECK(throws_code([&] { bumps_kernel(2, 1.0, 0.5, g, mask); }, "invalid-parameter"));
  CHECK(throws_code([&] { bumps_kernel(2, 2.0, 1.5, g, mask); }, "invalid-parameter"));

  // a 5-point grid cannot host 3 bumps inside [0, 0.5]
  const Grid tiny = grid01(5);
  const SubsetMask tiny_mask = mask_from_intervals(tiny, {{0.0, 0.5}});
  CHECK(throws_code([&] { bumps_kernel(3, 2.0, 0.5, tiny, tiny_mask); }, "grid-too-coarse"));
}

TEST_CASE("random psd instances validate") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = gfcond::testing::random_psd_instance(seed);
    CHECK(validate(inst.cov).pass());
  }
}

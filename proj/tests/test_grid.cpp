#include <doctest.h>

#include "gfcond/errors.hpp"
#include "gfcond/grid.hpp"
#include "gfcond/rng.hpp"

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

TEST_CASE("build_grid endpoints and spacing") {
  const Grid two = build_grid(0.0, 1.0, 2);
  CHECK(two.points == std::vector<double>{0.0, 1.0});

  const Grid five = build_grid(0.0, 1.0, 5);
  CHECK(five.points == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});

  CHECK(throws_code([] { build_grid(0.0, 1.0, 1); }, "invalid-count"));
  CHECK(throws_code([] { build_grid(1.0, 0.0, 5); }, "invalid-range"));
  CHECK(throws_code([] { build_grid(1.0, 1.0, 5); }, "invalid-range"));
}

TEST_CASE("mask_from_intervals membership") {
  const Grid grid = build_grid(0.0, 1.0, 5);

  const SubsetMask half = mask_from_intervals(grid, {{0.0, 0.5}});
  CHECK(half.indices == std::vector<int>{0, 1, 2});
  CHECK(half.parent_size == 5);

  const SubsetMask all = mask_from_intervals(grid, {{0.0, 1.0}});
  CHECK(all.indices == std::vector<int>{0, 1, 2, 3, 4});

  CHECK(throws_code([&] { mask_from_intervals(grid, {{2.0, 3.0}}); }, "empty-subset"));
  CHECK(throws_code([&] { mask_from_intervals(grid, {}); }, "empty-subset"));
  CHECK(throws_code([&] { mask_from_intervals(grid, {{0.5, 0.2}}); }, "invalid-interval"));

  // union of disjoint intervals
  const SubsetMask ends = mask_from_intervals(grid, {{0.0, 0.1}, {0.9, 1.0}});
  CHECK(ends.indices == std::vector<int>{0, 4});
}

TEST_CASE("restrict_to selects coordinates") {
  SubsetMask mask;
  mask.indices = {0, 2};
  mask.parent_size = 3;

  Eigen::VectorXd x(3);
  x << 1.0, 2.0, 3.0;
  const Eigen::VectorXd r = restrict_to(x, mask);
  CHECK(r.size() == 2);
  CHECK(r[0] == 1.0);
  CHECK(r[1] == 3.0);

  CHECK(restrict_to(Eigen::VectorXd::Zero(3), mask).isZero(0.0));

  Eigen::VectorXd bad(1);
  bad << 5.0;
  CHECK(throws_code([&] { restrict_to(bad, mask); }, "length-mismatch"));
}

TEST_CASE("restrict_to is linear and a sup-norm contraction") {
  GaussianStream g(42, 7);
  for (int trial = 0; trial < 50; ++trial) {
    SplitMix64 mix(GaussianStream::mix(trial, 3));
    const int n = 2 + static_cast<int>(mix.next() % 10);
    SubsetMask mask;
    mask.parent_size = n;
    for (int i = 0; i < n; ++i) {
      if (mix.next() & 1) mask.indices.push_back(i);
    }
    if (mask.indices.empty()) mask.indices.push_back(0);

    Eigen::VectorXd x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = g.next();
      y[i] = g.next();
    }
    const double a = g.next();
    const double b = g.next();

    const Eigen::VectorXd lhs = restrict_to(a * x + b * y, mask);
    const Eigen::VectorXd rhs = a * restrict_to(x, mask) + b * restrict_to(y, mask);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + lhs.cwiseAbs().maxCoeff()));

    CHECK(restrict_to(x, mask).cwiseAbs().maxCoeff() <= x.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("complement_indices partitions the grid") {
  SubsetMask mask;
  mask.indices = {1, 3};
  mask.parent_size = 5;
  CHECK(complement_indices(mask) == std::vector<int>{0, 2, 4});
}

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "rbfplast/nodegen.hpp"

using namespace rbfplast;

TEST(Nodegen, UnitSquareDensity) {
  const NodeSet ns = fill(Domain::rectangle(Vec2(0.0, 0.0), Vec2(1.0, 1.0)), 0.05, 1);
  EXPECT_GE(ns.size(), 280);
  EXPECT_LE(ns.size(), 520);
}

TEST(Nodegen, DifferentSeedsDifferentLayouts) {
  const Domain d = Domain::quarter_annulus(100.0, 200.0);
  const NodeSet a = fill(d, 4.0, 1), b = fill(d, 4.0, 2);
  EXPECT_NE(a.positions, b.positions);
  EXPECT_GE(oracle::min_pair_distance(a.positions), kMinSpacingFactor * 4.0 * (1 - 1e-12));
  EXPECT_GE(oracle::min_pair_distance(b.positions), kMinSpacingFactor * 4.0 * (1 - 1e-12));
}

TEST(Nodegen, Deterministic) {
  const Domain d = Domain::quarter_annulus(100.0, 200.0, irregular_cutouts(100.0, 200.0));
  const NodeSet a = fill(d, 3.0, 7), b = fill(d, 3.0, 7);
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(a.positions, b.positions);  // bit-identical
  EXPECT_EQ(a.boundary_count, b.boundary_count);
}

class FillProperties : public ::testing::TestWithParam<std::tuple<double, int>> {};

TEST_P(FillProperties, MinDistanceContainmentAndFillDistance) {
  const auto [h, cut] = GetParam();
  const Domain d = cut ? Domain::quarter_annulus(100.0, 200.0, irregular_cutouts(100.0, 200.0))
                       : Domain::quarter_annulus(100.0, 200.0);
  const NodeSet ns = fill(d, h, 3);
  ASSERT_LE(ns.size(), 5000);
  EXPECT_GE(ns.boundary_count, 3);
  EXPECT_GE(oracle::min_pair_distance(ns.positions), kMinSpacingFactor * h * (1 - 1e-12));
  for (int i = ns.boundary_count; i < ns.size(); ++i) EXPECT_TRUE(d.contains(ns.positions[i]));

  // Fill distance on a probe grid of spacing h/4.
  double fill_distance = 0.0;
  for (double x = 0.0; x <= 200.0; x += h / 4)
    for (double y = 0.0; y <= 200.0; y += h / 4) {
      const Vec2 p(x, y);
      if (!d.contains(p)) continue;
      double best = INFINITY;
      for (const Vec2& q : ns.positions) best = std::min(best, (p - q).norm());
      fill_distance = std::max(fill_distance, best);
    }
  EXPECT_LE(fill_distance, 2.0 * h);
}

INSTANTIATE_TEST_SUITE_P(Domains, FillProperties,
                         ::testing::Values(std::make_tuple(4.0, 0), std::make_tuple(3.0, 0), std::make_tuple(3.0, 1)));

TEST(Nodegen, NearestOnGridCentre) {
  const NodeSet g = oracle::grid(3, 3, 1.0);
  const auto one = nearest_neighbors(g, Vec2(1.0, 1.0), 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(g.positions[one[0]], Vec2(1.0, 1.0));
  const auto five = nearest_neighbors(g, Vec2(1.0, 1.0), 5);
  for (int k = 1; k < 5; ++k) EXPECT_NEAR((g.positions[five[k]] - Vec2(1.0, 1.0)).norm(), 1.0, 1e-15);
}

TEST(Nodegen, NearestMatchesExhaustiveScan) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  NodeSet ns;
  for (int i = 0; i < 1000; ++i) ns.positions.emplace_back(u(rng), u(rng));
  for (int q = 0; q < 50; ++q) {
    const Vec2 query(u(rng), u(rng));
    EXPECT_EQ(nearest_neighbors(ns, query, 20), oracle::knn(ns.positions, query, 20));
  }
}

TEST(Nodegen, NearestRejectsTooLargeK) {
  const NodeSet g = oracle::grid(3, 3, 1.0);
  EXPECT_THROW((void)nearest_neighbors(g, Vec2::Zero(), 10), std::invalid_argument);
}

TEST(Nodegen, LargeRunNodeCount) {
  if (!std::getenv("RBFPLAST_LONG")) GTEST_SKIP() << "set RBFPLAST_LONG=1 for the h = 0.5 mm fill";
  const NodeSet ns = fill(Domain::quarter_annulus(100.0, 200.0), 0.5, 1);
  EXPECT_NEAR(ns.size(), 95300, 9530);
}

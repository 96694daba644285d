#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "rbfplast/elastic.hpp"
#include "rbfplast/nodegen.hpp"
#include "rbfplast/verify.hpp"

using namespace rbfplast;

namespace {

constexpr double kA = 100.0, kB = 200.0, kYield = 0.24, kNu = 0.3;
const double kMu = ElasticConstants::from_young_poisson(210.0, kNu).mu;

Tensor2PS from_polar(double sr, double st, double sz, const Vec2& p) {
  const double th = std::atan2(p.y(), p.x()), c = std::cos(th), s = std::sin(th);
  return {sr * c * c + st * s * s, sr * s * s + st * c * c, sz, (sr - st) * c * s};
}

// Nodes carrying the closed-form partially plastic state with front c.
struct Synthetic {
  std::vector<Vec2> positions;
  std::vector<PointState> states;
};

Synthetic synthetic_front(double c, double rotate = 0.0) {
  const NodeSet ns = fill(Domain::quarter_annulus(kA, kB), 2.0, 1);
  Synthetic out;
  const Eigen::Rotation2Dd rot(rotate);
  for (const Vec2& p0 : ns.positions) {
    const Vec2 p = rot * p0;
    const CylinderSolution s = plastic_reference(std::clamp(p.norm(), kA, kB), c, kA, kB, kYield, kNu, kMu);
    PointState st;
    st.stress = from_polar(s.sigma_r, s.sigma_theta, s.sigma_z, p);
    st.eq_plastic_strain = p.norm() < c ? 1e-3 : 0.0;
    out.positions.push_back(p);
    out.states.push_back(st);
  }
  return out;
}

}  // namespace

TEST(Verify, ElasticReferenceExamples) {
  EXPECT_NEAR(elastic_reference(kA, 0.05, kA, kB, 210.0, kNu).sigma_r, -0.05, 1e-15);
  EXPECT_NEAR(elastic_reference(kB, 0.05, kA, kB, 210.0, kNu).sigma_r, 0.0, 1e-15);
  EXPECT_NEAR(elastic_reference(kA, 0.05, kA, kB, 210.0, kNu).sigma_theta, 0.083333333333, 1e-11);
  EXPECT_THROW((void)elastic_reference(99.0, 0.05, kA, kB, 210.0, kNu), std::domain_error);
  EXPECT_THROW((void)elastic_reference(201.0, 0.05, kA, kB, 210.0, kNu), std::domain_error);
}

TEST(Verify, ElasticReferenceSolvesLameEquations) {
  // Equilibrium d(sigma_r)/dr + (sigma_r - sigma_theta)/r = 0 and Hooke's law
  // in plane strain, checked by finite differences.
  const double p = 0.05, E = 210.0;
  const ElasticConstants ec = ElasticConstants::from_young_poisson(E, kNu);
  for (double r = 110.0; r < 195.0; r += 7.0) {
    const double d = 1e-4;
    const auto s = elastic_reference(r, p, kA, kB, E, kNu);
    const auto sp = elastic_reference(r + d, p, kA, kB, E, kNu), sm = elastic_reference(r - d, p, kA, kB, E, kNu);
    EXPECT_NEAR((sp.sigma_r - sm.sigma_r) / (2 * d) + (s.sigma_r - s.sigma_theta) / r, 0.0, 1e-9);
    const double err = (sp.u_r - sm.u_r) / (2 * d), ett = s.u_r / r;
    EXPECT_NEAR(2 * ec.mu * err + ec.lambda * (err + ett), s.sigma_r, 1e-9);
    EXPECT_NEAR(2 * ec.mu * ett + ec.lambda * (err + ett), s.sigma_theta, 1e-9);
    EXPECT_NEAR(ec.lambda * (err + ett), s.sigma_z, 1e-9);
  }
}

TEST(Verify, PlasticReferenceAtOnsetMatchesElastic) {
  const double p = onset_pressure(kA, kB, kYield);
  EXPECT_NEAR(p, kYield / std::sqrt(3.0) * 0.75, 1e-15);
  for (double r = kA; r <= kB; r += 10.0) {
    const auto pl = plastic_reference(r, kA, kA, kB, kYield, kNu, kMu);
    const auto el = elastic_reference(r, p, kA, kB, 210.0, kNu);
    EXPECT_NEAR(pl.sigma_r, el.sigma_r, 1e-14);
    EXPECT_NEAR(pl.sigma_theta, el.sigma_theta, 1e-14);
    EXPECT_NEAR(pl.sigma_z, el.sigma_z, 1e-14);
    EXPECT_NEAR(pl.u_r, el.u_r, 1e-12);
  }
  // Yield is reached exactly at the bore.
  const auto s = plastic_reference(kA, kA, kA, kB, kYield, kNu, kMu);
  EXPECT_NEAR(s.sigma_theta - s.sigma_r, 2.0 * shear_yield(kYield), 1e-14);
}

TEST(Verify, PlasticReferenceContinuousAtFront) {
  for (double c : {120.0, 150.0, 182.89}) {
    const auto in = plastic_reference(c * (1 - 1e-15), c, kA, kB, kYield, kNu, kMu);
    const auto out = plastic_reference(c, c, kA, kB, kYield, kNu, kMu);
    EXPECT_NEAR(in.sigma_r, out.sigma_r, 1e-12 * std::abs(out.sigma_r));
    EXPECT_NEAR(in.sigma_theta, out.sigma_theta, 1e-12 * std::abs(out.sigma_theta));
    // Bore pressure equals the front relation.
    EXPECT_NEAR(-plastic_reference(kA, c, kA, kB, kYield, kNu, kMu).sigma_r, pressure_for_front(c, kA, kB, kYield),
                1e-14);
  }
  EXPECT_THROW((void)plastic_reference(150.0, 250.0, kA, kB, kYield, kNu, kMu), std::domain_error);
}

TEST(Verify, FrontFromPressureBenchmarks) {
  EXPECT_NEAR(front_from_pressure(0.19, kA, kB, kYield).c, 182.89, 0.05);
  EXPECT_NEAR(limit_pressure(kA, kB, kYield), 0.19209, 1e-4);
  const FrontRadius onset = front_from_pressure(onset_pressure(kA, kB, kYield), kA, kB, kYield);
  EXPECT_TRUE(onset.below_onset);
  EXPECT_EQ(onset.c, kA);
  EXPECT_NEAR(front_from_pressure(onset_pressure(kA, kB, kYield) * (1 + 1e-9), kA, kB, kYield).c, kA, 1e-3);
  EXPECT_THROW((void)front_from_pressure(0.2, kA, kB, kYield), std::domain_error);
}

TEST(Verify, FrontFromPressureMonotone) {
  double prev = kA;
  for (double p = 0.105; p < 0.192; p += 0.002) {
    const double c = front_from_pressure(p, kA, kB, kYield).c;
    EXPECT_GT(c, prev);
    EXPECT_NEAR(pressure_for_front(c, kA, kB, kYield), p, 1e-9);
    prev = c;
  }
}

TEST(Verify, CylindricalComponents) {
  const Tensor2PS s{0.1, -0.2, 0.05, 0.03};
  const auto c0 = to_cylindrical(s, Vec2(5.0, 0.0));
  EXPECT_DOUBLE_EQ(c0.r, 0.1);
  EXPECT_DOUBLE_EQ(c0.theta, -0.2);
  EXPECT_DOUBLE_EQ(c0.z, 0.05);
  const auto h = to_cylindrical(Tensor2PS::identity(0.3), Vec2(1.0, 2.0));
  EXPECT_NEAR(h.r, 0.3, 1e-15);
  EXPECT_NEAR(h.theta, 0.3, 1e-15);
  const auto sh = to_cylindrical({0.0, 0.0, 0.0, 0.2}, Vec2(1.0, 1.0));
  EXPECT_NEAR(sh.r, 0.2, 1e-15);
  EXPECT_NEAR(sh.theta, -0.2, 1e-15);
  EXPECT_THROW((void)to_cylindrical(s, Vec2::Zero()), std::domain_error);
}

TEST(Verify, ErrorNorm) {
  const std::vector<Vec2> u = {Vec2(1.0, 2.0), Vec2(3.0, 4.0), Vec2(0.0, 0.0), Vec2(1.0, 1.0)};
  EXPECT_EQ(error_norm(u, u).l2, 0.0);
  std::vector<Vec2> v = u;
  v[1] += Vec2(0.3, -0.4);
  EXPECT_NEAR(error_norm(v, u).l2, 0.5, 1e-15);
  EXPECT_NEAR(error_norm(v, u).l2_normalized, 0.25, 1e-15);
  EXPECT_THROW((void)error_norm(v, std::vector<Vec2>(3)), std::invalid_argument);
}

TEST(Verify, FitReproducesProfileFunctions) {
  std::vector<double> r, q;
  for (int i = 0; i < 50; ++i) {
    r.push_back(100.0 + 2.0 * i);
    q.push_back(3.0 / r.back() - 40.0 / (r.back() * r.back()) + 0.2 * std::log(1.0 / r.back()) + 0.7);
  }
  const FrontFit fit = fit_front_profile(r, q);
  for (std::size_t i = 0; i < r.size(); ++i) EXPECT_NEAR(fit(r[i]), q[i], 1e-12);
  EXPECT_LE(fit.rms_residual, 1e-12);
}

TEST(Verify, ExtractFrontFromSyntheticCrossing) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> rad(kA, kB);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::vector<double> r, q, e;
  const double c = 150.0;
  for (int i = 0; i < 2000; ++i) {
    const double x = rad(rng);
    const double s = plastic_reference(x, c, kA, kB, kYield, kNu, kMu).sigma_theta;
    r.push_back(x);
    q.push_back(s * (1.0 + noise(rng)));
    e.push_back(x < c ? 1e-3 : 0.0);
  }
  const FrontEstimate est = extract_front(r, q, e);
  EXPECT_NEAR(est.c, c, 0.5);
  EXPECT_GT(est.plastic_count, 0);
  EXPECT_GT(est.elastic_count, 0);

  // Uniform scaling of the fitted quantity leaves the crossing unchanged.
  std::vector<double> scaled = q;
  for (double& v : scaled) v *= 3.7;
  EXPECT_NEAR(extract_front(r, scaled, e).c, est.c, 1e-8);
}

TEST(Verify, ExtractFrontUsesClassesSeparately) {
  // Tagging fewer than the minimum per class fails.
  std::vector<double> r(30), q(30), e(30, 0.0);
  for (int i = 0; i < 30; ++i) r[i] = 100.0 + 3 * i, q[i] = 1.0 / r[i];
  e[0] = 1.0;
  EXPECT_THROW((void)extract_front(r, q, e), FrontNotLocalizedError);
}

TEST(Verify, ExtractFrontFromClosedFormField) {
  const Synthetic s = synthetic_front(160.0);
  EXPECT_NEAR(extract_front(s.positions, s.states).c, 160.0, 1.0);
}

TEST(Verify, FrontShapeSingleSegmentEqualsFullFit) {
  const Synthetic s = synthetic_front(170.0);
  const auto one = front_shape(s.positions, s.states, 1);
  ASSERT_EQ(one.size(), 1u);
  ASSERT_TRUE(one[0].ok);
  EXPECT_DOUBLE_EQ(one[0].c, extract_front(s.positions, s.states).c);
}

TEST(Verify, FrontShapeOfAxisymmetricFieldIsCircular) {
  const Synthetic s = synthetic_front(170.0);
  const auto segs = front_shape(s.positions, s.states, 20);
  ASSERT_EQ(segs.size(), 20u);
  for (const SegmentFront& f : segs) {
    ASSERT_TRUE(f.ok);
    EXPECT_NEAR(f.c, 170.0, 1.7);
  }
  EXPECT_NEAR(segs.front().angle, std::numbers::pi / 80.0, 1e-15);
}

TEST(Verify, FrontShapeInvariantUnderRotation) {
  const Synthetic s = synthetic_front(170.0);
  const Synthetic rotated = synthetic_front(170.0, std::numbers::pi / 2.0);
  auto radii = [](const std::vector<SegmentFront>& v) {
    std::vector<double> out;
    for (const SegmentFront& f : v) out.push_back(f.c);
    std::sort(out.begin(), out.end());
    return out;
  };
  const auto a = radii(front_shape(s.positions, s.states, 20));
  const auto b = radii(front_shape(rotated.positions, rotated.states, 20, std::numbers::pi / 2.0, std::numbers::pi));
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-6);
}

TEST(Verify, SparseSegmentFlaggedNotFailed) {
  const Synthetic s = synthetic_front(170.0);
  const auto segs = front_shape(s.positions, s.states, 2000);
  EXPECT_TRUE(std::any_of(segs.begin(), segs.end(), [](const SegmentFront& f) { return !f.ok; }));
}

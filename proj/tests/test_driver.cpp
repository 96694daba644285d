#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rbfplast/driver.hpp"
#include "rbfplast/verify.hpp"

using namespace rbfplast;

namespace {

constexpr double kA = 100.0, kB = 200.0;
const ElasticConstants kSteel = ElasticConstants::from_young_poisson(210.0, 0.3);
const Domain kCylinder = Domain::quarter_annulus(kA, kB);

// Cylinder discretization with the stabilized weights.
struct Problem {
  NodeSet nodes;
  WeightStore ws;
  BoundaryConditionSet bcs;
  std::unique_ptr<ElasticSolver> solver;

  Problem(double h, double pressure, std::uint64_t seed = 1)
      : nodes(fill(kCylinder, h, seed)), ws(build_weights(kCylinder, nodes, BasisConfig{})) {
    bcs = pressure_bcs(kCylinder, nodes, pressure, ws.planes());
    solver = std::make_unique<ElasticSolver>(nodes, ws, kSteel, bcs);
  }
  RunReport run(const HardeningCurve& curve, double pressure, int steps, SolverConfig cfg = {},
                const IterationObserver& obs = {}) const {
    BoundaryConditionSet load = pressure_bcs(kCylinder, nodes, pressure, ws.planes());
    return rbfplast::run(kCylinder, nodes, ws, *solver, kSteel, curve, load, LoadProgram{pressure, steps}, cfg, obs);
  }
};

struct EdgeAverages {
  double u_inner = 0, u_outer = 0, vm_inner = 0, vm_outer = 0;
};

EdgeAverages edge_averages(const NodeSet& ns, const RunReport& rep) {
  EdgeAverages e;
  int na = 0, nb = 0;
  for (int i = 0; i < ns.boundary_count; ++i) {
    if (ns.tags[i] == BoundaryTag::InnerPressure)
      e.u_inner += rep.displacement[i].norm(), e.vm_inner += von_mises(rep.states[i].stress), ++na;
    if (ns.tags[i] == BoundaryTag::OuterFree)
      e.u_outer += rep.displacement[i].norm(), e.vm_outer += von_mises(rep.states[i].stress), ++nb;
  }
  e.u_inner /= na, e.vm_inner /= na, e.u_outer /= nb, e.vm_outer /= nb;
  return e;
}

std::vector<Tensor2PS> uniform_stress(int m, const Tensor2PS& s) { return std::vector<Tensor2PS>(m, s); }

}  // namespace

TEST(Driver, LoadProgramFractions) {
  const LoadProgram lp{0.19, 25};
  EXPECT_DOUBLE_EQ(lp.fraction(25), 1.0);
  EXPECT_DOUBLE_EQ(lp.fraction(1) * lp.pressure, 0.19 / 25);
}

TEST(Driver, SolverConfigValidation) {
  SolverConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.tolerance = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Driver, PressureBoundaryConditions) {
  const NodeSet ns = fill(kCylinder, 4.0, 1);
  const BoundaryConditionSet bcs = pressure_bcs(kCylinder, ns, 0.1, kCylinder.symmetry_planes());
  ASSERT_EQ(static_cast<int>(bcs.nodes.size()), ns.boundary_count);
  for (int i = 0; i < ns.boundary_count; ++i) {
    const Vec2& p = ns.positions[i];
    const NodeBc& bc = bcs.nodes[i];
    if (std::abs(p.x()) < 1e-9) EXPECT_EQ(bc.x.mode, BcMode::Essential);
    if (std::abs(p.y()) < 1e-9) EXPECT_EQ(bc.y.mode, BcMode::Essential);
    if (ns.tags[i] == BoundaryTag::InnerPressure && std::abs(p.x()) > 1e-9 && std::abs(p.y()) > 1e-9) {
      EXPECT_EQ(bc.x.mode, BcMode::Traction);
      EXPECT_NEAR(bc.x.value, 0.1 * p.x() / kA, 1e-12);  // inward normal, pressure pushes outward
      EXPECT_NEAR(bc.y.value, 0.1 * p.y() / kA, 1e-12);
    }
    if (ns.tags[i] == BoundaryTag::SymmetryX) EXPECT_EQ(bc.y.mode, BcMode::Symmetry);
    if (ns.tags[i] == BoundaryTag::SymmetryY) EXPECT_EQ(bc.x.mode, BcMode::Symmetry);
  }
  // Without mirrored weights the tangential component is traction free.
  const BoundaryConditionSet plain = pressure_bcs(kCylinder, ns, 0.1);
  for (int i = 0; i < ns.boundary_count; ++i)
    if (ns.tags[i] == BoundaryTag::SymmetryX) EXPECT_EQ(plain.nodes[i].y.mode, BcMode::Traction);
}

TEST(Driver, ResiduumOfUniformStressVanishes) {
  const NodeSet ns = fill(kCylinder, 4.0, 1);
  const WeightStore ws = build_weights(ns, BasisConfig{});
  const auto r = compute_residuum(ns, ws, uniform_stress(ws.node_count(), {0.1, -0.2, 0.05, 0.07}));
  for (const Vec2& v : r) EXPECT_LE(v.norm(), 1e-10);
}

TEST(Driver, ResiduumOfLinearStress) {
  const NodeSet ns = fill(kCylinder, 4.0, 1);
  const WeightStore ws = build_weights(ns, BasisConfig{});
  std::vector<Tensor2PS> s(ws.node_count());
  for (int i = 0; i < ns.size(); ++i) s[i].xx = ns.positions[i].x();
  const auto r = compute_residuum(ns, ws, s);
  for (int i = 0; i < ns.size(); ++i) {
    if (ns.is_boundary(i)) {
      EXPECT_EQ(r[i].norm(), 0.0);
      continue;
    }
    EXPECT_NEAR(r[i].x(), 1.0, 1e-8);
    EXPECT_NEAR(r[i].y(), 0.0, 1e-8);
  }
}

TEST(Driver, BoundaryResidualIsPartialLoadOnFirstPass) {
  const NodeSet ns = fill(kCylinder, 4.0, 1);
  const BoundaryConditionSet full = pressure_bcs(kCylinder, ns, 0.19);
  const std::vector<Tensor2PS> zero(ns.size());
  const std::vector<Vec2> u(ns.size(), Vec2::Zero());
  const auto r = boundary_residual(ns, full, zero, u, 1.0 / 25.0);
  for (int i = 0; i < ns.boundary_count; ++i)
    for (int c = 0; c < 2; ++c)
      if (full.nodes[i][c].mode == BcMode::Traction) EXPECT_NEAR(r[i][c], full.nodes[i][c].value / 25.0, 1e-15);
}

TEST(Driver, ElasticPresetConvergesInOnePass) {
  const Problem s(4.0, 0.05);
  int observed = 0;
  const RunReport rep = s.run(HardeningCurve::perfect(0.24), 0.05, 1, {}, [&](int, int, double) { ++observed; });
  ASSERT_EQ(rep.steps.size(), 1u);
  EXPECT_EQ(rep.steps[0].iterations, 1);
  EXPECT_EQ(rep.total_return_mappings(), 0);
  EXPECT_EQ(observed, 2);
  for (const PointState& st : rep.states) EXPECT_EQ(st.eq_plastic_strain, 0.0);
  EXPECT_LE(rep.steps[0].final_residual, 1e-6);
}

TEST(Driver, ConvergedElasticStateHasSmallConsistentResidual) {
  const Problem s(4.0, 0.05);
  const RunReport rep = s.run(HardeningCurve::perfect(0.24), 0.05, 1);
  const double tol = SolverConfig{}.tolerance;
  // Rebuild the full-point fields by one more solve from the converged boundary data.
  std::vector<Vec2> brhs(s.nodes.boundary_count);
  for (int i = 0; i < s.nodes.boundary_count; ++i) brhs[i] = Vec2(s.bcs.nodes[i].x.value, s.bcs.nodes[i].y.value);
  const VectorField u = s.solver->solve(VectorField(s.nodes.size(), Vec2::Zero()), brhs);
  const auto eps = strain_from_displacement(s.ws, u);
  std::vector<Tensor2PS> stress(eps.size());
  for (std::size_t k = 0; k < eps.size(); ++k) stress[k] = stress_from_elastic_strain(kSteel, eps[k]);
  const VectorField r = consistent_residuum(s.nodes, s.ws, *s.solver, kSteel, u, stress);
  const double ref = 0.24 / kCylinder.characteristic_length();
  for (const Vec2& v : r) EXPECT_LE(v.norm() / ref, 10 * tol);
  for (int i = 0; i < s.nodes.size(); ++i) EXPECT_LE((u[i] - rep.displacement[i]).norm(), 1e-12);
}

TEST(Driver, ElasticCylinderMatchesClosedForm) {
  const Problem s(4.0, 0.05);
  const RunReport rep = s.run(HardeningCurve::perfect(0.24), 0.05, 1);
  double worst = 0.0;
  for (int i = 0; i < s.nodes.size(); ++i) {
    const Vec2& p = s.nodes.positions[i];
    const double ur = elastic_reference(std::clamp(p.norm(), kA, kB), 0.05, kA, kB, 210.0, 0.3).u_r;
    worst = std::max(worst, (rep.displacement[i] - ur * p.normalized()).norm() / ur);
  }
  EXPECT_LE(worst, 0.01);
}

TEST(Driver, PlasticCylinderMatchesRadialOracle) {
  const double p = 0.17;
  const Problem s(2.0, p);
  const RunReport rep = s.run(HardeningCurve::perfect(0.24), p, 10, {.tolerance = 1e-6, .max_picard_iterations = 5000});
  const oracle::RadialResult ref = oracle::radial_fe(kA, kB, p, 10, HardeningCurve::perfect(0.24), kSteel);
  ASSERT_TRUE(ref.converged);
  const EdgeAverages e = edge_averages(s.nodes, rep);
  EXPECT_NEAR(e.u_inner, ref.u_inner, 0.01 * ref.u_inner);
  EXPECT_NEAR(e.u_outer, ref.u_outer, 0.01 * ref.u_outer);
  EXPECT_NEAR(e.vm_inner, 0.24, 1e-9);
  EXPECT_NEAR(e.vm_outer, ref.vm_outer, 0.01 * ref.vm_outer);
}

TEST(Driver, RadialOracleReproducesClosedForm) {
  // The oracle itself: elastic and partially plastic closed forms.
  const oracle::RadialResult el = oracle::radial_fe(kA, kB, 0.05, 1, HardeningCurve::perfect(0.24), kSteel);
  EXPECT_NEAR(el.u_inner, elastic_reference(kA, 0.05, kA, kB, 210.0, 0.3).u_r, 1e-6);
  const double p = 0.17;
  const oracle::RadialResult pl = oracle::radial_fe(kA, kB, p, 10, HardeningCurve::perfect(0.24), kSteel);
  EXPECT_NEAR(pl.front, front_from_pressure(p, kA, kB, 0.24).c, 3.0);
}

TEST(Driver, ConvergedStepsRespectToleranceAndPlasticStrainGrows) {
  const double p = 0.17;
  const Problem s(4.0, p);
  const HardeningCurve curve = HardeningCurve::linear(0.24, 10.0);
  SolverConfig cfg;
  cfg.max_picard_iterations = 5000;
  std::vector<double> step6;
  const RunReport full = s.run(curve, p, 10, cfg, [&](int step, int, double r) {
    if (step == 6) step6.push_back(r);
  });
  for (const StepReport& st : full.steps) {
    EXPECT_LE(st.final_residual, cfg.tolerance);
    EXPECT_EQ(st.residual_history.back(), st.final_residual);
  }
  // Step 6 residual trace ends below 1e-6.
  ASSERT_GT(step6.size(), 2u);
  EXPECT_LE(step6.back(), 1e-6);
  EXPECT_LT(step6.back(), step6.front());

  // The first half of the program, applied alone, reaches the same states as
  // step 5 of the full program; plastic strain never decreases afterwards.
  const RunReport half = s.run(curve, p / 2.0, 5, cfg);
  for (int i = 0; i < s.nodes.size(); ++i)
    EXPECT_LE(half.states[i].eq_plastic_strain, full.states[i].eq_plastic_strain + 1e-15);
}

TEST(Driver, JmaxExceededReportsHistory) {
  const Problem s(4.0, 0.19);
  SolverConfig cfg;
  cfg.max_picard_iterations = 3;
  try {
    (void)s.run(HardeningCurve::perfect(0.24), 0.19, 5, cfg);
    FAIL() << "expected divergence";
  } catch (const PicardDivergenceError& e) {
    EXPECT_GE(e.step(), 1);
    EXPECT_EQ(e.history().size(), 4u);
  }
}

TEST(Driver, RejectsMismatchedInputs) {
  const Problem s(4.0, 0.05);
  const NodeSet other = fill(kCylinder, 6.0, 1);
  EXPECT_THROW((void)rbfplast::run(kCylinder, other, s.ws, *s.solver, kSteel, HardeningCurve::perfect(0.24), s.bcs,
                                   LoadProgram{0.05, 1}, SolverConfig{}),
               std::invalid_argument);
  EXPECT_THROW((void)s.run(HardeningCurve::perfect(0.24), 0.05, 0), std::invalid_argument);
}

#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "elastic.hpp"
#include "geometry.hpp"
#include "material.hpp"

namespace rbfplast {

struct LoadProgram {
  double pressure = 0.0;  // total inner-wall pressure [GPa]
  int steps = 1;          // N_load

  double fraction(int step) const { return static_cast<double>(step) / steps; }
};

/// How the out-of-balance body force at interior nodes is measured.
///
/// Direct: the RBF-FD divergence of the current stress field.
/// Consistent: the same quantity split as div(D eps(u)) - div(sigma_p) with
/// sigma_p = D eps(u) - sigma; the first term is taken from the assembled
/// second-derivative operator. Both agree in the continuum limit; only the
/// consistent form vanishes identically for a purely elastic state.
enum class ResidualForm { Direct, Consistent };

struct SolverConfig {
  double tolerance = 1e-6;  // Picard and return-mapping tolerance
  int max_return_iterations = 100;
  int max_picard_iterations = 500;
  ResidualForm residual_form = ResidualForm::Consistent;
  // Anderson mixing over the last `anderson_depth` corrections; 0 is plain Picard.
  int anderson_depth = 0;
  // Number of times a load increment may be halved after a failed solve.
  int max_cutbacks = 0;

  void validate() const {
    if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
    if (max_return_iterations < 1) throw std::invalid_argument("return-mapping iteration cap must be >= 1");
    if (max_picard_iterations < 1) throw std::invalid_argument("Picard iteration cap must be >= 1");
    if (anderson_depth < 0) throw std::invalid_argument("Anderson depth must be >= 0");
    if (max_cutbacks < 0) throw std::invalid_argument("cutback count must be >= 0");
  }
};

struct StepReport {
  int iterations = 0;  // correction solves, summed over sub-increments
  double final_residual = 0.0;
  std::vector<double> residual_history;  // every pass of every attempt, in order
  int return_mappings = 0;               // node-level return-mapping calls of accepted passes
  int substeps = 1;                      // sub-increments after cutbacks
};

struct RunReport {
  std::vector<StepReport> steps;
  VectorField displacement;
  std::vector<PointState> states;

  double average_iterations() const {
    if (steps.empty()) return 0.0;
    double s = 0.0;
    for (const auto& st : steps) s += st.iterations;
    return s / static_cast<double>(steps.size());
  }
  int total_return_mappings() const {
    int s = 0;
    for (const auto& st : steps) s += st.return_mappings;
    return s;
  }
};

class PicardDivergenceError : public std::runtime_error {
 public:
  PicardDivergenceError(int step, std::vector<double> history, const std::string& reason = "")
      : std::runtime_error("Picard iteration did not converge in load step " + std::to_string(step) + " (" +
                           (reason.empty() ? "final residual " +
                                                 (history.empty() ? std::string("n/a") : std::to_string(history.back()))
                                           : reason) +
                           ")"),
        step_(step),
        history_(std::move(history)) {}
  int step() const { return step_; }
  const std::vector<double>& history() const { return history_; }

 private:
  int step_;
  std::vector<double> history_;
};

/// Boundary conditions of the pressurised cylinder and its variants: rollers
/// on the symmetry edges, pressure on InnerPressure pieces, traction-free
/// elsewhere. Values correspond to the full load `pressure`.
///
/// Nodes on a symmetry plane of the domain, corners included, have the
/// plane-normal displacement fixed. The tangential component of symmetry-edge
/// nodes uses BcMode::Symmetry when the weights are mirrored across that plane
/// (`mirrored`), a zero traction otherwise.
inline BoundaryConditionSet pressure_bcs(const Domain& domain, const NodeSet& nodes, double pressure,
                                         const MirrorPlanes& mirrored = {}) {
  const MirrorPlanes rollers = domain.symmetry_planes();
  const double tol = 1e-9 * domain.characteristic_length();
  BoundaryConditionSet bcs;
  bcs.nodes.resize(nodes.boundary_count);
  for (int i = 0; i < nodes.boundary_count; ++i) {
    const Vec2& n = nodes.normals[i];
    const Vec2& p = nodes.positions[i];
    NodeBc& bc = bcs.nodes[i];
    switch (nodes.tags[i]) {
      case BoundaryTag::SymmetryX:
        bc.x = {BcMode::Essential, 0.0};
        bc.y = {mirrored.x ? BcMode::Symmetry : BcMode::Traction, 0.0};
        break;
      case BoundaryTag::SymmetryY:
        bc.x = {mirrored.y ? BcMode::Symmetry : BcMode::Traction, 0.0};
        bc.y = {BcMode::Essential, 0.0};
        break;
      case BoundaryTag::InnerPressure:
        bc.x = {BcMode::Traction, -pressure * n.x()};
        bc.y = {BcMode::Traction, -pressure * n.y()};
        break;
      case BoundaryTag::OuterFree:
      case BoundaryTag::CutoutFree:
        bc.x = {BcMode::Traction, 0.0};
        bc.y = {BcMode::Traction, 0.0};
        break;
    }
    if (rollers.x && std::abs(p.x()) <= tol) bc.x = {BcMode::Essential, 0.0};
    if (rollers.y && std::abs(p.y()) <= tol) bc.y = {BcMode::Essential, 0.0};
  }
  return bcs;
}

/// Divergence of the stress field at interior nodes, the body force that
/// restores equilibrium when fed to the elastic operator; zero on the boundary.
/// `stress` is given at every point of the weight store.
inline VectorField compute_residuum(const NodeSet& nodes, const WeightStore& ws, std::span<const Tensor2PS> stress) {
  if (static_cast<int>(stress.size()) != ws.node_count()) throw std::invalid_argument("stress field size mismatch");
  VectorField r(nodes.size(), Vec2::Zero());
  for (int i = nodes.boundary_count; i < nodes.size(); ++i) r[i] = stress_divergence(ws, i, stress);
  return r;
}

/// Out-of-balance body force at every node with a collocated governing
/// equation (interior nodes, boundary nodes carrying a ghost or a symmetry
/// component); components without such a row are zero.
inline VectorField equilibrium_residual(const NodeSet& nodes, const WeightStore& ws, const ElasticSolver& solver,
                                        const ElasticConstants& ec, std::span<const Vec2> u,
                                        std::span<const Tensor2PS> stress, ResidualForm form) {
  const int n = nodes.size(), m = ws.node_count();
  VectorField r(n, Vec2::Zero());
  std::vector<Tensor2PS> plastic_stress;
  VectorField ku;
  if (form == ResidualForm::Consistent) {
    const std::vector<Tensor2PS> total_strain = strain_from_displacement(ws, u);
    plastic_stress.resize(m);
    for (int k = 0; k < m; ++k) plastic_stress[k] = stress_from_elastic_strain(ec, total_strain[k]) - stress[k];
    ku = solver.apply(u);
  }
  for (int i = 0; i < n; ++i) {
    const int rx = solver.equation_row(i, 0), ry = solver.equation_row(i, 1);
    if (rx < 0 && ry < 0) continue;
    Vec2 f;
    if (form == ResidualForm::Direct) {
      f = stress_divergence(ws, i, stress);
    } else {
      const Vec2 div_p = stress_divergence(ws, i, plastic_stress);
      f = Vec2(rx < 0 ? 0.0 : ku[rx % m].x() - div_p.x(), ry < 0 ? 0.0 : ku[ry % m].y() - div_p.y());
    }
    r[i] = Vec2(rx < 0 ? 0.0 : f.x(), ry < 0 ? 0.0 : f.y());
  }
  return r;
}

/// Consistent form of the interior residual, see ResidualForm.
inline VectorField consistent_residuum(const NodeSet& nodes, const WeightStore& ws, const ElasticSolver& solver,
                                       const ElasticConstants& ec, std::span<const Vec2> u,
                                       std::span<const Tensor2PS> stress) {
  VectorField r = equilibrium_residual(nodes, ws, solver, ec, u, stress, ResidualForm::Consistent);
  for (int i = 0; i < nodes.boundary_count; ++i) r[i] = Vec2::Zero();
  return r;
}

/// Right-hand side of the next correction solve on the boundary: target
/// traction at load fraction `frac` minus the current sigma.n on traction
/// components, target displacement minus the current one on essential
/// components (zero once an essential value has been reached), zero on
/// symmetry components.
inline VectorField boundary_residual(const NodeSet& nodes, const BoundaryConditionSet& full_load,
                                     std::span<const Tensor2PS> stress, std::span<const Vec2> u, double frac) {
  VectorField out(nodes.boundary_count, Vec2::Zero());
  for (int i = 0; i < nodes.boundary_count; ++i) {
    const NodeBc& bc = full_load.nodes[i];
    const Vec2 t = traction(stress[i], nodes.normals[i]);
    for (int c = 0; c < 2; ++c) {
      switch (bc[c].mode) {
        case BcMode::Essential: out[i][c] = frac * bc[c].value - u[i][c]; break;
        case BcMode::Traction: out[i][c] = frac * bc[c].value - t[c]; break;
        case BcMode::Symmetry: break;
      }
    }
  }
  return out;
}

/// Observer invoked after every residual evaluation with (step, pass, residual).
using IterationObserver = std::function<void(int, int, double)>;

namespace detail {

inline Eigen::VectorXd pack(std::span<const Vec2> v) {
  const Eigen::Index n = static_cast<Eigen::Index>(v.size());
  Eigen::VectorXd x(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = v[i].x(), x[n + i] = v[i].y();
  return x;
}

inline VectorField unpack(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size() / 2;
  VectorField v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = Vec2(x[i], x[n + i]);
  return v;
}

// Type-II Anderson mixing on the correction sequence g_k = G(x_k) - x_k.
class AndersonMixer {
 public:
  explicit AndersonMixer(int depth) : depth_(depth) {}

  Eigen::VectorXd next(const Eigen::VectorXd& x, const Eigen::VectorXd& g) {
    if (depth_ == 0) return x + g;
    if (has_prev_) {
      dx_.push_back(x - x_prev_);
      dg_.push_back(g - g_prev_);
      if (static_cast<int>(dx_.size()) > depth_) dx_.pop_front(), dg_.pop_front();
    }
    x_prev_ = x;
    g_prev_ = g;
    has_prev_ = true;
    if (dx_.empty()) return x + g;
    const Eigen::Index m = static_cast<Eigen::Index>(dx_.size());
    Eigen::MatrixXd dg(g.size(), m), dx(g.size(), m);
    for (Eigen::Index k = 0; k < m; ++k) dg.col(k) = dg_[k], dx.col(k) = dx_[k];
    const Eigen::VectorXd gamma = dg.colPivHouseholderQr().solve(g);
    return x + g - (dx + dg) * gamma;
  }

 private:
  int depth_;
  bool has_prev_ = false;
  Eigen::VectorXd x_prev_, g_prev_;
  std::deque<Eigen::VectorXd> dx_, dg_;
};

struct IncrementResult {
  bool converged = false;
  std::string failure;
  int solves = 0;
  int return_mappings = 0;
  double residual = 0.0;
};

}  // namespace detail

/// Incremental loading with Picard iteration on a prefactorized elastic
/// operator.
///
/// Each pass evaluates the trial state of every point from the state converged
/// at the start of the increment plus the strain of the displacement increment,
/// return-maps points that violate the yield condition, and measures the
/// residual norm: the larger of max_i |dr_i| / (sigma_y0 / L) over nodes with a
/// collocated governing equation and max |t_target - sigma.n| / sigma_y0 over
/// traction components, L being the domain's characteristic length. Unless
/// converged, the residual drives an elastic correction solve.
///
/// The report holds displacement and state at the nodes only; ghost points
/// are dropped.
inline RunReport run(const Domain& domain, const NodeSet& nodes, const WeightStore& ws, const ElasticSolver& solver,
                     const ElasticConstants& ec, const HardeningCurve& curve, const BoundaryConditionSet& full_load,
                     const LoadProgram& load, const SolverConfig& cfg, const IterationObserver& observer = {}) {
  if (load.steps < 1) throw std::invalid_argument("N_load must be >= 1");
  cfg.validate();
  if (solver.node_count() != nodes.size() || ws.real_count() != nodes.size() ||
      solver.point_count() != ws.node_count())
    throw std::invalid_argument("solver, weights and nodes disagree in size");
  const int n = nodes.size();
  const int m = ws.node_count();
  const double stress_ref = curve.initial_yield();
  const double body_ref = stress_ref / domain.characteristic_length();

  RunReport report;
  VectorField u_conv(m, Vec2::Zero());
  std::vector<PointState> conv(m), trial(m);
  std::vector<Tensor2PS> stress(m);

  // Solves one load increment ending at `frac`; on success `trial` and `u` hold
  // the converged state.
  auto solve_increment = [&](int step, double frac, VectorField& u, StepReport& sr) {
    detail::IncrementResult res;
    detail::AndersonMixer mixer(cfg.anderson_depth);
    u = u_conv;
    for (int pass = 0;; ++pass) {
      VectorField du(m);
      for (int k = 0; k < m; ++k) du[k] = u[k] - u_conv[k];
      const std::vector<Tensor2PS> deps = strain_from_displacement(ws, du);
      int rm = 0;
      try {
        for (int k = 0; k < m; ++k) {
          PointState s = conv[k];
          s.elastic_strain += deps[k];
          s.stress = stress_from_elastic_strain(ec, s.elastic_strain);
          const double vm = von_mises(s.stress);
          if (vm - curve.yield_stress(s.eq_plastic_strain) > 0.0) {
            const double dg =
                return_mapping(vm, s.eq_plastic_strain, curve, ec.mu, cfg.max_return_iterations, cfg.tolerance);
            s = update_state(s, dg, ec.mu);
            ++rm;
          }
          trial[k] = s;
          stress[k] = s.stress;
        }
      } catch (const ReturnMappingError& e) {
        res.failure = e.what();
        return res;
      }

      const VectorField body = equilibrium_residual(nodes, ws, solver, ec, u, stress, cfg.residual_form);
      const VectorField brhs = boundary_residual(nodes, full_load, stress, u, frac);
      double interior = 0.0, boundary = 0.0;
      for (int i = 0; i < n; ++i) interior = std::max(interior, body[i].norm());
      for (int i = 0; i < nodes.boundary_count; ++i) {
        const NodeBc& bc = full_load.nodes[i];
        const double rx = bc.x.mode == BcMode::Traction ? brhs[i].x() : 0.0;
        const double ry = bc.y.mode == BcMode::Traction ? brhs[i].y() : 0.0;
        boundary = std::max(boundary, std::hypot(rx, ry));
      }
      const double r = std::max(interior / body_ref, boundary / stress_ref);
      sr.residual_history.push_back(r);
      if (observer) observer(step, static_cast<int>(sr.residual_history.size()), r);
      res.residual = r;
      res.return_mappings += rm;
      if (!std::isfinite(r)) {
        res.failure = "non-finite residual";
        return res;
      }
      if (r <= cfg.tolerance) {
        res.converged = true;
        return res;
      }
      if (pass >= cfg.max_picard_iterations) {
        res.failure = "J_max exceeded, residual " + std::to_string(r);
        return res;
      }
      const VectorField correction = solver.solve(body, brhs);
      ++res.solves;
      u = detail::unpack(mixer.next(detail::pack(u), detail::pack(correction)));
    }
  };

  VectorField u(m);
  for (int step = 1; step <= load.steps; ++step) {
    StepReport sr;
    sr.substeps = 0;
    const double target = load.fraction(step);
    double done = load.fraction(step - 1);
    double inc = target - done;
    int cuts = 0;
    while (done < target) {
      const double frac = std::min(target, done + inc);
      const detail::IncrementResult res = solve_increment(step, frac, u, sr);
      sr.iterations += res.solves;
      if (!res.converged) {
        if (cuts >= cfg.max_cutbacks) throw PicardDivergenceError(step, sr.residual_history, res.failure);
        ++cuts;
        inc *= 0.5;
        continue;
      }
      conv = trial;
      u_conv = u;
      sr.return_mappings += res.return_mappings;
      sr.final_residual = res.residual;
      ++sr.substeps;
      done = frac == target ? target : frac;
    }
    report.steps.push_back(std::move(sr));
  }
  report.displacement.assign(u_conv.begin(), u_conv.begin() + n);
  report.states.assign(conv.begin(), conv.begin() + n);
  return report;
}

inline RunReport run(const Domain& domain, const NodeSet& nodes, const WeightStore& ws, const ElasticConstants& ec,
                     const HardeningCurve& curve, const BoundaryConditionSet& full_load, const LoadProgram& load,
                     const SolverConfig& cfg, const IterationObserver& observer = {}) {
  const ElasticSolver solver(nodes, ws, ec, full_load);
  return run(domain, nodes, ws, solver, ec, curve, full_load, load, cfg, observer);
}

}  // namespace rbfplast

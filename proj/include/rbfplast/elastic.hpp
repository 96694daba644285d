#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <stdexcept>
#include <vector>

#include "approx.hpp"
#include "linsys.hpp"
#include "tensor.hpp"

namespace rbfplast {

struct ElasticConstants {
  double young = 0.0;    // E [GPa]
  double poisson = 0.0;  // nu
  double lambda = 0.0;   // [GPa]
  double mu = 0.0;       // [GPa]

  static ElasticConstants from_young_poisson(double e, double nu) {
    if (!(e > 0.0)) throw std::invalid_argument("Young's modulus must be positive");
    if (!(nu > 0.0 && nu < 0.5)) throw std::invalid_argument("Poisson ratio must lie in (0, 0.5)");
    return {e, nu, e * nu / ((1.0 - 2.0 * nu) * (1.0 + nu)), e / (2.0 * (1.0 + nu))};
  }
};

/// Per-component boundary condition mode.
///
/// Symmetry applies to the tangential component on a symmetry plane when the
/// weights are mirrored across it: the row collocates the governing equation
/// at the node, the reflection supplying the missing half of the stencil.
enum class BcMode { Essential, Traction, Symmetry };

/// Essential: prescribed displacement [mm]. Traction: prescribed sigma.n [GPa].
struct ComponentBc {
  BcMode mode = BcMode::Traction;
  double value = 0.0;
};

struct NodeBc {
  ComponentBc x, y;

  const ComponentBc& operator[](int comp) const { return comp == 0 ? x : y; }
};

/// One entry per boundary node, in NodeSet boundary order.
struct BoundaryConditionSet {
  std::vector<NodeBc> nodes;
};

using VectorField = std::vector<Vec2>;

inline Vec2 traction(const Tensor2PS& s, const Vec2& n) {
  return {s.xx * n.x() + s.xy * n.y(), s.xy * n.x() + s.yy * n.y()};
}

/// Equation enforced by row c * M + k of the assembled system, M being the
/// number of points and c the displacement component. Ghost points carry the
/// governing equation of their owner node.
struct RowSpec {
  enum class Kind : std::uint8_t { Navier, Traction, Identity };
  Kind kind = Kind::Identity;
  int node = 0;  // collocation node of Navier and Traction rows
};

inline std::vector<RowSpec> row_layout(const NodeSet& nodes, const WeightStore& ws, const BoundaryConditionSet& bcs) {
  const int n = nodes.size(), m = ws.node_count();
  if (ws.real_count() != n) throw std::invalid_argument("weights built on a different node set");
  if (static_cast<int>(bcs.nodes.size()) != nodes.boundary_count)
    throw std::invalid_argument("one boundary condition per boundary node required");
  std::vector<RowSpec> rows(2 * static_cast<std::size_t>(m));
  for (int c = 0; c < 2; ++c) {
    for (int k = 0; k < m; ++k) {
      RowSpec& row = rows[static_cast<std::size_t>(c) * m + k];
      if (k >= n) {
        const int owner = ws.ghost_owner(k - n);
        row = ws.odd_on_plane(k, c) ? RowSpec{RowSpec::Kind::Identity, k} : RowSpec{RowSpec::Kind::Navier, owner};
      } else if (!nodes.is_boundary(k)) {
        row = {RowSpec::Kind::Navier, k};
      } else {
        switch (bcs.nodes[k][c].mode) {
          case BcMode::Essential: row = {RowSpec::Kind::Identity, k}; break;
          case BcMode::Traction: row = {RowSpec::Kind::Traction, k}; break;
          case BcMode::Symmetry:
            if (!ws.even_on_plane(k, c))
              throw std::invalid_argument("symmetry condition at node " + std::to_string(k) +
                                          " requires weights mirrored across its plane");
            row = {RowSpec::Kind::Navier, k};
            break;
        }
      }
    }
  }
  return rows;
}

/// Assembles Navier-Cauchy rows, boundary traction rows and identity rows for
/// essential components. The right-hand side carries the BC values.
inline SparseSystem assemble(const NodeSet& nodes, const WeightStore& ws, const ElasticConstants& ec,
                             const BoundaryConditionSet& bcs) {
  const std::vector<RowSpec> rows = row_layout(nodes, ws, bcs);
  const int m = ws.node_count();
  const double lam = ec.lambda, mu = ec.mu;
  SparseSystem sys(2 * m);

  for (int r = 0; r < 2 * m; ++r) {
    const RowSpec& row = rows[r];
    const int c = r < m ? 0 : 1;
    if (row.kind == RowSpec::Kind::Identity) {
      sys.add(r, r, 1.0);
      if (row.node < nodes.boundary_count) sys.rhs()[r] = bcs.nodes[row.node][c].value;
      continue;
    }
    const int i = row.node;
    const auto st = ws.stencil(i);
    const auto mir = ws.mirrors(i);
    const int w = static_cast<int>(st.size());
    if (row.kind == RowSpec::Kind::Navier) {
      const auto dxx = ws.weights(Operator::Dxx, i), dyy = ws.weights(Operator::Dyy, i);
      const auto dxy = ws.weights(Operator::Dxy, i);
      for (int j = 0; j < w; ++j) {
        const double pu = vector_parity(mir[j], 0), pv = vector_parity(mir[j], 1);
        if (c == 0) {
          sys.add(r, st[j], pu * ((lam + 2.0 * mu) * dxx[j] + mu * dyy[j]));
          sys.add(r, m + st[j], pv * (lam + mu) * dxy[j]);
        } else {
          sys.add(r, st[j], pu * (lam + mu) * dxy[j]);
          sys.add(r, m + st[j], pv * (mu * dxx[j] + (lam + 2.0 * mu) * dyy[j]));
        }
      }
      continue;
    }
    const Vec2 nrm = i < static_cast<int>(nodes.normals.size()) ? nodes.normals[i] : Vec2::Zero();
    if (!(std::abs(nrm.norm() - 1.0) < 1e-6))
      throw std::invalid_argument("traction boundary node " + std::to_string(i) + " lacks a unit normal");
    const double nx = nrm.x(), ny = nrm.y();
    const auto dx = ws.weights(Operator::Dx, i), dy = ws.weights(Operator::Dy, i);
    for (int j = 0; j < w; ++j) {
      const double pu = vector_parity(mir[j], 0), pv = vector_parity(mir[j], 1);
      if (c == 0) {
        sys.add(r, st[j], pu * (mu * ny * dy[j] + (2.0 * mu + lam) * nx * dx[j]));
        sys.add(r, m + st[j], pv * (lam * nx * dy[j] + mu * ny * dx[j]));
      } else {
        sys.add(r, st[j], pu * (mu * nx * dy[j] + lam * ny * dx[j]));
        sys.add(r, m + st[j], pv * (mu * nx * dx[j] + (2.0 * mu + lam) * ny * dy[j]));
      }
    }
    sys.rhs()[r] = bcs.nodes[i][c].value;
  }
  sys.finalize();
  return sys;
}

/// Assembled and factorized elastic operator, reused across load steps.
/// Displacement fields cover all points: nodes first, then ghosts.
class ElasticSolver {
 public:
  ElasticSolver(const NodeSet& nodes, const WeightStore& ws, const ElasticConstants& ec,
                const BoundaryConditionSet& bcs)
      : node_count_(nodes.size()),
        point_count_(ws.node_count()),
        boundary_count_(nodes.boundary_count),
        rows_(row_layout(nodes, ws, bcs)),
        system_(assemble(nodes, ws, ec, bcs)),
        lu_(system_) {
    equation_row_.assign(2 * static_cast<std::size_t>(node_count_), -1);
    for (int r = 0; r < 2 * point_count_; ++r)
      if (rows_[r].kind == RowSpec::Kind::Navier)
        equation_row_[static_cast<std::size_t>(r < point_count_ ? 0 : 1) * node_count_ + rows_[r].node] = r;
  }

  const SparseSystem& system() const { return system_; }
  const std::vector<RowSpec>& rows() const { return rows_; }
  int node_count() const { return node_count_; }
  int point_count() const { return point_count_; }
  int boundary_count() const { return boundary_count_; }
  /// Row collocating component `comp` of the governing equation at node i, or -1.
  int equation_row(int i, int comp) const { return equation_row_[static_cast<std::size_t>(comp) * node_count_ + i]; }

  /// Navier rows receive -body_force at their collocation node; traction and
  /// essential rows the given boundary values; identity rows of ghosts zero.
  VectorField solve(std::span<const Vec2> body_force, std::span<const Vec2> boundary_rhs) const {
    if (static_cast<int>(body_force.size()) != node_count_ ||
        static_cast<int>(boundary_rhs.size()) != boundary_count_)
      throw std::invalid_argument("solve_elastic: field size mismatch");
    Eigen::VectorXd rhs(2 * point_count_);
    for (int r = 0; r < 2 * point_count_; ++r) {
      const int c = r < point_count_ ? 0 : 1;
      const RowSpec& row = rows_[r];
      switch (row.kind) {
        case RowSpec::Kind::Navier: rhs[r] = -body_force[row.node][c]; break;
        case RowSpec::Kind::Traction: rhs[r] = boundary_rhs[row.node][c]; break;
        case RowSpec::Kind::Identity: rhs[r] = row.node < boundary_count_ ? boundary_rhs[row.node][c] : 0.0; break;
      }
    }
    return unpack(lu_.solve(rhs));
  }

  /// System matrix times a displacement field, row c * M + k returned as component c of entry k.
  VectorField apply(std::span<const Vec2> u) const {
    if (static_cast<int>(u.size()) != point_count_) throw std::invalid_argument("displacement size mismatch");
    Eigen::VectorXd x(2 * point_count_);
    for (int k = 0; k < point_count_; ++k) x[k] = u[k].x(), x[point_count_ + k] = u[k].y();
    return unpack(system_.matrix() * x);
  }

 private:
  VectorField unpack(const Eigen::VectorXd& x) const {
    VectorField out(point_count_);
    for (int k = 0; k < point_count_; ++k) out[k] = Vec2(x[k], x[point_count_ + k]);
    return out;
  }

  int node_count_;
  int point_count_;
  int boundary_count_;
  std::vector<RowSpec> rows_;
  std::vector<int> equation_row_;
  SparseSystem system_;
  Factorization lu_;
};

inline VectorField solve_elastic(const ElasticSolver& solver, std::span<const Vec2> body_force,
                                 std::span<const Vec2> boundary_rhs) {
  return solver.solve(body_force, boundary_rhs);
}

/// Small-strain tensor at every point; zz is zero in plane strain.
inline std::vector<Tensor2PS> strain_from_displacement(const WeightStore& ws, std::span<const Vec2> u) {
  if (static_cast<int>(u.size()) != ws.node_count()) throw std::invalid_argument("displacement size mismatch");
  std::vector<Tensor2PS> eps(ws.node_count());
  for (int i = 0; i < ws.node_count(); ++i) {
    const auto st = ws.stencil(i);
    const auto mir = ws.mirrors(i);
    const auto dx = ws.weights(Operator::Dx, i), dy = ws.weights(Operator::Dy, i);
    double ux = 0, uy = 0, vx = 0, vy = 0;
    for (std::size_t j = 0; j < st.size(); ++j) {
      const double uj = vector_parity(mir[j], 0) * u[st[j]].x();
      const double vj = vector_parity(mir[j], 1) * u[st[j]].y();
      ux += dx[j] * uj;
      uy += dy[j] * uj;
      vx += dx[j] * vj;
      vy += dy[j] * vj;
    }
    eps[i] = {ux, vy, 0.0, 0.5 * (uy + vx)};
  }
  return eps;
}

/// Divergence of a stress field given at every point, evaluated at point i.
inline Vec2 stress_divergence(const WeightStore& ws, int i, std::span<const Tensor2PS> stress) {
  const auto st = ws.stencil(i);
  const auto mir = ws.mirrors(i);
  const auto dx = ws.weights(Operator::Dx, i), dy = ws.weights(Operator::Dy, i);
  double fx = 0.0, fy = 0.0;
  for (std::size_t j = 0; j < st.size(); ++j) {
    const Tensor2PS& s = stress[st[j]];
    const double sxy = shear_parity(mir[j]) * s.xy;
    fx += dx[j] * s.xx + dy[j] * sxy;
    fy += dx[j] * sxy + dy[j] * s.yy;
  }
  return {fx, fy};
}

inline Tensor2PS stress_from_elastic_strain(const ElasticConstants& ec, const Tensor2PS& e) {
  const double tr = e.trace();
  return {2.0 * ec.mu * e.xx + ec.lambda * tr, 2.0 * ec.mu * e.yy + ec.lambda * tr,
          2.0 * ec.mu * e.zz + ec.lambda * tr, 2.0 * ec.mu * e.xy};
}

/// Inverse of stress_from_elastic_strain.
inline Tensor2PS elastic_strain_from_stress(const ElasticConstants& ec, const Tensor2PS& s) {
  const double tr_eps = s.trace() / (2.0 * ec.mu + 3.0 * ec.lambda);
  return {(s.xx - ec.lambda * tr_eps) / (2.0 * ec.mu), (s.yy - ec.lambda * tr_eps) / (2.0 * ec.mu),
          (s.zz - ec.lambda * tr_eps) / (2.0 * ec.mu), s.xy / (2.0 * ec.mu)};
}

}  // namespace rbfplast

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nodegen.hpp"

namespace rbfplast {

/// Polyharmonic spline order, monomial augmentation degree and stencil size.
struct BasisConfig {
  int phs_order = 3;
  int monomial_degree = 3;
  int stencil_size = 20;

  int monomial_count() const { return (monomial_degree + 2) * (monomial_degree + 1) / 2; }

  void validate() const {
    if (phs_order < 1) throw std::invalid_argument("PHS order must be >= 1");
    if (monomial_degree < 0) throw std::invalid_argument("monomial degree must be >= 0");
    if (stencil_size < monomial_count())
      throw std::invalid_argument("stencil size must be at least the number of augmenting monomials");
  }
};

enum class Operator { Dx = 0, Dy = 1, Dxx = 2, Dyy = 3, Dxy = 4 };
inline constexpr std::array<Operator, 5> kAllOperators = {Operator::Dx, Operator::Dy, Operator::Dxx, Operator::Dyy,
                                                          Operator::Dxy};

/// Reflection applied to a stencil entry: bit 0 mirrors across x = 0, bit 1
/// across y = 0. Zero is the point itself.
using MirrorCode = std::uint8_t;

/// Sign picked up by displacement component `comp` (0 = x, 1 = y) under a reflection.
inline double vector_parity(MirrorCode code, int comp) { return ((code >> comp) & 1) ? -1.0 : 1.0; }
/// Sign picked up by the shear component of a symmetric tensor under a reflection.
inline double shear_parity(MirrorCode code) { return (((code & 1) ^ ((code >> 1) & 1)) != 0) ? -1.0 : 1.0; }

/// Fixed-width stencil table: row i holds the `width` nearest points of point
/// i, the point itself first, each with the reflection that produced it.
struct StencilTable {
  int width = 0;
  std::vector<int> indices;
  std::vector<MirrorCode> codes;

  int node_count() const { return width == 0 ? 0 : static_cast<int>(indices.size()) / width; }
  std::span<const int> operator[](int node) const {
    return {indices.data() + static_cast<std::size_t>(node) * width, static_cast<std::size_t>(width)};
  }
  std::span<const MirrorCode> mirrors(int node) const {
    return {codes.data() + static_cast<std::size_t>(node) * width, static_cast<std::size_t>(width)};
  }
};

inline StencilTable build_stencils(const NodeSet& nodes, int n) {
  if (n < 1) throw std::invalid_argument("stencil size must be positive");
  if (n > nodes.size()) throw std::invalid_argument("stencil size exceeds node count");
  const SpatialGrid grid = SpatialGrid::build(nodes.positions);
  StencilTable table;
  table.width = n;
  table.indices.reserve(static_cast<std::size_t>(nodes.size()) * n);
  for (int i = 0; i < nodes.size(); ++i) {
    std::vector<int> nn = grid.nearest(nodes.positions[i], n);
    // Self has distance zero; a coincident node with lower index could precede it.
    if (nn.front() != i) {
      auto it = std::find(nn.begin(), nn.end(), i);
      if (it == nn.end()) {
        nn.back() = i;
        it = nn.end() - 1;
      }
      std::rotate(nn.begin(), it, it + 1);
    }
    table.indices.insert(table.indices.end(), nn.begin(), nn.end());
  }
  table.codes.assign(table.indices.size(), 0);
  return table;
}

class SingularStencilError : public std::runtime_error {
 public:
  SingularStencilError(int node, const std::string& what)
      : std::runtime_error("singular RBF-FD system at node " + std::to_string(node) + ": " + what), node_(node) {}
  int node() const { return node_; }

 private:
  int node_;
};

namespace detail {

// Radial profile f(r) and its first two derivatives for the PHS basis.
struct Phs {
  int k;
  double f(double r) const {
    if (r == 0.0) return 0.0;
    return (k % 2 == 1) ? std::pow(r, k) : std::pow(r, k) * std::log(r);
  }
  double d1(double r) const {
    if (r == 0.0) return 0.0;
    return (k % 2 == 1) ? k * std::pow(r, k - 1) : std::pow(r, k - 1) * (k * std::log(r) + 1.0);
  }
  double d2(double r) const {
    if (r == 0.0) return 0.0;
    return (k % 2 == 1) ? k * (k - 1) * std::pow(r, k - 2)
                        : std::pow(r, k - 2) * (k * (k - 1) * std::log(r) + 2.0 * k - 1.0);
  }

  // Operator applied to f(|x - x_j|) at x with offset d = x - x_j.
  // The value at the basis centre (d = 0) is the radial limit 0.
  double apply(Operator op, const Vec2& d) const {
    const double r = d.norm();
    if (r == 0.0) return 0.0;
    const double f1 = d1(r), f2 = d2(r);
    const double x = d.x(), y = d.y();
    switch (op) {
      case Operator::Dx: return f1 * x / r;
      case Operator::Dy: return f1 * y / r;
      case Operator::Dxx: return f2 * x * x / (r * r) + f1 * (1.0 / r - x * x / (r * r * r));
      case Operator::Dyy: return f2 * y * y / (r * r) + f1 * (1.0 / r - y * y / (r * r * r));
      case Operator::Dxy: return (f2 - f1 / r) * x * y / (r * r);
    }
    return 0.0;
  }
};

inline int derivative_order(Operator op) { return (op == Operator::Dx || op == Operator::Dy) ? 1 : 2; }

// Exponents (i, j) of x^i y^j ordered by total degree.
inline std::vector<std::array<int, 2>> monomial_exponents(int degree) {
  std::vector<std::array<int, 2>> out;
  for (int d = 0; d <= degree; ++d)
    for (int j = 0; j <= d; ++j) out.push_back({d - j, j});
  return out;
}

// Operator applied to x^i y^j, evaluated at the origin.
inline double monomial_rhs(Operator op, const std::array<int, 2>& e) {
  switch (op) {
    case Operator::Dx: return (e[0] == 1 && e[1] == 0) ? 1.0 : 0.0;
    case Operator::Dy: return (e[0] == 0 && e[1] == 1) ? 1.0 : 0.0;
    case Operator::Dxx: return (e[0] == 2 && e[1] == 0) ? 2.0 : 0.0;
    case Operator::Dyy: return (e[0] == 0 && e[1] == 2) ? 2.0 : 0.0;
    case Operator::Dxy: return (e[0] == 1 && e[1] == 1) ? 1.0 : 0.0;
  }
  return 0.0;
}

// Weights for `ops` at stencil[0]. Coordinates are shifted to the centre and
// scaled by the stencil radius; the result is unscaled before returning.
inline Eigen::MatrixXd stencil_weights(std::span<const Vec2> positions, std::span<const int> stencil,
                                       const BasisConfig& cfg, std::span<const Operator> ops, int node_id) {
  const int n = static_cast<int>(stencil.size());
  const auto exps = monomial_exponents(cfg.monomial_degree);
  const int np = static_cast<int>(exps.size());
  if (n < np) throw SingularStencilError(node_id, "fewer stencil nodes than monomials");

  const Vec2 center = positions[stencil[0]];
  double scale = 0.0;
  std::vector<Vec2> local(n);
  for (int i = 0; i < n; ++i) {
    local[i] = positions[stencil[i]] - center;
    scale = std::max(scale, local[i].norm());
  }
  if (scale == 0.0) scale = 1.0;
  for (Vec2& p : local) p /= scale;

  const Phs phs{cfg.phs_order};
  const int dim = n + np;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) m(i, j) = m(j, i) = phs.f((local[i] - local[j]).norm());
    for (int p = 0; p < np; ++p) {
      const double v = std::pow(local[i].x(), exps[p][0]) * std::pow(local[i].y(), exps[p][1]);
      m(i, n + p) = m(n + p, i) = v;
    }
  }

  Eigen::MatrixXd rhs(dim, static_cast<Eigen::Index>(ops.size()));
  for (std::size_t o = 0; o < ops.size(); ++o) {
    for (int i = 0; i < n; ++i) rhs(i, o) = phs.apply(ops[o], -local[i]);
    for (int p = 0; p < np; ++p) rhs(n + p, o) = monomial_rhs(ops[o], exps[p]);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(1e-13);
  if (!qr.isInvertible()) throw SingularStencilError(node_id, "degenerate stencil geometry");
  Eigen::MatrixXd sol = qr.solve(rhs);

  Eigen::MatrixXd w = sol.topRows(n);
  for (std::size_t o = 0; o < ops.size(); ++o) w.col(o) /= std::pow(scale, derivative_order(ops[o]));
  return w;
}

}  // namespace detail

/// Ghost points appended after the nodes, and the symmetry planes the
/// stencils were mirrored across.
struct PointLayout {
  int node_count = 0;                  // real nodes, points [0, node_count)
  std::vector<Vec2> ghost_positions;   // points [node_count, node_count + ghosts)
  std::vector<int> ghost_owner;        // boundary node each ghost belongs to
  MirrorPlanes planes;
  std::vector<std::uint8_t> on_plane;  // per point: bit 0 on x = 0, bit 1 on y = 0 (active planes only)
};

/// RBF-FD weights for all five first/second derivative operators.
///
/// Stencils span the nodes, any ghost points, and reflections of both across
/// the active symmetry planes.
class WeightStore {
 public:
  WeightStore() = default;
  WeightStore(StencilTable stencils, std::array<std::vector<double>, 5> weights)
      : stencils_(std::move(stencils)), weights_(std::move(weights)) {
    layout_.node_count = stencils_.node_count();
    layout_.on_plane.assign(layout_.node_count, 0);
  }
  WeightStore(StencilTable stencils, std::array<std::vector<double>, 5> weights, PointLayout layout)
      : stencils_(std::move(stencils)), weights_(std::move(weights)), layout_(std::move(layout)) {
    if (layout_.node_count + ghost_count() != stencils_.node_count())
      throw std::invalid_argument("point layout does not match the stencil table");
  }

  const StencilTable& stencils() const { return stencils_; }
  /// Stencil rows: nodes plus ghost points.
  int node_count() const { return stencils_.node_count(); }
  int real_count() const { return layout_.node_count; }
  int ghost_count() const { return static_cast<int>(layout_.ghost_owner.size()); }
  int ghost_owner(int ghost) const { return layout_.ghost_owner[ghost]; }
  const Vec2& ghost_position(int ghost) const { return layout_.ghost_positions[ghost]; }
  const MirrorPlanes& planes() const { return layout_.planes; }
  /// True when displacement component `comp` is odd across a plane containing point k.
  bool odd_on_plane(int k, int comp) const { return ((layout_.on_plane[k] >> comp) & 1) != 0; }
  /// True when point k lies on an active plane across which component `comp` is even.
  bool even_on_plane(int k, int comp) const { return ((layout_.on_plane[k] >> (1 - comp)) & 1) != 0; }

  int width() const { return stencils_.width; }
  std::span<const int> stencil(int node) const { return stencils_[node]; }
  std::span<const MirrorCode> mirrors(int node) const { return stencils_.mirrors(node); }
  std::span<const double> weights(Operator op, int node) const {
    const auto& w = weights_[static_cast<int>(op)];
    return {w.data() + static_cast<std::size_t>(node) * width(), static_cast<std::size_t>(width())};
  }

 private:
  StencilTable stencils_;
  std::array<std::vector<double>, 5> weights_;
  PointLayout layout_;
};

/// Weights of a single operator for one node's stencil.
inline std::vector<double> compute_weights(const NodeSet& nodes, std::span<const int> stencil,
                                           const BasisConfig& cfg, Operator op) {
  const std::array<Operator, 1> ops{op};
  Eigen::MatrixXd w = detail::stencil_weights(nodes.positions, stencil, cfg, ops, stencil.empty() ? -1 : stencil[0]);
  return {w.data(), w.data() + w.rows()};
}

/// Weights of every operator at every node. Nodes are independent; runs serially.
inline WeightStore compute_weights(const NodeSet& nodes, const StencilTable& stencils, const BasisConfig& cfg) {
  cfg.validate();
  const int n = stencils.width;
  std::array<std::vector<double>, 5> all;
  for (auto& v : all) v.resize(stencils.indices.size());
  for (int i = 0; i < stencils.node_count(); ++i) {
    const Eigen::MatrixXd w = detail::stencil_weights(nodes.positions, stencils[i], cfg, kAllOperators, i);
    for (int o = 0; o < 5; ++o)
      for (int j = 0; j < n; ++j) all[o][static_cast<std::size_t>(i) * n + j] = w(j, o);
  }
  return WeightStore(stencils, std::move(all));
}

inline WeightStore build_weights(const NodeSet& nodes, const BasisConfig& cfg) {
  cfg.validate();
  return compute_weights(nodes, build_stencils(nodes, cfg.stencil_size), cfg);
}

/// Ghost points and reflections added to the plain node stencils.
struct StencilExtension {
  bool mirror = true;          // reflect across the domain's symmetry planes
  bool ghosts = true;          // one ghost per boundary node off the symmetry planes
  double ghost_offset = 1.0;   // ghost distance along the outward normal, in units of h
  double mirror_band = 8.0;    // points within this many h of a plane get a reflection
};

/// Weights on the nodes extended by ghost points outside traction boundaries
/// and by reflections across the symmetry planes. Ghosts that would fall
/// inside the domain or within h/2 of another point are not created.
inline WeightStore build_weights(const Domain& domain, const NodeSet& nodes, const BasisConfig& cfg,
                                 const StencilExtension& ext = {}) {
  cfg.validate();
  if (ext.ghosts && !(ext.ghost_offset > 0.0)) throw std::invalid_argument("ghost offset must be positive");
  const int n = nodes.size();
  const double h = nodes.h;
  const double tol = 1e-9 * domain.characteristic_length();
  PointLayout layout;
  layout.node_count = n;
  layout.planes = ext.mirror ? domain.symmetry_planes() : MirrorPlanes{};
  const MirrorPlanes& planes = layout.planes;

  std::vector<Vec2> points(nodes.positions.begin(), nodes.positions.end());
  if (ext.ghosts) {
    const Vec2 pad = Vec2::Constant((ext.ghost_offset + 1.0) * h);
    SpatialGrid grid(domain.bbox_lo() - pad, domain.bbox_hi() + pad, h);
    for (int i = 0; i < n; ++i) grid.insert(i, points[i]);
    for (int i = 0; i < nodes.boundary_count; ++i) {
      const BoundaryTag tag = nodes.tags[i];
      if ((tag == BoundaryTag::SymmetryX && planes.x) || (tag == BoundaryTag::SymmetryY && planes.y)) continue;
      const Vec2 g = points[i] + ext.ghost_offset * h * nodes.normals[i];
      if (domain.contains(g) || grid.any_within(g, 0.5 * h)) continue;
      grid.insert(static_cast<int>(points.size()), g);
      points.push_back(g);
      layout.ghost_positions.push_back(g);
      layout.ghost_owner.push_back(i);
    }
  }
  const int m = static_cast<int>(points.size());
  if (cfg.stencil_size > m) throw std::invalid_argument("stencil size exceeds node count");

  layout.on_plane.assign(m, 0);
  std::vector<Vec2> all(points);
  std::vector<int> origin(m);
  std::vector<MirrorCode> code(m, 0);
  for (int k = 0; k < m; ++k) origin[k] = k;
  const double band = ext.mirror_band * h;
  for (int k = 0; k < m; ++k) {
    const Vec2 p = points[k];
    const bool on_x = planes.x && std::abs(p.x()) <= tol, on_y = planes.y && std::abs(p.y()) <= tol;
    layout.on_plane[k] = static_cast<std::uint8_t>((on_x ? 1 : 0) | (on_y ? 2 : 0));
    const bool near_x = planes.x && !on_x && std::abs(p.x()) < band;
    const bool near_y = planes.y && !on_y && std::abs(p.y()) < band;
    auto add = [&](const Vec2& q, MirrorCode c) {
      all.push_back(q);
      origin.push_back(k);
      code.push_back(c);
    };
    if (near_x) add(Vec2(-p.x(), p.y()), 1);
    if (near_y) add(Vec2(p.x(), -p.y()), 2);
    if (near_x && near_y) add(Vec2(-p.x(), -p.y()), 3);
  }

  const SpatialGrid grid = SpatialGrid::build(all);
  const int width = cfg.stencil_size;
  StencilTable table;
  table.width = width;
  table.indices.reserve(static_cast<std::size_t>(m) * width);
  table.codes.reserve(static_cast<std::size_t>(m) * width);
  std::array<std::vector<double>, 5> weights;
  for (auto& v : weights) v.resize(static_cast<std::size_t>(m) * width);
  for (int k = 0; k < m; ++k) {
    std::vector<int> nn = grid.nearest(points[k], width);
    if (nn.front() != k) {
      auto it = std::find(nn.begin(), nn.end(), k);
      if (it == nn.end()) {
        nn.back() = k;
        it = nn.end() - 1;
      }
      std::rotate(nn.begin(), it, it + 1);
    }
    const Eigen::MatrixXd w = detail::stencil_weights(all, nn, cfg, kAllOperators, k);
    for (int j = 0; j < width; ++j) {
      table.indices.push_back(origin[nn[j]]);
      table.codes.push_back(code[nn[j]]);
      for (int o = 0; o < 5; ++o) weights[o][static_cast<std::size_t>(k) * width + j] = w(j, o);
    }
  }
  return WeightStore(std::move(table), std::move(weights), std::move(layout));
}

/// Sum of w_i * field(stencil_i).
inline double apply(std::span<const double> weights, std::span<const int> stencil, std::span<const double> field) {
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) acc += weights[i] * field[stencil[i]];
  return acc;
}

/// Applies an operator at every point; the field is taken as even across
/// symmetry planes.
inline std::vector<double> apply_all(const WeightStore& ws, Operator op, std::span<const double> field) {
  std::vector<double> out(ws.node_count());
  for (int i = 0; i < ws.node_count(); ++i) out[i] = apply(ws.weights(op, i), ws.stencil(i), field);
  return out;
}

}  // namespace rbfplast

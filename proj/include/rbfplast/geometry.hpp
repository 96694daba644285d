#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace rbfplast {

using Vec2 = Eigen::Vector2d;

/// Boundary-condition label carried by every boundary node.
///
/// SymmetryX marks the x = 0 edge (roller, u_x fixed), SymmetryY the y = 0
/// edge (roller, u_y fixed).
enum class BoundaryTag { InnerPressure, OuterFree, SymmetryX, SymmetryY, CutoutFree };

inline std::string_view to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::InnerPressure: return "inner-pressure";
    case BoundaryTag::OuterFree: return "outer-free";
    case BoundaryTag::SymmetryX: return "symmetry-x";
    case BoundaryTag::SymmetryY: return "symmetry-y";
    case BoundaryTag::CutoutFree: return "cutout-free";
  }
  return "unknown";
}

// Lower value wins ownership of shared corner points. Arcs and cut-outs own
// corners so that corner nodes keep the curved piece's normal; the roller
// constraint there is added from the symmetry planes.
inline int corner_precedence(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::InnerPressure: return 0;
    case BoundaryTag::OuterFree: return 1;
    case BoundaryTag::CutoutFree: return 2;
    case BoundaryTag::SymmetryX: return 3;
    case BoundaryTag::SymmetryY: return 4;
  }
  return 5;
}

/// Symmetry planes x = 0 and y = 0.
struct MirrorPlanes {
  bool x = false;
  bool y = false;

  bool any() const { return x || y; }
};

struct Circle {
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
  BoundaryTag tag = BoundaryTag::CutoutFree;
};

struct BoundaryNode {
  Vec2 position;
  Vec2 normal;
  BoundaryTag tag;
};

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One analytic boundary curve before trimming: a straight segment or a
/// circular arc, parametrised on [0, 1].
struct BoundaryCurve {
  enum class Kind { Segment, Arc };
  Kind kind = Kind::Segment;
  Vec2 p0 = Vec2::Zero(), p1 = Vec2::Zero();  // segment end points
  Vec2 center = Vec2::Zero();                 // arc
  double radius = 0.0;
  double theta0 = 0.0, theta1 = 0.0;
  bool normal_toward_center = false;  // arc: outward normal points to its center
  Vec2 segment_normal = Vec2::Zero();
  BoundaryTag tag = BoundaryTag::OuterFree;
  bool closed = false;
  int constraint = -1;  // index of the domain constraint this curve realises

  Vec2 point(double t) const {
    if (kind == Kind::Segment) return p0 + t * (p1 - p0);
    const double th = theta0 + t * (theta1 - theta0);
    return center + radius * Vec2(std::cos(th), std::sin(th));
  }
  Vec2 normal(double t) const {
    if (kind == Kind::Segment) return segment_normal;
    const double th = theta0 + t * (theta1 - theta0);
    Vec2 radial(std::cos(th), std::sin(th));
    return normal_toward_center ? Vec2(-radial) : radial;
  }
  double length(double t0 = 0.0, double t1 = 1.0) const {
    if (kind == Kind::Segment) return (t1 - t0) * (p1 - p0).norm();
    return (t1 - t0) * std::abs(theta1 - theta0) * radius;
  }
};

/// Computational domain: a first-quadrant annular sector or an axis-aligned
/// rectangle, optionally minus a set of open discs.
class Domain {
 public:
  enum class Shape { QuarterAnnulus, Rectangle };

  static Domain quarter_annulus(double inner_radius, double outer_radius,
                                std::vector<Circle> cutouts = {}) {
    if (!(inner_radius > 0.0) || !(outer_radius > inner_radius))
      throw GeometryError("quarter annulus requires 0 < a < b");
    Domain d;
    d.shape_ = Shape::QuarterAnnulus;
    d.a_ = inner_radius;
    d.b_ = outer_radius;
    d.lo_ = Vec2(0.0, 0.0);
    d.hi_ = Vec2(outer_radius, outer_radius);
    d.cutouts_ = std::move(cutouts);
    d.validate_cutouts();
    return d;
  }

  /// Edge tags are ordered bottom, right, top, left.
  static Domain rectangle(Vec2 lo, Vec2 hi,
                          std::array<BoundaryTag, 4> edge_tags = {BoundaryTag::OuterFree, BoundaryTag::OuterFree,
                                                                  BoundaryTag::OuterFree, BoundaryTag::OuterFree},
                          std::vector<Circle> cutouts = {}) {
    if (!(hi.x() > lo.x()) || !(hi.y() > lo.y())) throw GeometryError("rectangle requires lo < hi");
    Domain d;
    d.shape_ = Shape::Rectangle;
    d.lo_ = lo;
    d.hi_ = hi;
    d.edge_tags_ = edge_tags;
    d.cutouts_ = std::move(cutouts);
    d.validate_cutouts();
    return d;
  }

  Shape shape() const { return shape_; }
  double inner_radius() const { return a_; }
  double outer_radius() const { return b_; }
  const std::vector<Circle>& cutouts() const { return cutouts_; }
  Vec2 bbox_lo() const { return lo_; }
  Vec2 bbox_hi() const { return hi_; }
  double characteristic_length() const {
    return shape_ == Shape::QuarterAnnulus ? b_ : (hi_ - lo_).maxCoeff();
  }

  /// Coordinate planes carrying a symmetry edge: x = 0 under a SymmetryX
  /// edge, y = 0 under a SymmetryY edge.
  MirrorPlanes symmetry_planes() const {
    if (shape_ == Shape::QuarterAnnulus) return {true, true};
    MirrorPlanes planes;
    planes.x = lo_.x() == 0.0 && edge_tags_[3] == BoundaryTag::SymmetryX;
    planes.y = lo_.y() == 0.0 && edge_tags_[0] == BoundaryTag::SymmetryY;
    return planes;
  }

  /// Area of the outer shape, ignoring cut-outs (an upper bound).
  double outer_area() const {
    if (shape_ == Shape::QuarterAnnulus) return std::numbers::pi * (b_ * b_ - a_ * a_) / 4.0;
    return (hi_ - lo_).prod();
  }

  /// Strict interior test.
  /// Strict interior test. Points within a round-off band of a boundary curve
  /// count as on the boundary.
  bool contains(const Vec2& p) const {
    const double band = 1e-12 * (hi_ - lo_).maxCoeff();
    for (int c = 0; c < constraint_count(); ++c)
      if (!(constraint_value(c, p) > band)) return false;
    return true;
  }

  /// Signed constraint value, positive inside. Constraints are the outer-shape
  /// half planes / circles followed by one entry per cut-out.
  int constraint_count() const { return 4 + static_cast<int>(cutouts_.size()); }

  double constraint_value(int c, const Vec2& p) const {
    if (c >= 4) {
      const Circle& circ = cutouts_[c - 4];
      return (p - circ.center).norm() - circ.radius;
    }
    if (shape_ == Shape::QuarterAnnulus) {
      switch (c) {
        case 0: return p.norm() - a_;
        case 1: return b_ - p.norm();
        case 2: return p.y();
        default: return p.x();
      }
    }
    switch (c) {
      case 0: return p.y() - lo_.y();
      case 1: return hi_.x() - p.x();
      case 2: return hi_.y() - p.y();
      default: return p.x() - lo_.x();
    }
  }

  /// Untrimmed boundary curves, one per constraint.
  std::vector<BoundaryCurve> curves() const {
    std::vector<BoundaryCurve> out;
    const double half_pi = std::numbers::pi / 2.0;
    if (shape_ == Shape::QuarterAnnulus) {
      BoundaryCurve inner{.kind = BoundaryCurve::Kind::Arc, .radius = a_, .theta0 = 0.0, .theta1 = half_pi,
                          .normal_toward_center = true, .tag = BoundaryTag::InnerPressure, .constraint = 0};
      BoundaryCurve outer{.kind = BoundaryCurve::Kind::Arc, .radius = b_, .theta0 = 0.0, .theta1 = half_pi,
                          .normal_toward_center = false, .tag = BoundaryTag::OuterFree, .constraint = 1};
      BoundaryCurve bottom{.kind = BoundaryCurve::Kind::Segment, .p0 = Vec2(a_, 0.0), .p1 = Vec2(b_, 0.0),
                           .segment_normal = Vec2(0.0, -1.0), .tag = BoundaryTag::SymmetryY, .constraint = 2};
      BoundaryCurve left{.kind = BoundaryCurve::Kind::Segment, .p0 = Vec2(0.0, a_), .p1 = Vec2(0.0, b_),
                         .segment_normal = Vec2(-1.0, 0.0), .tag = BoundaryTag::SymmetryX, .constraint = 3};
      out = {inner, outer, bottom, left};
    } else {
      const Vec2 c00 = lo_, c10(hi_.x(), lo_.y()), c11 = hi_, c01(lo_.x(), hi_.y());
      out.push_back({.kind = BoundaryCurve::Kind::Segment, .p0 = c00, .p1 = c10, .segment_normal = Vec2(0, -1),
                     .tag = edge_tags_[0], .constraint = 0});
      out.push_back({.kind = BoundaryCurve::Kind::Segment, .p0 = c10, .p1 = c11, .segment_normal = Vec2(1, 0),
                     .tag = edge_tags_[1], .constraint = 1});
      out.push_back({.kind = BoundaryCurve::Kind::Segment, .p0 = c11, .p1 = c01, .segment_normal = Vec2(0, 1),
                     .tag = edge_tags_[2], .constraint = 2});
      out.push_back({.kind = BoundaryCurve::Kind::Segment, .p0 = c01, .p1 = c00, .segment_normal = Vec2(-1, 0),
                     .tag = edge_tags_[3], .constraint = 3});
    }
    for (std::size_t i = 0; i < cutouts_.size(); ++i) {
      const Circle& c = cutouts_[i];
      out.push_back({.kind = BoundaryCurve::Kind::Arc, .center = c.center, .radius = c.radius, .theta0 = 0.0,
                     .theta1 = 2.0 * std::numbers::pi, .normal_toward_center = true, .tag = c.tag,
                     .closed = true, .constraint = 4 + static_cast<int>(i)});
    }
    return out;
  }

  /// Point lies in the closed domain when every constraint other than `skip`
  /// is satisfied up to `tol`.
  bool on_closure_except(const Vec2& p, int skip, double tol) const {
    for (int c = 0; c < constraint_count(); ++c)
      if (c != skip && constraint_value(c, p) < -tol) return false;
    return true;
  }

 private:
  void validate_cutouts() const {
    for (const Circle& c : cutouts_)
      if (!(c.radius > 0.0)) throw GeometryError("cut-out radius must be positive");
  }

  Shape shape_ = Shape::Rectangle;
  double a_ = 0.0, b_ = 0.0;
  Vec2 lo_ = Vec2::Zero(), hi_ = Vec2::Zero();
  std::array<BoundaryTag, 4> edge_tags_{};
  std::vector<Circle> cutouts_;
};

inline bool contains(const Domain& domain, const Vec2& p) { return domain.contains(p); }

namespace detail {

struct TrimmedPiece {
  const BoundaryCurve* curve;
  double t0, t1;
  bool closed;
};

// Parameter intervals of `curve` that lie on the closed domain.
inline std::vector<TrimmedPiece> trim_curve(const Domain& domain, const BoundaryCurve& curve, double tol) {
  constexpr int samples = 4096;
  auto valid = [&](double t) { return domain.on_closure_except(curve.point(t), curve.constraint, tol); };
  auto refine = [&](double good, double bad) {
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (good + bad);
      (valid(mid) ? good : bad) = mid;
    }
    return good;
  };

  std::vector<char> ok(samples + 1);
  for (int s = 0; s <= samples; ++s) ok[s] = valid(static_cast<double>(s) / samples);

  std::vector<TrimmedPiece> pieces;
  if (std::all_of(ok.begin(), ok.end(), [](char v) { return v; })) {
    pieces.push_back({&curve, 0.0, 1.0, curve.closed});
    return pieces;
  }
  int s = 0;
  while (s <= samples) {
    if (!ok[s]) { ++s; continue; }
    const int start = s;
    while (s <= samples && ok[s]) ++s;
    const int stop = s - 1;
    const double t0 = start == 0 ? 0.0 : refine(static_cast<double>(start) / samples,
                                                  static_cast<double>(start - 1) / samples);
    const double t1 = stop == samples ? 1.0 : refine(static_cast<double>(stop) / samples,
                                                      static_cast<double>(stop + 1) / samples);
    pieces.push_back({&curve, t0, t1, false});
  }
  // A closed curve whose valid run wraps through t = 0 forms a single piece.
  if (curve.closed && pieces.size() >= 2 && ok.front() && ok.back()) {
    TrimmedPiece first = pieces.front();
    TrimmedPiece last = pieces.back();
    pieces.erase(pieces.begin());
    pieces.back() = {&curve, last.t0, first.t1 + 1.0, false};
  }
  return pieces;
}

}  // namespace detail

/// Uniformly spaced boundary nodes along every trimmed boundary piece.
///
/// Each piece of length L receives floor(L / h) equal segments, so spacing is
/// at least h and below 1.5h whenever the piece carries three or more nodes.
/// Points shared by two pieces are kept once and owned by the piece with the
/// higher corner precedence.
inline std::vector<BoundaryNode> discretize_boundary(const Domain& domain, double h) {
  if (!(h > 0.0)) throw GeometryError("boundary spacing must be positive");
  if (domain.shape() == Domain::Shape::QuarterAnnulus &&
      !(h < 0.5 * (domain.outer_radius() - domain.inner_radius())))
    throw GeometryError("boundary under-resolved: h must be below (b - a) / 2");

  const double scale = domain.characteristic_length();
  const double tol = 1e-12 * scale;
  const std::vector<BoundaryCurve> curves = domain.curves();

  struct Candidate {
    BoundaryNode node;
    int precedence;
  };
  std::vector<Candidate> all;
  for (const BoundaryCurve& curve : curves) {
    const std::vector<detail::TrimmedPiece> pieces = detail::trim_curve(domain, curve, tol);
    if (pieces.empty() && curve.constraint < 4)
      throw GeometryError("cut-outs erase the entire " + std::string(to_string(curve.tag)) + " boundary piece");
    for (const detail::TrimmedPiece& piece : pieces) {
      const double len = curve.length(piece.t0, piece.t1);
      if (len <= 1e-9 * scale) continue;  // tangential touch
      const int segments = static_cast<int>(std::floor(len / h + 1e-9));
      const int count = piece.closed ? segments : segments + 1;
      if (count < 3) throw GeometryError("boundary under-resolved: fewer than 3 nodes on a boundary piece");
      for (int k = 0; k < count; ++k) {
        double t = piece.t0 + (piece.t1 - piece.t0) * static_cast<double>(k) / segments;
        if (t > 1.0) t -= 1.0;
        all.push_back({{curve.point(t), curve.normal(t), curve.tag}, corner_precedence(curve.tag)});
      }
    }
  }

  std::stable_sort(all.begin(), all.end(),
                   [](const Candidate& l, const Candidate& r) { return l.precedence < r.precedence; });
  std::vector<BoundaryNode> out;
  const double merge = 1e-8 * scale;
  for (const Candidate& c : all) {
    bool duplicate = false;
    for (const BoundaryNode& kept : out)
      if ((kept.position - c.node.position).norm() < merge) { duplicate = true; break; }
    if (!duplicate) out.push_back(c.node);
  }
  return out;
}

/// Cut-out discs of the irregular benchmark domain (a = 100, b = 200 by default).
/// The disc reaching into the bore is pressurised together with the bore.
inline std::vector<Circle> irregular_cutouts(double a, double b) {
  const double pi = std::numbers::pi;
  auto polar = [](double r, double th) { return Vec2(r * std::cos(th), r * std::sin(th)); };
  return {
      {polar(0.5 * (a + b), pi / 16.0), 20.0, BoundaryTag::CutoutFree},
      {polar(0.5 * (a + b), 7.0 * pi / 16.0), 10.0, BoundaryTag::CutoutFree},
      {polar(0.8 * a, pi / 4.0), 30.0, BoundaryTag::InnerPressure},
      {polar(1.1 * b, pi / 4.0), 50.0, BoundaryTag::CutoutFree},
  };
}

}  // namespace rbfplast

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "geometry.hpp"

namespace rbfplast {

/// Minimum admissible distance between generated nodes, as a fraction of h.
inline constexpr double kMinSpacingFactor = 0.85;
/// Expansion candidates spawned around every dequeued node.
inline constexpr int kCandidatesPerNode = 12;

/// Scattered nodes: boundary nodes occupy slots [0, boundary_count), interior
/// nodes follow.
struct NodeSet {
  std::vector<Vec2> positions;
  int boundary_count = 0;
  std::vector<Vec2> normals;        // boundary slots only
  std::vector<BoundaryTag> tags;    // boundary slots only
  double h = 0.0;
  std::uint64_t seed = 0;

  int size() const { return static_cast<int>(positions.size()); }
  bool is_boundary(int i) const { return i < boundary_count; }
};

/// Uniform background grid over a point cloud. Answers fixed-radius and
/// k-nearest queries; read-only after construction so concurrent queries are
/// safe.
class SpatialGrid {
 public:
  SpatialGrid(Vec2 lo, Vec2 hi, double cell) : lo_(lo), cell_(cell) {
    if (!(cell > 0.0)) throw std::invalid_argument("grid cell size must be positive");
    nx_ = std::max(1, static_cast<int>(std::ceil((hi.x() - lo.x()) / cell)) + 1);
    ny_ = std::max(1, static_cast<int>(std::ceil((hi.y() - lo.y()) / cell)) + 1);
    cells_.resize(static_cast<std::size_t>(nx_) * ny_);
  }

  /// Grid sized for `points` with roughly `per_cell` points per cell.
  static SpatialGrid build(std::span<const Vec2> points, double per_cell = 2.0) {
    if (points.empty()) throw std::invalid_argument("empty point set");
    Vec2 lo = points[0], hi = points[0];
    for (const Vec2& p : points) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const Vec2 ext = (hi - lo).cwiseMax(Vec2(1e-12, 1e-12));
    double cell = std::sqrt(ext.prod() * per_cell / static_cast<double>(points.size()));
    // Nearly collinear sets: fall back to the spacing along the long side.
    cell = std::max(cell, ext.maxCoeff() * per_cell / static_cast<double>(points.size()));
    SpatialGrid grid(lo, hi, cell);
    for (std::size_t i = 0; i < points.size(); ++i) grid.insert(static_cast<int>(i), points[i]);
    grid.points_.assign(points.begin(), points.end());
    return grid;
  }

  void insert(int index, const Vec2& p) {
    cells_[cell_index(p)].push_back(index);
    if (static_cast<std::size_t>(index) >= points_.size()) points_.resize(index + 1);
    points_[index] = p;
  }

  /// True when some inserted point lies strictly closer than `radius` to `p`.
  bool any_within(const Vec2& p, double radius) const {
    const int reach = static_cast<int>(std::ceil(radius / cell_));
    const auto [cx, cy] = cell_coords(p);
    const double r2 = radius * radius;
    for (int j = std::max(0, cy - reach); j <= std::min(ny_ - 1, cy + reach); ++j)
      for (int i = std::max(0, cx - reach); i <= std::min(nx_ - 1, cx + reach); ++i)
        for (int idx : cells_[static_cast<std::size_t>(j) * nx_ + i])
          if ((points_[idx] - p).squaredNorm() < r2) return true;
    return false;
  }

  /// Indices of the k nearest points, ascending by distance, ties by index.
  std::vector<int> nearest(const Vec2& q, int k) const {
    if (k > static_cast<int>(points_.size())) throw std::invalid_argument("k exceeds number of points");
    std::vector<std::pair<double, int>> found;
    if (k <= 0) return {};
    const auto [cx, cy] = cell_coords(q);
    for (int ring = 0;; ++ring) {
      visit_ring(cx, cy, ring, [&](int idx) { found.emplace_back((points_[idx] - q).squaredNorm(), idx); });
      const bool exhausted = ring > std::max(nx_, ny_);
      if (static_cast<int>(found.size()) >= k) {
        std::nth_element(found.begin(), found.begin() + (k - 1), found.end());
        // Unvisited cells lie outside the visited box; distance from q to its edge bounds them.
        const double bx0 = lo_.x() + (cx - ring) * cell_, bx1 = lo_.x() + (cx + ring + 1) * cell_;
        const double by0 = lo_.y() + (cy - ring) * cell_, by1 = lo_.y() + (cy + ring + 1) * cell_;
        const double covered = std::max(0.0, std::min({q.x() - bx0, bx1 - q.x(), q.y() - by0, by1 - q.y()}));
        if (found[k - 1].first <= covered * covered || exhausted) break;
      }
      if (exhausted) break;
    }
    std::sort(found.begin(), found.end());
    std::vector<int> out(k);
    for (int i = 0; i < k; ++i) out[i] = found[i].second;
    return out;
  }

 private:
  std::pair<int, int> cell_coords(const Vec2& p) const {
    const int cx = std::clamp(static_cast<int>(std::floor((p.x() - lo_.x()) / cell_)), 0, nx_ - 1);
    const int cy = std::clamp(static_cast<int>(std::floor((p.y() - lo_.y()) / cell_)), 0, ny_ - 1);
    return {cx, cy};
  }
  std::size_t cell_index(const Vec2& p) const {
    const auto [cx, cy] = cell_coords(p);
    return static_cast<std::size_t>(cy) * nx_ + cx;
  }
  template <class F>
  void visit_ring(int cx, int cy, int ring, F&& f) const {
    for (int j = cy - ring; j <= cy + ring; ++j) {
      if (j < 0 || j >= ny_) continue;
      const bool edge_row = (j == cy - ring || j == cy + ring);
      for (int i = cx - ring; i <= cx + ring; i += (edge_row || ring == 0) ? 1 : 2 * ring) {
        if (i < 0 || i >= nx_) continue;
        for (int idx : cells_[static_cast<std::size_t>(j) * nx_ + i]) f(idx);
      }
    }
  }

  Vec2 lo_;
  double cell_;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> cells_;
  std::vector<Vec2> points_;
};

class NodeGenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Advancing-front fill seeded from the discretised boundary.
///
/// Nodes are expanded in FIFO order; each spawns kCandidatesPerNode candidates on a
/// circle of radius h rotated by a random angle. A candidate survives when it
/// is strictly inside the domain and no accepted node lies within
/// kMinSpacingFactor * h.
inline NodeSet fill(const Domain& domain, double h, std::uint64_t seed) {
  const std::vector<BoundaryNode> boundary = discretize_boundary(domain, h);
  const double min_dist = kMinSpacingFactor * h;

  NodeSet nodes;
  nodes.h = h;
  nodes.seed = seed;
  SpatialGrid grid(domain.bbox_lo() - Vec2(h, h), domain.bbox_hi() + Vec2(h, h), h);

  for (const BoundaryNode& b : boundary) {
    // Near trim points of cut-outs two pieces can meet at a sharp angle.
    if (grid.any_within(b.position, min_dist)) continue;
    grid.insert(nodes.size(), b.position);
    nodes.positions.push_back(b.position);
    nodes.normals.push_back(b.normal);
    nodes.tags.push_back(b.tag);
  }
  nodes.boundary_count = nodes.size();
  if (nodes.boundary_count < 3) throw NodeGenerationError("fewer than 3 boundary nodes");

  const double cap = 100.0 * domain.outer_area() / (h * h);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::deque<int> queue;
  for (int i = 0; i < nodes.boundary_count; ++i) queue.push_back(i);

  const double step = 2.0 * std::numbers::pi / kCandidatesPerNode;
  while (!queue.empty()) {
    const Vec2 origin = nodes.positions[queue.front()];
    queue.pop_front();
    const double rotation = angle(rng);
    for (int c = 0; c < kCandidatesPerNode; ++c) {
      const double th = rotation + c * step;
      const Vec2 candidate = origin + h * Vec2(std::cos(th), std::sin(th));
      if (!domain.contains(candidate) || grid.any_within(candidate, min_dist)) continue;
      const int idx = nodes.size();
      grid.insert(idx, candidate);
      nodes.positions.push_back(candidate);
      queue.push_back(idx);
      if (static_cast<double>(nodes.size()) > cap)
        throw NodeGenerationError("node generation did not terminate (node cap exceeded)");
    }
  }
  return nodes;
}

/// The k nearest nodes to `query`, ascending by distance with ties broken by
/// lower index.
inline std::vector<int> nearest_neighbors(const NodeSet& nodes, const Vec2& query, int k) {
  if (k > nodes.size()) throw std::invalid_argument("k exceeds node count");
  return SpatialGrid::build(nodes.positions).nearest(query, k);
}

}  // namespace rbfplast

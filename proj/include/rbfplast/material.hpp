#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tensor.hpp"

namespace rbfplast {

/// Yield stress as a function of accumulated plastic strain.
///
/// Piecewise curves interpolate linearly between knots and extrapolate with
/// the last (first) segment slope beyond the last (before the first) knot. At a
/// knot the slope of the segment to its right is used.
class HardeningCurve {
 public:
  enum class Kind { Perfect, Linear, Piecewise };

  static HardeningCurve perfect(double yield0) { return HardeningCurve(Kind::Perfect, {{0.0, yield0}}, 0.0); }

  static HardeningCurve linear(double yield0, double slope) {
    if (slope < 0.0) throw std::invalid_argument("hardening slope must be non-negative");
    return HardeningCurve(Kind::Linear, {{0.0, yield0}}, slope);
  }

  /// Knots are (equivalent plastic strain, yield stress) pairs.
  static HardeningCurve piecewise(std::vector<std::pair<double, double>> knots) {
    if (knots.size() < 2) throw std::invalid_argument("piecewise hardening curve needs at least two knots");
    for (std::size_t i = 1; i < knots.size(); ++i) {
      if (!(knots[i].first > knots[i - 1].first))
        throw std::invalid_argument("hardening knots must be strictly increasing in plastic strain");
      if (knots[i].second < knots[i - 1].second)
        throw std::invalid_argument("hardening curve must be non-decreasing");
    }
    return HardeningCurve(Kind::Piecewise, std::move(knots), 0.0);
  }

  Kind kind() const { return kind_; }
  const std::vector<std::pair<double, double>>& knots() const { return knots_; }
  double initial_yield() const { return yield_stress(0.0); }

  double yield_stress(double eps_p) const {
    switch (kind_) {
      case Kind::Perfect: return knots_[0].second;
      case Kind::Linear: return knots_[0].second + slope_ * eps_p;
      case Kind::Piecewise: {
        const std::size_t s = segment(eps_p);
        const auto& [e0, y0] = knots_[s];
        return y0 + segment_slope(s) * (eps_p - e0);
      }
    }
    return 0.0;
  }

  double slope(double eps_p) const {
    switch (kind_) {
      case Kind::Perfect: return 0.0;
      case Kind::Linear: return slope_;
      case Kind::Piecewise: return segment_slope(segment(eps_p));
    }
    return 0.0;
  }

 private:
  HardeningCurve(Kind kind, std::vector<std::pair<double, double>> knots, double slope)
      : kind_(kind), knots_(std::move(knots)), slope_(slope) {
    for (const auto& k : knots_)
      if (!(k.second > 0.0)) throw std::invalid_argument("yield stress must be positive");
  }

  std::size_t segment(double eps_p) const {
    // Index s such that knots_[s].first <= eps_p < knots_[s + 1].first, clamped.
    auto it = std::upper_bound(knots_.begin(), knots_.end(), eps_p,
                               [](double v, const std::pair<double, double>& k) { return v < k.first; });
    std::size_t s = it == knots_.begin() ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
    return std::min(s, knots_.size() - 2);
  }
  double segment_slope(std::size_t s) const {
    return (knots_[s + 1].second - knots_[s].second) / (knots_[s + 1].first - knots_[s].first);
  }

  Kind kind_;
  std::vector<std::pair<double, double>> knots_;
  double slope_;
};

/// Synthetic uniaxial hardening data of the irregular-domain case [GPa].
inline HardeningCurve synthetic_hardening_table() {
  return HardeningCurve::piecewise({{0.000, 0.240}, {0.001, 0.290}, {0.002, 0.330}, {0.003, 0.370},
                                    {0.004, 0.400}, {0.005, 0.430}, {0.006, 0.450}, {0.007, 0.470},
                                    {0.008, 0.483}, {0.009, 0.495}, {0.010, 0.500}});
}

struct PointState {
  Tensor2PS stress;
  Tensor2PS elastic_strain;
  double eq_plastic_strain = 0.0;
};

inline double von_mises(const Tensor2PS& s) {
  const double a = s.xx - s.yy, b = s.yy - s.zz, c = s.zz - s.xx;
  return std::sqrt(0.5 * (a * a + b * b + c * c + 6.0 * s.xy * s.xy));
}

inline double yield_function(const Tensor2PS& stress, double eq_plastic_strain, const HardeningCurve& curve) {
  return von_mises(stress) - curve.yield_stress(eq_plastic_strain);
}

class ReturnMappingError : public std::runtime_error {
 public:
  explicit ReturnMappingError(double residual)
      : std::runtime_error("return mapping did not converge, residual " + std::to_string(residual)),
        residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Plastic multiplier from the single-equation Newton scheme on
///   sigma_vm_trial - 3 mu dg - sigma_y(eps_p + dg) = 0.
inline double return_mapping(double vm_trial, double eps_p, const HardeningCurve& curve, double mu, int max_iter,
                             double tol) {
  if (!(mu > 0.0)) throw std::invalid_argument("shear modulus must be positive");
  if (max_iter < 1) throw std::invalid_argument("iteration cap must be >= 1");
  double dg = 0.0;
  double phi = vm_trial - curve.yield_stress(eps_p);
  int k = 0;
  do {
    dg += phi / (3.0 * mu + curve.slope(eps_p + dg));
    phi = vm_trial - 3.0 * mu * dg - curve.yield_stress(eps_p + dg);
    ++k;
  } while (std::abs(phi) > tol && k < max_iter);
  if (std::abs(phi) > tol) throw ReturnMappingError(phi);
  return dg;
}

/// Radial return: scales the stress deviator, keeps the hydrostatic parts of
/// stress and elastic strain, and accumulates dg into the plastic strain.
inline PointState update_state(const PointState& state, double dg, double mu) {
  if (dg == 0.0) return state;
  if (dg < 0.0) throw std::invalid_argument("plastic multiplier must be non-negative");
  const double vm = von_mises(state.stress);
  if (!(vm > 0.0)) throw std::domain_error("undefined flow direction: zero von Mises stress");
  const double p = state.stress.trace() / 3.0;
  const Tensor2PS s = state.stress.deviator() * (1.0 - 3.0 * mu * dg / vm);
  PointState out;
  out.stress = s + Tensor2PS::identity(p);
  out.elastic_strain = s * (1.0 / (2.0 * mu)) + Tensor2PS::identity(state.elastic_strain.trace() / 3.0);
  out.eq_plastic_strain = state.eq_plastic_strain + dg;
  return out;
}

}  // namespace rbfplast

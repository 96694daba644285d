#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "elastic.hpp"
#include "material.hpp"

namespace rbfplast {

/// Stress components [GPa] and radial displacement [mm] in cylindrical
/// coordinates.
struct CylinderSolution {
  double sigma_r = 0.0, sigma_theta = 0.0, sigma_z = 0.0, u_r = 0.0;
};

/// Pressurised thick-walled cylinder, plane strain, fully elastic.
inline CylinderSolution elastic_reference(double r, double p, double a, double b, double young, double nu) {
  if (r < a * (1.0 - 1e-12) || r > b * (1.0 + 1e-12)) throw std::domain_error("radius outside [a, b]");
  const double den = b * b / (a * a) - 1.0;
  const double q = b * b / (r * r);
  CylinderSolution s;
  s.sigma_r = -p * (q - 1.0) / den;
  s.sigma_theta = p * (q + 1.0) / den;
  s.sigma_z = 2.0 * nu * p / den;
  s.u_r = p / young * ((1.0 + nu) * (1.0 - 2.0 * nu) * r + (1.0 + nu) * b * b / r) / den;
  return s;
}

/// Shear yield stress k = sigma_y / sqrt(3) used by the closed-form plastic solution.
inline double shear_yield(double yield) { return yield / std::numbers::sqrt3; }

/// Partially plastic cylinder with front at radius c (perfect plasticity,
/// Tresca-type closed form with shear yield k = sigma_y / sqrt(3)).
inline CylinderSolution plastic_reference(double r, double c, double a, double b, double yield, double nu,
                                          double mu) {
  if (r < a * (1.0 - 1e-12) || r > b * (1.0 + 1e-12)) throw std::domain_error("radius outside [a, b]");
  if (c < a * (1.0 - 1e-12) || c > b * (1.0 + 1e-12)) throw std::domain_error("front outside [a, b]");
  const double k = shear_yield(yield);
  const double cb = c * c / (b * b);
  CylinderSolution s;
  if (r >= c) {
    const double q = b * b / (r * r);
    s.sigma_r = -k * cb * (q - 1.0);
    s.sigma_theta = k * cb * (q + 1.0);
  } else {
    const double l = std::log(c * c / (r * r));
    s.sigma_r = -k * (1.0 - cb + l);
    s.sigma_theta = k * (1.0 + cb - l);
  }
  s.sigma_z = nu * (s.sigma_r + s.sigma_theta);
  s.u_r = (1.0 - nu) * k * c * c / (mu * r) + (1.0 - 2.0 * nu) * s.sigma_r * r / (2.0 * mu);
  return s;
}

/// Pressure at which yielding starts at the bore.
inline double onset_pressure(double a, double b, double yield) { return shear_yield(yield) * (1.0 - a * a / (b * b)); }

/// Pressure at which the plastic front reaches the outer wall.
inline double limit_pressure(double a, double b, double yield) {
  return shear_yield(yield) * std::log(b * b / (a * a));
}

inline double pressure_for_front(double c, double a, double b, double yield) {
  return shear_yield(yield) * (1.0 - c * c / (b * b) + std::log(c * c / (a * a)));
}

struct FrontRadius {
  double c = 0.0;
  bool below_onset = false;
};

/// Inverts pressure_for_front by bisection on [a, b].
inline FrontRadius front_from_pressure(double p, double a, double b, double yield) {
  if (p <= onset_pressure(a, b, yield)) return {a, true};
  if (p > limit_pressure(a, b, yield)) throw std::domain_error("beyond limit load");
  double lo = a, hi = b;
  while (hi - lo > 1e-10 * b) {
    const double mid = 0.5 * (lo + hi);
    (pressure_for_front(mid, a, b, yield) < p ? lo : hi) = mid;
  }
  return {0.5 * (lo + hi), false};
}

struct CylindricalStress {
  double r = 0.0, theta = 0.0, z = 0.0;
};

inline CylindricalStress to_cylindrical(const Tensor2PS& s, const Vec2& pos) {
  const double rad = pos.norm();
  if (rad == 0.0) throw std::domain_error("cylindrical components undefined at the origin");
  const double c = pos.x() / rad, sn = pos.y() / rad;
  return {s.xx * c * c + s.yy * sn * sn + 2.0 * s.xy * c * sn, s.xx * sn * sn + s.yy * c * c - 2.0 * s.xy * c * sn,
          s.zz};
}

struct ErrorNorm {
  double l2 = 0.0;             // sqrt(sum |u_i - u_ref,i|^2)
  double l2_normalized = 0.0;  // l2 / sqrt(N)
};

inline ErrorNorm error_norm(std::span<const Vec2> u, std::span<const Vec2> reference) {
  if (u.size() != reference.size()) throw std::invalid_argument("field size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += (u[i] - reference[i]).squaredNorm();
  ErrorNorm e;
  e.l2 = std::sqrt(acc);
  e.l2_normalized = u.empty() ? 0.0 : e.l2 / std::sqrt(static_cast<double>(u.size()));
  return e;
}

/// f(r) = C1/r + C2/r^2 + C3 log(1/r) + C4.
struct FrontFit {
  std::array<double, 4> coeffs{};
  double r_min = 0.0, r_max = 0.0;
  double rms_residual = 0.0;

  double operator()(double r) const {
    return coeffs[0] / r + coeffs[1] / (r * r) + coeffs[2] * std::log(1.0 / r) + coeffs[3];
  }
};

class FrontNotLocalizedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Least-squares fit of the front profile function, via pivoted QR on
/// column-scaled basis values.
inline FrontFit fit_front_profile(std::span<const double> r, std::span<const double> q) {
  const Eigen::Index m = static_cast<Eigen::Index>(r.size());
  if (m < 4) throw FrontNotLocalizedError("too few points for a four-parameter fit");
  Eigen::MatrixXd a(m, 4);
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    a(i, 0) = 1.0 / r[i];
    a(i, 1) = 1.0 / (r[i] * r[i]);
    a(i, 2) = std::log(1.0 / r[i]);
    a(i, 3) = 1.0;
    y(i) = q[i];
  }
  Eigen::Vector4d scale;
  for (int j = 0; j < 4; ++j) {
    scale(j) = a.col(j).norm();
    if (scale(j) == 0.0) scale(j) = 1.0;
    a.col(j) /= scale(j);
  }
  const Eigen::Vector4d sol = a.colPivHouseholderQr().solve(y);
  FrontFit fit;
  for (int j = 0; j < 4; ++j) fit.coeffs[j] = sol(j) / scale(j);
  fit.r_min = *std::min_element(r.begin(), r.end());
  fit.r_max = *std::max_element(r.begin(), r.end());
  fit.rms_residual = (a * sol - y).norm() / std::sqrt(static_cast<double>(m));
  return fit;
}

struct FrontEstimate {
  double c = 0.0;
  FrontFit plastic, elastic;
  int plastic_count = 0, elastic_count = 0;
};

namespace detail {

inline double quantile(std::vector<double> v, double q) {
  const std::size_t k = std::min(v.size() - 1, static_cast<std::size_t>(q * static_cast<double>(v.size() - 1)));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

}  // namespace detail

/// Plastic-elastic interface from a radial profile: fits the plastic
/// (eq. plastic strain > 0) and elastic samples separately and returns the
/// crossing of the two fits closest to the class boundary.
inline FrontEstimate extract_front(std::span<const double> radius, std::span<const double> quantity,
                                   std::span<const double> eq_plastic_strain, int min_per_class = 20) {
  std::vector<double> rp, qp, re, qe;
  for (std::size_t i = 0; i < radius.size(); ++i) {
    if (eq_plastic_strain[i] > 0.0) {
      rp.push_back(radius[i]);
      qp.push_back(quantity[i]);
    } else {
      re.push_back(radius[i]);
      qe.push_back(quantity[i]);
    }
  }
  if (static_cast<int>(rp.size()) < min_per_class || static_cast<int>(re.size()) < min_per_class)
    throw FrontNotLocalizedError("front not localized: a regime has too few nodes");

  FrontEstimate est;
  est.plastic = fit_front_profile(rp, qp);
  est.elastic = fit_front_profile(re, qe);
  est.plastic_count = static_cast<int>(rp.size());
  est.elastic_count = static_cast<int>(re.size());

  const double r_lo = std::min(est.plastic.r_min, est.elastic.r_min);
  const double r_hi = std::max(est.plastic.r_max, est.elastic.r_max);
  const double guess = 0.5 * (detail::quantile(rp, 0.98) + detail::quantile(re, 0.02));
  auto diff = [&](double r) { return est.plastic(r) - est.elastic(r); };

  constexpr int samples = 4000;
  std::optional<double> best;
  double prev_r = r_lo, prev_d = diff(r_lo);
  for (int s = 1; s <= samples; ++s) {
    const double r = r_lo + (r_hi - r_lo) * s / samples;
    const double d = diff(r);
    if ((prev_d <= 0.0) != (d <= 0.0)) {
      double lo = prev_r, hi = r, dlo = prev_d;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double dm = diff(mid);
        if ((dm <= 0.0) == (dlo <= 0.0)) {
          lo = mid;
          dlo = dm;
        } else {
          hi = mid;
        }
      }
      const double root = 0.5 * (lo + hi);
      if (!best || std::abs(root - guess) < std::abs(*best - guess)) best = root;
    }
    prev_r = r;
    prev_d = d;
  }
  if (!best) throw FrontNotLocalizedError("front not localized: fits do not cross");
  est.c = *best;
  return est;
}

/// Radial profile samples of the nodes whose polar angle lies in [theta0, theta1).
struct RadialSamples {
  std::vector<double> radius, hoop_stress, eq_plastic_strain;
};

inline RadialSamples hoop_profile(std::span<const Vec2> positions, std::span<const PointState> states,
                                  double theta0, double theta1, bool include_end = false) {
  RadialSamples out;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const double th = std::atan2(positions[i].y(), positions[i].x());
    if (th < theta0 || th > theta1 || (th == theta1 && !include_end)) continue;
    out.radius.push_back(positions[i].norm());
    out.hoop_stress.push_back(to_cylindrical(states[i].stress, positions[i]).theta);
    out.eq_plastic_strain.push_back(states[i].eq_plastic_strain);
  }
  return out;
}

/// Front radius from the hoop-stress profile of nodes in an angular range.
inline FrontEstimate extract_front(std::span<const Vec2> positions, std::span<const PointState> states,
                                   double theta0 = 0.0, double theta1 = std::numbers::pi / 2.0) {
  const RadialSamples s = hoop_profile(positions, states, theta0, theta1, true);
  return extract_front(s.radius, s.hoop_stress, s.eq_plastic_strain);
}

struct SegmentFront {
  double angle = 0.0;  // segment mid angle [rad]
  double c = 0.0;
  bool ok = false;     // false when the segment was too sparse or the fits did not cross
};

/// Front radius per equal angular segment of [theta0, theta1].
inline std::vector<SegmentFront> front_shape(std::span<const Vec2> positions, std::span<const PointState> states,
                                             int segments, double theta0 = 0.0,
                                             double theta1 = std::numbers::pi / 2.0) {
  if (segments < 1) throw std::invalid_argument("segment count must be positive");
  std::vector<SegmentFront> out;
  const double width = (theta1 - theta0) / segments;
  for (int s = 0; s < segments; ++s) {
    const double t0 = theta0 + s * width, t1 = t0 + width;
    SegmentFront seg;
    seg.angle = 0.5 * (t0 + t1);
    const RadialSamples samples = hoop_profile(positions, states, t0, t1, s == segments - 1);
    try {
      seg.c = extract_front(samples.radius, samples.hoop_stress, samples.eq_plastic_strain).c;
      seg.ok = true;
    } catch (const FrontNotLocalizedError&) {
      seg.ok = false;
    }
    out.push_back(seg);
  }
  return out;
}

}  // namespace rbfplast

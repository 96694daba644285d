#pragma once

#include <cmath>

namespace rbfplast {

/// Symmetric second-order tensor in plane strain. The xz and yz components are
/// identically zero and not stored.
struct Tensor2PS {
  double xx = 0.0, yy = 0.0, zz = 0.0, xy = 0.0;

  double trace() const { return xx + yy + zz; }
  double norm() const { return std::sqrt(xx * xx + yy * yy + zz * zz + 2.0 * xy * xy); }

  Tensor2PS deviator() const {
    const double p = trace() / 3.0;
    return {xx - p, yy - p, zz - p, xy};
  }
  static Tensor2PS identity(double s = 1.0) { return {s, s, s, 0.0}; }

  Tensor2PS& operator+=(const Tensor2PS& o) {
    xx += o.xx, yy += o.yy, zz += o.zz, xy += o.xy;
    return *this;
  }
  Tensor2PS& operator-=(const Tensor2PS& o) {
    xx -= o.xx, yy -= o.yy, zz -= o.zz, xy -= o.xy;
    return *this;
  }
  Tensor2PS& operator*=(double s) {
    xx *= s, yy *= s, zz *= s, xy *= s;
    return *this;
  }
  friend Tensor2PS operator+(Tensor2PS a, const Tensor2PS& b) { return a += b; }
  friend Tensor2PS operator-(Tensor2PS a, const Tensor2PS& b) { return a -= b; }
  friend Tensor2PS operator*(Tensor2PS a, double s) { return a *= s; }
  friend Tensor2PS operator*(double s, Tensor2PS a) { return a *= s; }
  friend bool operator==(const Tensor2PS&, const Tensor2PS&) = default;
};

}  // namespace rbfplast

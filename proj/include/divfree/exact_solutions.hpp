// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <string>

#include "divfree/mesh.hpp"

namespace divfree {

/// Smooth Stokes solution used for the convergence studies:
///   u = curl(phi),  phi = x y (1-x)(2x-1)(y-1)(2y-1),
/// which vanishes on the boundary of both test domains, paired with a
/// zero-mean quadratic pressure (different cross coefficient per domain).
/// The force is f = -nu * Lap(u) + grad(p) (u is divergence-free).
struct ManufacturedStokes {
  double cxy = 8.0 / 3.0;  // coefficient of the xy pressure term

  static ManufacturedStokes square() { return {8.0 / 3.0}; }
  static ManufacturedStokes lshape() { return {24.0 / 7.0}; }
  static ManufacturedStokes for_domain(const std::string& domain) {
    return domain == "lshape" ? lshape() : square();
  }

  // phi = X(x) * Y(y) with X(t) = -2t^3+3t^2-t and Y(t) = 2t^3-3t^2+t
  static double X(double t) { return ((-2 * t + 3) * t - 1) * t; }
  static double Xp(double t) { return (-6 * t + 6) * t - 1; }
  static double Xpp(double t) { return -12 * t + 6; }
  static double Y(double t) { return ((2 * t - 3) * t + 1) * t; }
  static double Yp(double t) { return (6 * t - 6) * t + 1; }
  static double Ypp(double t) { return 12 * t - 6; }

  double stream(const Vec2& p) const { return X(p.x()) * Y(p.y()); }

  Vec2 velocity(const Vec2& p) const {
    return Vec2(X(p.x()) * Yp(p.y()), -Xp(p.x()) * Y(p.y()));
  }

  /// Entries (r,c) = d(u_r)/d(x_c).
  Eigen::Matrix2d velocity_grad(const Vec2& p) const {
    Eigen::Matrix2d g;
    g(0, 0) = Xp(p.x()) * Yp(p.y());
    g(0, 1) = X(p.x()) * Ypp(p.y());
    g(1, 0) = -Xpp(p.x()) * Y(p.y());
    g(1, 1) = -Xp(p.x()) * Yp(p.y());
    return g;
  }

  Eigen::Matrix2d strain(const Vec2& p) const {
    const Eigen::Matrix2d g = velocity_grad(p);
    return 0.5 * (g + g.transpose());
  }

  double pressure(const Vec2& p) const {
    return p.x() * p.x() - 3 * p.y() * p.y() + cxy * p.x() * p.y();
  }

  Vec2 pressure_grad(const Vec2& p) const {
    return Vec2(2 * p.x() + cxy * p.y(), -6 * p.y() + cxy * p.x());
  }

  Vec2 force(double nu, const Vec2& p) const {
    // Lap(u) = (X''Y' + X Y''', -X'''Y - X'Y'') with X''' = -12, Y''' = 12
    const Vec2 lap(Xpp(p.x()) * Yp(p.y()) + 12 * X(p.x()),
                   12 * Y(p.y()) - Xp(p.x()) * Ypp(p.y()));
    return -nu * lap + pressure_grad(p);
  }
};

/// The fixed right-hand side f = 2(1,x) of the second experiment.
inline Vec2 fixed_load(const Vec2& p) { return Vec2(2.0, 2.0 * p.x()); }

}  // namespace divfree

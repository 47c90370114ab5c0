// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace divfree {

struct QuadPoint1D {
  double t;  // in [0,1]
  double w;
};

struct QuadPointTri {
  double x;  // reference triangle {x,y >= 0, x+y <= 1}
  double y;
  double w;  // weights sum to 1/2
};

/// Gauss-Legendre rule on [0,1] with n points, exact for degree 2n-1.
inline std::vector<QuadPoint1D> gauss_rule(int n) {
  if (n < 1) throw std::invalid_argument("gauss_rule: n must be >= 1");
  std::vector<QuadPoint1D> pts(n);
  for (int i = 0; i < n; ++i) {
    // Newton iteration on P_n over [-1,1], seeded by the Chebyshev estimate
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    pts[n - 1 - i].t = 0.5 * (x + 1.0);
    pts[n - 1 - i].w = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return pts;
}

/// Triangle rule exact for total degree <= `degree`, all weights positive.
/// Collapsed tensor construction: x = s, y = (1-s) v with Gauss points in s and v;
/// the extra (1-s) Jacobian raises the s-degree by one, hence n = (degree+3)/2.
inline std::vector<QuadPointTri> triangle_rule(int degree) {
  if (degree < 0) throw std::invalid_argument("triangle_rule: degree must be >= 0");
  int n = (degree + 3) / 2;
  auto g = gauss_rule(n);
  std::vector<QuadPointTri> pts;
  pts.reserve(static_cast<size_t>(n) * n);
  for (const auto& a : g)
    for (const auto& b : g)
      pts.push_back({a.t, (1.0 - a.t) * b.t, a.w * b.w * (1.0 - a.t)});
  return pts;
}

}  // namespace divfree

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <stdexcept>
#include <vector>

#include "divfree/exact_solutions.hpp"
#include "divfree/mesh.hpp"
#include "divfree/quadrature.hpp"
#include "divfree/sparse.hpp"
#include "divfree/spaces.hpp"

namespace divfree {

struct AssemblyConfig {
  double nu = 0.5;      // viscosity
  double alpha = 6.0;   // interior penalty parameter
  int tri_degree = 6;   // triangle quadrature degree
  int edge_points = 4;  // Gauss points per edge

  void validate() const {
    if (!(nu > 0.0)) throw std::invalid_argument("AssemblyConfig: nu must be positive");
    if (!(alpha > 0.0)) throw std::invalid_argument("AssemblyConfig: alpha must be positive");
  }
};

namespace detail {

/// Per-element data of the signed local BDM1 basis (the global basis
/// functions restricted to the element).
struct Bdm1ElemBasis {
  ElementMap map;
  int gdof[6];
  double sign[6];
  Eigen::Matrix2d grad[6];  // physical gradients, constant per basis
  Eigen::Matrix2d eps[6];
  double div[6];

  Bdm1ElemBasis(const FeSpace& Vh, int t) {
    map = Vh.mesh().element_map(t);
    for (int l = 0; l < 6; ++l) {
      gdof[l] = Vh.elem_dof(t, l);
      sign[l] = Vh.elem_sign(t, l);
      grad[l] = sign[l] * map.B * bdm1_ref_grad(l) * map.Binv / map.det;
      eps[l] = 0.5 * (grad[l] + grad[l].transpose());
      div[l] = grad[l].trace();
    }
  }

  Vec2 value(int l, const Vec2& xhat) const {
    return sign[l] * map.B * bdm1_ref_value(l, xhat) / map.det;
  }
};

inline Eigen::Matrix2d sym_outer(const Vec2& a, const Vec2& n) {
  const Eigen::Matrix2d an = a * n.transpose();
  return 0.5 * (an + an.transpose());
}

inline double ddot(const Eigen::Matrix2d& a, const Eigen::Matrix2d& b) {
  return a.cwiseProduct(b).sum();
}

inline void require_kind(const FeSpace& s, SpaceKind k, const char* who) {
  if (s.kind() != k) throw std::invalid_argument(std::string(who) + ": wrong space kind");
}

inline void require_same_mesh(const FeSpace& a, const FeSpace& b, const char* who) {
  if (&a.mesh() != &b.mesh()) throw std::invalid_argument(std::string(who) + ": mesh mismatch");
}

}  // namespace detail

/// DG elasticity form on Bdm1Velocity:
///   a_h(u,v) = 2nu [ (eps(u):eps(v)) - <{eps(u)}:[[v_t]]> - <[[u_t]]:{eps(v)}>
///              + alpha sum_e h_e^{-1} <[[u_t]]:[[v_t]]> ]
/// with the edge sums over interior edges only (boundary normal DOFs are
/// eliminated, so no boundary terms arise).
inline SparseMatrix assemble_a(const FeSpace& Vh, const AssemblyConfig& cfg) {
  detail::require_kind(Vh, SpaceKind::Bdm1Velocity, "assemble_a");
  cfg.validate();
  const Mesh2D& m = Vh.mesh();
  // the common 2*nu factor is applied once after compression so that the
  // assembled matrix scales exactly linearly in nu
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(36 * static_cast<size_t>(m.n_triangles()) +
                144 * static_cast<size_t>(m.n_interior_edges()));

  for (int t = 0; t < m.n_triangles(); ++t) {
    detail::Bdm1ElemBasis b(Vh, t);
    const double area = m.tri_area(t);
    for (int i = 0; i < 6; ++i) {
      if (b.gdof[i] < 0) continue;
      for (int j = 0; j < 6; ++j) {
        if (b.gdof[j] < 0) continue;
        trips.emplace_back(b.gdof[i], b.gdof[j], area * detail::ddot(b.eps[i], b.eps[j]));
      }
    }
  }

  const auto rule = gauss_rule(cfg.edge_points);
  for (int e = 0; e < m.n_edges(); ++e) {
    const MeshEdge& ed = m.edge(e);
    if (ed.boundary) continue;
    const Vec2 pa = m.vertex(ed.a);
    const detail::Bdm1ElemBasis basis[2] = {detail::Bdm1ElemBasis(Vh, ed.tri[0]),
                                            detail::Bdm1ElemBasis(Vh, ed.tri[1])};
    // 12 one-sided traces: side s contributes jump factor +/-1
    int gd[12];
    Eigen::Matrix2d half_eps[12];
    for (int s = 0; s < 2; ++s)
      for (int l = 0; l < 6; ++l) {
        gd[6 * s + l] = basis[s].gdof[l];
        half_eps[6 * s + l] = 0.5 * basis[s].eps[l];
      }
    Eigen::Matrix<double, 12, 12> loc = Eigen::Matrix<double, 12, 12>::Zero();
    for (const auto& q : rule) {
      const Vec2 x = pa + q.t * ed.length * ed.tangent;
      Eigen::Matrix2d jump[12];
      for (int s = 0; s < 2; ++s) {
        const double sf = s == 0 ? 1.0 : -1.0;
        const Vec2 xh = basis[s].map.to_reference(x);
        for (int l = 0; l < 6; ++l) {
          const Vec2 v = basis[s].value(l, xh);
          const Vec2 vt = v - v.dot(ed.normal) * ed.normal;
          jump[6 * s + l] = sf * detail::sym_outer(vt, ed.normal);
        }
      }
      const double w = q.w * ed.length;
      for (int i = 0; i < 12; ++i) {
        if (gd[i] < 0) continue;
        for (int j = 0; j < 12; ++j) {
          if (gd[j] < 0) continue;
          loc(i, j) +=
              w * (-detail::ddot(half_eps[j], jump[i]) - detail::ddot(jump[j], half_eps[i]) +
                   cfg.alpha / ed.length * detail::ddot(jump[j], jump[i]));
        }
      }
    }
    for (int i = 0; i < 12; ++i) {
      if (gd[i] < 0) continue;
      for (int j = 0; j < 12; ++j)
        if (gd[j] >= 0) trips.emplace_back(gd[i], gd[j], loc(i, j));
    }
  }
  SparseMatrix::Storage s(Vh.dim(), Vh.dim());
  s.setFromTriplets(trips.begin(), trips.end());
  s *= 2.0 * cfg.nu;
  return SparseMatrix::from_eigen(std::move(s), /*symmetric=*/true);
}

/// b(v,q) = -(q, div v); exact (piecewise-constant integrand).
inline SparseMatrix assemble_bdiv(const FeSpace& Vh, const FeSpace& Qh) {
  detail::require_kind(Vh, SpaceKind::Bdm1Velocity, "assemble_bdiv");
  detail::require_kind(Qh, SpaceKind::P0Pressure, "assemble_bdiv");
  detail::require_same_mesh(Vh, Qh, "assemble_bdiv");
  const Mesh2D& m = Vh.mesh();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(6 * static_cast<size_t>(m.n_triangles()));
  for (int t = 0; t < m.n_triangles(); ++t) {
    detail::Bdm1ElemBasis b(Vh, t);
    for (int l = 0; l < 6; ++l)
      if (b.gdof[l] >= 0) trips.emplace_back(t, b.gdof[l], -b.div[l] * m.tri_area(t));
  }
  return SparseMatrix::from_triplets(Qh.dim(), Vh.dim(), trips, false);
}

/// Velocity mass matrix.
inline SparseMatrix assemble_mass(const FeSpace& Vh, const AssemblyConfig& cfg) {
  detail::require_kind(Vh, SpaceKind::Bdm1Velocity, "assemble_mass");
  const Mesh2D& m = Vh.mesh();
  const auto rule = triangle_rule(cfg.tri_degree);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(36 * static_cast<size_t>(m.n_triangles()));
  for (int t = 0; t < m.n_triangles(); ++t) {
    detail::Bdm1ElemBasis b(Vh, t);
    Eigen::Matrix<double, 6, 6> loc = Eigen::Matrix<double, 6, 6>::Zero();
    for (const auto& q : rule) {
      const Vec2 xh(q.x, q.y);
      Vec2 v[6];
      for (int l = 0; l < 6; ++l) v[l] = b.value(l, xh);
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) loc(i, j) += q.w * v[i].dot(v[j]);
    }
    loc *= b.map.det;
    for (int i = 0; i < 6; ++i) {
      if (b.gdof[i] < 0) continue;
      for (int j = 0; j < 6; ++j)
        if (b.gdof[j] >= 0) trips.emplace_back(b.gdof[i], b.gdof[j], loc(i, j));
    }
  }
  return SparseMatrix::from_triplets(Vh.dim(), Vh.dim(), trips, true);
}

/// Matrix of the curl embedding N_h -> V_h: column j holds the velocity
/// coefficients of curl(psi_j), computed by applying the BDM edge moments to
/// curl(psi) (= the tangential derivative of psi along each edge).
inline SparseMatrix assemble_pcurl(const FeSpace& Nh, const FeSpace& Vh) {
  detail::require_kind(Nh, SpaceKind::P2Stream, "assemble_pcurl");
  detail::require_kind(Vh, SpaceKind::Bdm1Velocity, "assemble_pcurl");
  detail::require_same_mesh(Nh, Vh, "assemble_pcurl");
  const Mesh2D& m = Vh.mesh();
  const auto rule = gauss_rule(2);  // integrands of degree <= 2 on each edge
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(6 * static_cast<size_t>(m.n_interior_edges()));
  for (int e = 0; e < m.n_edges(); ++e) {
    const MeshEdge& ed = m.edge(e);
    if (ed.boundary) continue;
    const int idx = Vh.interior_edge_index(e);
    const int t = ed.tri[0];
    const ElementMap map = m.element_map(t);
    const Vec2 pa = m.vertex(ed.a);
    double c0[6] = {0, 0, 0, 0, 0, 0}, c1[6] = {0, 0, 0, 0, 0, 0};
    for (const auto& q : rule) {
      const Vec2 x = pa + q.t * ed.length * ed.tangent;
      Vec2 gh[6];
      p2_ref_grads(map.to_reference(x), gh);
      for (int l = 0; l < 6; ++l) {
        const Vec2 g = map.Binv.transpose() * gh[l];
        const double un = Vec2(g.y(), -g.x()).dot(ed.normal);
        c0[l] += q.w * ed.length * un;
        c1[l] += q.w * ed.length * (2.0 * q.t - 1.0) * un;
      }
    }
    for (int l = 0; l < 6; ++l) {
      const int nd = Nh.elem_dof(t, l);
      if (nd < 0) continue;
      if (std::abs(c0[l]) > 1e-13) trips.emplace_back(2 * idx, nd, c0[l]);
      if (std::abs(c1[l]) > 1e-13) trips.emplace_back(2 * idx + 1, nd, c1[l]);
    }
  }
  return SparseMatrix::from_triplets(Vh.dim(), Nh.dim(), trips, false);
}

/// A_q = P_curl^T M P_curl (equals the P2 Dirichlet stiffness).
inline SparseMatrix assemble_aq(const SparseMatrix& M, const SparseMatrix& Pcurl) {
  if (M.cols() != Pcurl.rows()) throw std::invalid_argument("assemble_aq: dimension mismatch");
  Eigen::SparseMatrix<double> P(Pcurl.eigen()), Mc(M.eigen());
  Eigen::SparseMatrix<double> aq = P.transpose() * Mc * P;
  return SparseMatrix::from_eigen(Eigen::SparseMatrix<double, Eigen::RowMajor>(aq), true);
}

/// Directly assembled stiffness of the stream space (homogeneous Dirichlet).
inline SparseMatrix assemble_p2_stiffness(const FeSpace& Nh, const AssemblyConfig& cfg) {
  detail::require_kind(Nh, SpaceKind::P2Stream, "assemble_p2_stiffness");
  const Mesh2D& m = Nh.mesh();
  const auto rule = triangle_rule(cfg.tri_degree);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(36 * static_cast<size_t>(m.n_triangles()));
  for (int t = 0; t < m.n_triangles(); ++t) {
    const ElementMap map = m.element_map(t);
    Eigen::Matrix<double, 6, 6> loc = Eigen::Matrix<double, 6, 6>::Zero();
    for (const auto& q : rule) {
      Vec2 gh[6];
      p2_ref_grads(Vec2(q.x, q.y), gh);
      Vec2 g[6];
      for (int l = 0; l < 6; ++l) g[l] = map.Binv.transpose() * gh[l];
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) loc(i, j) += q.w * g[i].dot(g[j]);
    }
    loc *= map.det;
    for (int i = 0; i < 6; ++i) {
      const int gi = Nh.elem_dof(t, i);
      if (gi < 0) continue;
      for (int j = 0; j < 6; ++j) {
        const int gj = Nh.elem_dof(t, j);
        if (gj >= 0) trips.emplace_back(gi, gj, loc(i, j));
      }
    }
  }
  return SparseMatrix::from_triplets(Nh.dim(), Nh.dim(), trips, true);
}

/// Load vector F[i] = (f, phi_i) plus, when an exact solution is supplied,
/// the boundary traction correction
///   sum_{boundary e} int_e 2 nu ((eps(u)n).t) (phi_i.t) ds
/// needed because the manufactured velocity does not satisfy the natural
/// condition (eps(u)n).t = 0.
inline Eigen::VectorXd assemble_rhs(const FeSpace& Vh,
                                    const std::function<Vec2(const Vec2&)>& f,
                                    const AssemblyConfig& cfg,
                                    const ManufacturedStokes* exact = nullptr) {
  detail::require_kind(Vh, SpaceKind::Bdm1Velocity, "assemble_rhs");
  const Mesh2D& m = Vh.mesh();
  Eigen::VectorXd F = Eigen::VectorXd::Zero(Vh.dim());
  const auto rule = triangle_rule(cfg.tri_degree);
  for (int t = 0; t < m.n_triangles(); ++t) {
    detail::Bdm1ElemBasis b(Vh, t);
    for (const auto& q : rule) {
      const Vec2 xh(q.x, q.y);
      const Vec2 fv = f(b.map.to_physical(xh));
      for (int l = 0; l < 6; ++l)
        if (b.gdof[l] >= 0) F[b.gdof[l]] += q.w * b.map.det * fv.dot(b.value(l, xh));
    }
  }
  if (exact) {
    const auto erule = gauss_rule(cfg.edge_points);
    for (int e = 0; e < m.n_edges(); ++e) {
      const MeshEdge& ed = m.edge(e);
      if (!ed.boundary) continue;
      const int t = ed.any_element();
      detail::Bdm1ElemBasis b(Vh, t);
      const Vec2 n = ed.outward_normal();
      const Vec2 pa = m.vertex(ed.a);
      for (const auto& q : erule) {
        const Vec2 x = pa + q.t * ed.length * ed.tangent;
        const Vec2 en = exact->strain(x) * n;
        const Vec2 traction_t = 2.0 * cfg.nu * (en - en.dot(n) * n);
        const Vec2 xh = b.map.to_reference(x);
        for (int l = 0; l < 6; ++l)
          if (b.gdof[l] >= 0)
            F[b.gdof[l]] += q.w * ed.length * traction_t.dot(b.value(l, xh));
      }
    }
  }
  return F;
}

/// Gram matrix of the broken H1 seminorm: sum_K int grad(u):grad(v).
inline SparseMatrix assemble_grad_gram(const FeSpace& Vh) {
  detail::require_kind(Vh, SpaceKind::Bdm1Velocity, "assemble_grad_gram");
  const Mesh2D& m = Vh.mesh();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(36 * static_cast<size_t>(m.n_triangles()));
  for (int t = 0; t < m.n_triangles(); ++t) {
    detail::Bdm1ElemBasis b(Vh, t);
    for (int i = 0; i < 6; ++i) {
      if (b.gdof[i] < 0) continue;
      for (int j = 0; j < 6; ++j)
        if (b.gdof[j] >= 0)
          trips.emplace_back(b.gdof[i], b.gdof[j],
                             m.tri_area(t) * detail::ddot(b.grad[i], b.grad[j]));
    }
  }
  return SparseMatrix::from_triplets(Vh.dim(), Vh.dim(), trips, true);
}

/// Gram matrix of the tangential-jump seminorm:
/// sum_{interior e} h_e^{-1} int_e [[u_t]]:[[v_t]].
inline SparseMatrix assemble_jump_gram(const FeSpace& Vh, int edge_points = 4) {
  detail::require_kind(Vh, SpaceKind::Bdm1Velocity, "assemble_jump_gram");
  const Mesh2D& m = Vh.mesh();
  const auto rule = gauss_rule(edge_points);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(144 * static_cast<size_t>(m.n_interior_edges()));
  for (int e = 0; e < m.n_edges(); ++e) {
    const MeshEdge& ed = m.edge(e);
    if (ed.boundary) continue;
    const Vec2 pa = m.vertex(ed.a);
    const detail::Bdm1ElemBasis basis[2] = {detail::Bdm1ElemBasis(Vh, ed.tri[0]),
                                            detail::Bdm1ElemBasis(Vh, ed.tri[1])};
    int gd[12];
    for (int s = 0; s < 2; ++s)
      for (int l = 0; l < 6; ++l) gd[6 * s + l] = basis[s].gdof[l];
    Eigen::Matrix<double, 12, 12> loc = Eigen::Matrix<double, 12, 12>::Zero();
    for (const auto& q : rule) {
      const Vec2 x = pa + q.t * ed.length * ed.tangent;
      Eigen::Matrix2d jump[12];
      for (int s = 0; s < 2; ++s) {
        const double sf = s == 0 ? 1.0 : -1.0;
        const Vec2 xh = basis[s].map.to_reference(x);
        for (int l = 0; l < 6; ++l) {
          const Vec2 v = basis[s].value(l, xh);
          const Vec2 vt = v - v.dot(ed.normal) * ed.normal;
          jump[6 * s + l] = sf * detail::sym_outer(vt, ed.normal);
        }
      }
      for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 12; ++j)
          loc(i, j) += q.w * detail::ddot(jump[j], jump[i]);  // one h_e cancels
    }
    for (int i = 0; i < 12; ++i) {
      if (gd[i] < 0) continue;
      for (int j = 0; j < 12; ++j)
        if (gd[j] >= 0) trips.emplace_back(gd[i], gd[j], loc(i, j));
    }
  }
  return SparseMatrix::from_triplets(Vh.dim(), Vh.dim(), trips, true);
}

}  // namespace divfree

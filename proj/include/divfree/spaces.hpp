// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "divfree/mesh.hpp"
#include "divfree/quadrature.hpp"

namespace divfree {

enum class SpaceKind { Bdm1Velocity, P0Pressure, P2Stream };

// ---------------------------------------------------------------------------
// Reference bases
// ---------------------------------------------------------------------------

/// BDM1 basis on the reference triangle, dual to the unnormalized Legendre
/// edge moments (weights 1 and 2t-1 along the counterclockwise traversal,
/// outward normal). Column j = 2k+i is the basis for moment i of edge k;
/// rows are monomial coefficients [c1, c1x, c1y, c2, c2x, c2y].
inline const Eigen::Matrix<double, 6, 6>& bdm1_ref_coeffs() {
  static const Eigen::Matrix<double, 6, 6> c = [] {
    Eigen::Matrix<double, 6, 6> m;
    m << 0, 0, 0, 0, -1, -3,   // c1
        1, 3, 1, -3, 1, 3,     // c1x
        0, 0, 0, 0, 0, 6,      // c1y
        -1, 3, 0, 0, 0, 0,     // c2
        0, -6, 0, 0, 0, 0,     // c2x
        1, -3, 1, 3, 1, -3;    // c2y
    return m;
  }();
  return c;
}

inline Vec2 bdm1_ref_value(int j, const Vec2& xh) {
  const auto& c = bdm1_ref_coeffs();
  return Vec2(c(0, j) + c(1, j) * xh.x() + c(2, j) * xh.y(),
              c(3, j) + c(4, j) * xh.x() + c(5, j) * xh.y());
}

/// Constant reference gradient, entries (r,c) = d(u_r)/d(xhat_c).
inline Eigen::Matrix2d bdm1_ref_grad(int j) {
  const auto& c = bdm1_ref_coeffs();
  Eigen::Matrix2d g;
  g << c(1, j), c(2, j), c(4, j), c(5, j);
  return g;
}

/// P2 Lagrange basis values, node order [v0, v1, v2, m01, m12, m20].
inline void p2_ref_values(const Vec2& xh, double out[6]) {
  const double l0 = 1.0 - xh.x() - xh.y(), l1 = xh.x(), l2 = xh.y();
  out[0] = l0 * (2 * l0 - 1);
  out[1] = l1 * (2 * l1 - 1);
  out[2] = l2 * (2 * l2 - 1);
  out[3] = 4 * l0 * l1;
  out[4] = 4 * l1 * l2;
  out[5] = 4 * l2 * l0;
}

inline void p2_ref_grads(const Vec2& xh, Vec2 out[6]) {
  const double l0 = 1.0 - xh.x() - xh.y(), l1 = xh.x(), l2 = xh.y();
  const Vec2 g0(-1, -1), g1(1, 0), g2(0, 1);
  out[0] = (4 * l0 - 1) * g0;
  out[1] = (4 * l1 - 1) * g1;
  out[2] = (4 * l2 - 1) * g2;
  out[3] = 4 * (l0 * g1 + l1 * g0);
  out[4] = 4 * (l1 * g2 + l2 * g1);
  out[5] = 4 * (l2 * g0 + l0 * g2);
}

// ---------------------------------------------------------------------------
// FeSpace
// ---------------------------------------------------------------------------

/// DOF enumeration for one of the exact-sequence trio of spaces on a mesh.
///
/// Bdm1Velocity: two normal-moment DOFs per interior edge (constant and
///   Legendre-linear in the edge's a->b parameterization, against the edge
///   normal n = rot(tangent)); boundary-edge DOFs eliminated by u.n = 0.
/// P0Pressure: one DOF per element (zero mean enforced downstream).
/// P2Stream: Lagrange nodes at interior vertices and interior edge midpoints
///   (homogeneous Dirichlet).
class FeSpace : public std::enable_shared_from_this<FeSpace> {
 public:
  static std::shared_ptr<const FeSpace> create(MeshPtr mesh, SpaceKind kind) {
    return std::shared_ptr<const FeSpace>(new FeSpace(std::move(mesh), kind));
  }

  SpaceKind kind() const { return kind_; }
  const Mesh2D& mesh() const { return *mesh_; }
  MeshPtr mesh_shared() const { return mesh_; }
  int dim() const { return dim_; }
  int n_local_dofs() const { return kind_ == SpaceKind::P0Pressure ? 1 : 6; }
  int n_eliminated() const { return n_eliminated_; }

  /// Global DOF of local DOF l on element t; -1 if eliminated.
  int elem_dof(int t, int l) const { return elem_dofs_[t][l]; }
  /// Orientation sign relating the element-local reference DOF to the global
  /// one (BDM constant moments only; +1 elsewhere).
  double elem_sign(int t, int l) const { return elem_signs_[t][l]; }

  int interior_edge_index(int e) const { return interior_edge_index_[e]; }
  int interior_vertex_index(int v) const { return interior_vertex_index_[v]; }
  int n_interior_vertices() const { return n_interior_vertices_; }

 private:
  FeSpace(MeshPtr mesh, SpaceKind kind) : kind_(kind), mesh_(std::move(mesh)) {
    const Mesh2D& m = *mesh_;
    interior_edge_index_.assign(m.n_edges(), -1);
    int ie = 0;
    for (int e = 0; e < m.n_edges(); ++e)
      if (!m.edge(e).boundary) interior_edge_index_[e] = ie++;

    switch (kind_) {
      case SpaceKind::Bdm1Velocity: {
        dim_ = 2 * ie;
        n_eliminated_ = 2 * m.n_boundary_edges();
        elem_dofs_.assign(m.n_triangles(), {-1, -1, -1, -1, -1, -1});
        elem_signs_.assign(m.n_triangles(), {1, 1, 1, 1, 1, 1});
        for (int t = 0; t < m.n_triangles(); ++t)
          for (int k = 0; k < 3; ++k) {
            const int e = m.tri_edge(t, k);
            // the constant moment flips with traversal direction, the
            // Legendre-linear moment does not
            elem_signs_[t][2 * k] = m.tri_edge_sign(t, k);
            const int idx = interior_edge_index_[e];
            if (idx < 0) continue;
            elem_dofs_[t][2 * k] = 2 * idx;
            elem_dofs_[t][2 * k + 1] = 2 * idx + 1;
          }
        break;
      }
      case SpaceKind::P0Pressure: {
        dim_ = m.n_triangles();
        n_eliminated_ = 0;
        elem_dofs_.assign(m.n_triangles(), {-1, -1, -1, -1, -1, -1});
        elem_signs_.assign(m.n_triangles(), {1, 1, 1, 1, 1, 1});
        for (int t = 0; t < m.n_triangles(); ++t) elem_dofs_[t][0] = t;
        break;
      }
      case SpaceKind::P2Stream: {
        interior_vertex_index_.assign(m.n_vertices(), -1);
        int iv = 0;
        for (int v = 0; v < m.n_vertices(); ++v)
          if (!m.vertex_on_boundary(v)) interior_vertex_index_[v] = iv++;
        n_interior_vertices_ = iv;
        dim_ = iv + ie;
        n_eliminated_ = (m.n_vertices() - iv) + m.n_boundary_edges();
        elem_dofs_.assign(m.n_triangles(), {-1, -1, -1, -1, -1, -1});
        elem_signs_.assign(m.n_triangles(), {1, 1, 1, 1, 1, 1});
        for (int t = 0; t < m.n_triangles(); ++t) {
          const auto& tri = m.triangle(t);
          for (int k = 0; k < 3; ++k) {
            elem_dofs_[t][k] = interior_vertex_index_[tri[k]];
            const int idx = interior_edge_index_[m.tri_edge(t, k)];
            elem_dofs_[t][3 + k] = idx < 0 ? -1 : iv + idx;
          }
        }
        break;
      }
    }
  }

  SpaceKind kind_;
  MeshPtr mesh_;
  int dim_ = 0;
  int n_eliminated_ = 0;
  int n_interior_vertices_ = 0;
  std::vector<std::array<int, 6>> elem_dofs_;
  std::vector<std::array<double, 6>> elem_signs_;
  std::vector<int> interior_edge_index_;
  std::vector<int> interior_vertex_index_;
};

using FeSpacePtr = std::shared_ptr<const FeSpace>;

inline FeSpacePtr build_space(MeshPtr mesh, SpaceKind kind) {
  return FeSpace::create(std::move(mesh), kind);
}

// ---------------------------------------------------------------------------
// Field
// ---------------------------------------------------------------------------

/// Coefficient vector tagged with its space; evaluable per element.
struct Field {
  FeSpacePtr space;
  Eigen::VectorXd coeffs;

  Field() = default;
  Field(FeSpacePtr s, Eigen::VectorXd c) : space(std::move(s)), coeffs(std::move(c)) {
    if (coeffs.size() != space->dim())
      throw std::invalid_argument("Field: coefficient length does not match space dimension");
  }
  static Field zero(FeSpacePtr s) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(s->dim());
    return Field(std::move(s), std::move(c));
  }

  void check_elem(int t) const {
    if (t < 0 || t >= space->mesh().n_triangles())
      throw std::out_of_range("Field: element index out of range");
  }

  /// Element-local coefficients in reference-DOF order (signs applied).
  void local_coeffs(int t, double out[6]) const {
    check_elem(t);
    for (int l = 0; l < 6; ++l) {
      const int g = space->elem_dof(t, l);
      out[l] = g < 0 ? 0.0 : space->elem_sign(t, l) * coeffs[g];
    }
  }

  Vec2 velocity(int t, const Vec2& xhat) const {
    check_kind(SpaceKind::Bdm1Velocity);
    check_elem(t);
    const ElementMap map = space->mesh().element_map(t);
    double r[6];
    local_coeffs(t, r);
    Vec2 uh = Vec2::Zero();
    for (int l = 0; l < 6; ++l)
      if (r[l] != 0.0) uh += r[l] * bdm1_ref_value(l, xhat);
    return map.B * uh / map.det;
  }

  /// Velocity gradient, constant per element; entries (r,c) = d(u_r)/d(x_c).
  Eigen::Matrix2d velocity_grad(int t) const {
    check_kind(SpaceKind::Bdm1Velocity);
    check_elem(t);
    const ElementMap map = space->mesh().element_map(t);
    double r[6];
    local_coeffs(t, r);
    Eigen::Matrix2d gh = Eigen::Matrix2d::Zero();
    for (int l = 0; l < 6; ++l)
      if (r[l] != 0.0) gh += r[l] * bdm1_ref_grad(l);
    return map.B * gh * map.Binv / map.det;
  }

  double divergence(int t) const { return velocity_grad(t).trace(); }

  double scalar(int t, const Vec2& xhat) const {
    check_elem(t);
    if (space->kind() == SpaceKind::P0Pressure) return coeffs[space->elem_dof(t, 0)];
    check_kind(SpaceKind::P2Stream);
    double n[6], r[6];
    p2_ref_values(xhat, n);
    local_coeffs(t, r);
    double v = 0.0;
    for (int l = 0; l < 6; ++l) v += r[l] * n[l];
    return v;
  }

  Vec2 scalar_grad(int t, const Vec2& xhat) const {
    check_elem(t);
    if (space->kind() == SpaceKind::P0Pressure) return Vec2::Zero();
    check_kind(SpaceKind::P2Stream);
    const ElementMap map = space->mesh().element_map(t);
    Vec2 gh[6];
    double r[6];
    p2_ref_grads(xhat, gh);
    local_coeffs(t, r);
    Vec2 g = Vec2::Zero();
    for (int l = 0; l < 6; ++l) g += r[l] * gh[l];
    return map.Binv.transpose() * g;
  }

  /// curl of a stream function: (d/dy, -d/dx).
  Vec2 scalar_curl(int t, const Vec2& xhat) const {
    const Vec2 g = scalar_grad(t, xhat);
    return Vec2(g.y(), -g.x());
  }

 private:
  void check_kind(SpaceKind k) const {
    if (space->kind() != k) throw std::invalid_argument("Field: wrong space kind for evaluation");
  }
};

// ---------------------------------------------------------------------------
// Interpolation and projection
// ---------------------------------------------------------------------------

/// Interpolate a vector field given as a per-edge trace evaluator
/// eval(edge_index, physical_point) -> Vec2. Edge DOFs are the Legendre
/// moments of u.n computed with `edge_points` Gauss points; boundary edges
/// must carry zero normal trace (|u.n| <= trace_tol pointwise).
template <class EdgeEval>
Field interpolate_velocity_trace(const FeSpacePtr& Vh, EdgeEval&& eval, int edge_points = 4,
                                 double trace_tol = 1e-10) {
  if (Vh->kind() != SpaceKind::Bdm1Velocity)
    throw std::invalid_argument("interpolate_velocity: space is not Bdm1Velocity");
  const Mesh2D& m = Vh->mesh();
  const auto rule = gauss_rule(edge_points);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(Vh->dim());
  for (int e = 0; e < m.n_edges(); ++e) {
    const MeshEdge& ed = m.edge(e);
    const Vec2 pa = m.vertex(ed.a);
    if (ed.boundary) {
      for (const auto& q : rule) {
        const Vec2 x = pa + q.t * ed.length * ed.tangent;
        const double un = eval(e, x).dot(ed.normal);
        if (std::abs(un) > trace_tol)
          throw std::invalid_argument(
              "interpolate_velocity: nonzero normal trace on a boundary edge");
      }
      continue;
    }
    const int idx = Vh->interior_edge_index(e);
    double c0 = 0.0, c1 = 0.0;
    for (const auto& q : rule) {
      const Vec2 x = pa + q.t * ed.length * ed.tangent;
      const double un = eval(e, x).dot(ed.normal);
      c0 += q.w * ed.length * un;
      c1 += q.w * ed.length * (2.0 * q.t - 1.0) * un;
    }
    c[2 * idx] = c0;
    c[2 * idx + 1] = c1;
  }
  return Field(Vh, std::move(c));
}

/// Interpolate a smooth vector field u(x) into Bdm1Velocity.
template <class F>
Field interpolate_velocity(const FeSpacePtr& Vh, F&& u, int edge_points = 4,
                           double trace_tol = 1e-10) {
  return interpolate_velocity_trace(
      Vh, [&](int, const Vec2& x) { return u(x); }, edge_points, trace_tol);
}

/// Evaluate a velocity Field from a coarser level on a descendant mesh.
inline Field prolong_velocity(const Field& coarse, const FeSpacePtr& fine_Vh) {
  const Mesh2D& fine = fine_Vh->mesh();
  const Mesh2D& cm = coarse.space->mesh();
  return interpolate_velocity_trace(fine_Vh, [&](int e, const Vec2& x) {
    const int fe = fine.edge(e).any_element();
    const int ce = ancestor_element(fine, fe, cm);
    return coarse.velocity(ce, cm.element_map(ce).to_reference(x));
  });
}

/// Elementwise L2 projection onto piecewise constants, shifted to zero
/// (area-weighted) mean.
template <class F>
Field project_pressure(const FeSpacePtr& Qh, F&& p, int degree = 6) {
  if (Qh->kind() != SpaceKind::P0Pressure)
    throw std::invalid_argument("project_pressure: space is not P0Pressure");
  const Mesh2D& m = Qh->mesh();
  const auto rule = triangle_rule(degree);
  Eigen::VectorXd c(Qh->dim());
  double total = 0.0;
  for (int t = 0; t < m.n_triangles(); ++t) {
    const ElementMap map = m.element_map(t);
    double s = 0.0;
    for (const auto& q : rule) s += q.w * p(map.to_physical(Vec2(q.x, q.y)));
    c[t] = s * map.det / m.tri_area(t);  // elementwise mean
    total += c[t] * m.tri_area(t);
  }
  c.array() -= total / m.total_area();
  return Field(Qh, std::move(c));
}

inline Field prolong_pressure(const Field& coarse, const FeSpacePtr& fine_Qh) {
  const Mesh2D& fine = fine_Qh->mesh();
  const Mesh2D& cm = coarse.space->mesh();
  Eigen::VectorXd c(fine_Qh->dim());
  for (int t = 0; t < fine.n_triangles(); ++t)
    c[t] = coarse.coeffs[ancestor_element(fine, t, cm)];
  return Field(fine_Qh, std::move(c));
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

inline void save_field_csv(const Field& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_field_csv: cannot open " + path);
  out << "dof_index,value\n";
  char buf[64];
  for (int i = 0; i < f.coeffs.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%d,%.17g\n", i, f.coeffs[i]);
    out << buf;
  }
}

/// Vertex-sampled velocity vectors per element, for plotting.
inline void save_velocity_samples(const Field& f, const std::string& path) {
  if (f.space->kind() != SpaceKind::Bdm1Velocity)
    throw std::invalid_argument("save_velocity_samples: not a velocity field");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_velocity_samples: cannot open " + path);
  out << "element,x,y,ux,uy\n";
  const Mesh2D& m = f.space->mesh();
  const Vec2 ref[3] = {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
  char buf[160];
  for (int t = 0; t < m.n_triangles(); ++t)
    for (const auto& r : ref) {
      const Vec2 x = m.element_map(t).to_physical(r);
      const Vec2 u = f.velocity(t, r);
      std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", t, x.x(), x.y(), u.x(),
                    u.y());
      out << buf;
    }
}

}  // namespace divfree

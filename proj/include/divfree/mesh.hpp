// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace divfree {

using Vec2 = Eigen::Vector2d;

/// Unreadable or syntactically broken mesh file.
class MeshFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Connectivity that is not a conforming triangulation of a simply
/// connected domain (duplicate triangles, non-manifold edges, hanging nodes).
class MeshConformityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Degenerate geometry (zero-area triangle).
class MeshGeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Oriented mesh edge. Vertices satisfy a < b; the intrinsic direction is
/// a->b with unit tangent t and normal n = (t.y, -t.x). tri[0] is the element
/// whose counterclockwise boundary traverses a->b (n points out of it),
/// tri[1] the other incident element or -1.
struct MeshEdge {
  int a = -1, b = -1;
  int tri[2] = {-1, -1};
  int local[2] = {-1, -1};  // local edge index (0..2) within tri[0], tri[1]
  bool boundary = false;
  double length = 0.0;
  Vec2 tangent = Vec2::Zero();
  Vec2 normal = Vec2::Zero();

  int any_element() const { return tri[0] >= 0 ? tri[0] : tri[1]; }
  int side_of(int element) const { return tri[0] == element ? 0 : 1; }
  /// Outward unit normal; meaningful for boundary edges only.
  Vec2 outward_normal() const { return tri[0] >= 0 ? normal : Vec2(-normal); }
};

/// Affine map x = p0 + B*xhat from the reference triangle.
struct ElementMap {
  Vec2 p0;
  Eigen::Matrix2d B;
  Eigen::Matrix2d Binv;
  double det = 0.0;  // = 2*area, positive

  Vec2 to_physical(const Vec2& xhat) const { return p0 + B * xhat; }
  Vec2 to_reference(const Vec2& x) const { return Binv * (x - p0); }
};

/// Conforming triangulation with oriented edges, adjacency and refinement
/// lineage. Immutable after construction; safe to share across threads.
class Mesh2D {
 public:
  Mesh2D(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles,
         std::shared_ptr<const Mesh2D> parent = nullptr,
         std::vector<int> parent_of = {})
      : vertices_(std::move(vertices)),
        triangles_(std::move(triangles)),
        parent_(std::move(parent)),
        parent_of_(std::move(parent_of)) {
    build();
  }

  int n_vertices() const { return static_cast<int>(vertices_.size()); }
  int n_triangles() const { return static_cast<int>(triangles_.size()); }
  int n_edges() const { return static_cast<int>(edges_.size()); }
  int n_boundary_edges() const { return n_boundary_edges_; }
  int n_interior_edges() const { return n_edges() - n_boundary_edges_; }

  const Vec2& vertex(int v) const { return vertices_[v]; }
  const std::array<int, 3>& triangle(int t) const { return triangles_[t]; }
  const MeshEdge& edge(int e) const { return edges_[e]; }
  /// Global index of local edge k (between local vertices k and (k+1)%3).
  int tri_edge(int t, int k) const { return tri_edges_[t][k]; }
  /// +1 if triangle t traverses its local edge k in the edge's a->b direction.
  double tri_edge_sign(int t, int k) const { return tri_edge_signs_[t][k]; }

  double tri_area(int t) const { return tri_area_[t]; }
  /// Element diameter h_K (longest edge).
  double tri_h(int t) const { return tri_h_[t]; }
  bool vertex_on_boundary(int v) const { return vertex_boundary_[v]; }

  ElementMap element_map(int t) const {
    const auto& tri = triangles_[t];
    ElementMap m;
    m.p0 = vertices_[tri[0]];
    m.B.col(0) = vertices_[tri[1]] - vertices_[tri[0]];
    m.B.col(1) = vertices_[tri[2]] - vertices_[tri[0]];
    m.det = m.B.determinant();
    m.Binv = m.B.inverse();
    return m;
  }

  double total_area() const { return total_area_; }
  double max_h() const { return max_h_; }
  /// Number of triangles that were re-oriented to counterclockwise.
  int reoriented_count() const { return reoriented_; }

  const Mesh2D* parent() const { return parent_.get(); }
  std::shared_ptr<const Mesh2D> parent_shared() const { return parent_; }
  int parent_of(int child) const { return parent_of_[child]; }
  bool has_lineage() const { return parent_ != nullptr; }

 private:
  void build() {
    const int nv = n_vertices();
    const int nt = n_triangles();
    if (nv < 3 || nt < 1)
      throw std::invalid_argument("Mesh2D: need at least 3 vertices and 1 triangle");
    for (const auto& tri : triangles_)
      for (int v : tri)
        if (v < 0 || v >= nv) throw std::invalid_argument("Mesh2D: vertex index out of range");

    double scale = 0.0;
    for (const auto& v : vertices_) scale = std::max(scale, v.cwiseAbs().maxCoeff());
    const double area_tol = 1e-14 * std::max(1.0, scale * scale);

    reoriented_ = 0;
    tri_area_.resize(nt);
    for (int t = 0; t < nt; ++t) {
      auto& tri = triangles_[t];
      Vec2 d1 = vertices_[tri[1]] - vertices_[tri[0]];
      Vec2 d2 = vertices_[tri[2]] - vertices_[tri[0]];
      double twice = d1.x() * d2.y() - d1.y() * d2.x();
      if (std::abs(twice) <= area_tol)
        throw MeshGeometryError("Mesh2D: zero-area triangle " + std::to_string(t));
      if (twice < 0) {
        std::swap(tri[1], tri[2]);
        twice = -twice;
        ++reoriented_;
      }
      tri_area_[t] = 0.5 * twice;
    }

    {
      std::set<std::array<int, 3>> seen;
      for (const auto& tri : triangles_) {
        std::array<int, 3> key = tri;
        std::sort(key.begin(), key.end());
        if (key[0] == key[1] || key[1] == key[2])
          throw MeshConformityError("Mesh2D: triangle with repeated vertex");
        if (!seen.insert(key).second)
          throw MeshConformityError("Mesh2D: duplicated triangle");
      }
    }

    // Edge table keyed by (min,max); orientation a->b fixed by vertex order.
    struct HalfEdge {
      int a, b, tri, local;
      bool forward;  // triangle traverses a->b
    };
    std::vector<HalfEdge> halves;
    halves.reserve(3 * static_cast<size_t>(nt));
    for (int t = 0; t < nt; ++t) {
      const auto& tri = triangles_[t];
      for (int k = 0; k < 3; ++k) {
        int va = tri[k], vb = tri[(k + 1) % 3];
        bool fwd = va < vb;
        halves.push_back({std::min(va, vb), std::max(va, vb), t, k, fwd});
      }
    }
    std::sort(halves.begin(), halves.end(), [](const HalfEdge& l, const HalfEdge& r) {
      return std::tie(l.a, l.b) < std::tie(r.a, r.b);
    });

    edges_.clear();
    tri_edges_.assign(nt, {-1, -1, -1});
    tri_edge_signs_.assign(nt, {0, 0, 0});
    n_boundary_edges_ = 0;
    for (size_t i = 0; i < halves.size();) {
      size_t j = i;
      while (j < halves.size() && halves[j].a == halves[i].a && halves[j].b == halves[i].b) ++j;
      const size_t count = j - i;
      if (count > 2)
        throw MeshConformityError("Mesh2D: edge shared by more than two triangles");
      MeshEdge e;
      e.a = halves[i].a;
      e.b = halves[i].b;
      for (size_t m = i; m < j; ++m) {
        int slot = halves[m].forward ? 0 : 1;
        if (e.tri[slot] >= 0)
          throw MeshConformityError("Mesh2D: two triangles on the same side of an edge");
        e.tri[slot] = halves[m].tri;
        e.local[slot] = halves[m].local;
      }
      e.boundary = (count == 1);
      Vec2 d = vertices_[e.b] - vertices_[e.a];
      e.length = d.norm();
      e.tangent = d / e.length;
      e.normal = Vec2(e.tangent.y(), -e.tangent.x());
      const int id = static_cast<int>(edges_.size());
      for (int s = 0; s < 2; ++s) {
        if (e.tri[s] < 0) continue;
        tri_edges_[e.tri[s]][e.local[s]] = id;
        tri_edge_signs_[e.tri[s]][e.local[s]] = (s == 0) ? 1.0 : -1.0;
      }
      if (e.boundary) ++n_boundary_edges_;
      edges_.push_back(e);
      i = j;
    }

    if (nv - n_edges() + nt != 1)
      throw MeshConformityError("Mesh2D: V - E + T != 1 (domain not simply connected or mesh broken)");

    vertex_boundary_.assign(nv, false);
    for (const auto& e : edges_)
      if (e.boundary) {
        vertex_boundary_[e.a] = true;
        vertex_boundary_[e.b] = true;
      }

    std::vector<char> used(nv, 0);
    for (const auto& tri : triangles_)
      for (int v : tri) used[v] = 1;
    for (int v = 0; v < nv; ++v)
      if (!used[v]) throw MeshConformityError("Mesh2D: isolated vertex " + std::to_string(v));

    tri_h_.resize(nt);
    max_h_ = 0.0;
    total_area_ = 0.0;
    for (int t = 0; t < nt; ++t) {
      double h = 0.0;
      for (int k = 0; k < 3; ++k) h = std::max(h, edges_[tri_edges_[t][k]].length);
      tri_h_[t] = h;
      max_h_ = std::max(max_h_, h);
      total_area_ += tri_area_[t];
    }

    if (!parent_of_.empty() && static_cast<int>(parent_of_.size()) != nt)
      throw std::invalid_argument("Mesh2D: lineage size mismatch");
  }

  std::vector<Vec2> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<MeshEdge> edges_;
  std::vector<std::array<int, 3>> tri_edges_;
  std::vector<std::array<double, 3>> tri_edge_signs_;
  std::vector<bool> vertex_boundary_;
  std::vector<double> tri_area_, tri_h_;
  double total_area_ = 0.0, max_h_ = 0.0;
  int n_boundary_edges_ = 0;
  int reoriented_ = 0;
  std::shared_ptr<const Mesh2D> parent_;
  std::vector<int> parent_of_;
};

using MeshPtr = std::shared_ptr<const Mesh2D>;

/// Structured triangulation of the unit square, n cells per side, each cell
/// split by its lower-left/upper-right diagonal: 2n^2 triangles.
inline MeshPtr generate_square(int n) {
  if (n < 1) throw std::invalid_argument("generate_square: n must be >= 1");
  const int nv = n + 1;
  std::vector<Vec2> verts;
  verts.reserve(static_cast<size_t>(nv) * nv);
  const double h = 1.0 / n;
  for (int j = 0; j < nv; ++j)
    for (int i = 0; i < nv; ++i) verts.emplace_back(i * h, j * h);
  auto id = [nv](int i, int j) { return j * nv + i; };
  std::vector<std::array<int, 3>> tris;
  tris.reserve(2 * static_cast<size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      int v00 = id(i, j), v10 = id(i + 1, j), v01 = id(i, j + 1), v11 = id(i + 1, j + 1);
      tris.push_back({v00, v10, v11});
      tris.push_back({v00, v11, v01});
    }
  return std::make_shared<Mesh2D>(std::move(verts), std::move(tris));
}

/// Square mesh with the criss-cross pattern (4 triangles per cell around the
/// cell center) at cells with odd i and odd j, diagonal split elsewhere.
/// n=8 matches the entity counts of the reference configuration used in the
/// studies: 160 triangles, 97 vertices, 448 velocity DOFs.
inline MeshPtr generate_square_mixed(int n) {
  if (n < 1) throw std::invalid_argument("generate_square_mixed: n must be >= 1");
  const int nv = n + 1;
  std::vector<Vec2> verts;
  const double h = 1.0 / n;
  for (int j = 0; j < nv; ++j)
    for (int i = 0; i < nv; ++i) verts.emplace_back(i * h, j * h);
  auto id = [nv](int i, int j) { return j * nv + i; };
  std::vector<std::array<int, 3>> tris;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      int v00 = id(i, j), v10 = id(i + 1, j), v01 = id(i, j + 1), v11 = id(i + 1, j + 1);
      if (i % 2 == 1 && j % 2 == 1) {
        int c = static_cast<int>(verts.size());
        verts.emplace_back((i + 0.5) * h, (j + 0.5) * h);
        tris.push_back({v00, v10, c});
        tris.push_back({v10, v11, c});
        tris.push_back({v11, v01, c});
        tris.push_back({v01, v00, c});
      } else {
        tris.push_back({v00, v10, v11});
        tris.push_back({v00, v11, v01});
      }
    }
  return std::make_shared<Mesh2D>(std::move(verts), std::move(tris));
}

/// L-shaped domain (0,1)^2 minus the closed upper-right quadrant
/// [1/2,1)x[1/2,1), n cells per side (n even so the reentrant corner
/// (1/2,1/2) is a vertex).
inline MeshPtr generate_lshape(int n) {
  if (n < 2 || n % 2 != 0)
    throw std::invalid_argument("generate_lshape: n must be even and >= 2");
  const int nv = n + 1;
  const double h = 1.0 / n;
  std::vector<int> remap(static_cast<size_t>(nv) * nv, -1);
  std::vector<Vec2> verts;
  std::vector<std::array<int, 3>> tris;
  auto gid = [nv](int i, int j) { return j * nv + i; };
  auto use = [&](int i, int j) {
    int g = gid(i, j);
    if (remap[g] < 0) {
      remap[g] = static_cast<int>(verts.size());
      verts.emplace_back(i * h, j * h);
    }
    return remap[g];
  };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      if (i >= n / 2 && j >= n / 2) continue;  // removed quadrant
      int v00 = use(i, j), v10 = use(i + 1, j), v01 = use(i, j + 1), v11 = use(i + 1, j + 1);
      tris.push_back({v00, v10, v11});
      tris.push_back({v00, v11, v01});
    }
  return std::make_shared<Mesh2D>(std::move(verts), std::move(tris));
}

/// Red refinement: every triangle split into 4 via edge midpoints; children
/// are similar to the parent and lineage is recorded.
inline MeshPtr red_refine(const MeshPtr& mesh) {
  const Mesh2D& m = *mesh;
  std::vector<Vec2> verts;
  verts.reserve(m.n_vertices() + m.n_edges());
  for (int v = 0; v < m.n_vertices(); ++v) verts.push_back(m.vertex(v));
  for (int e = 0; e < m.n_edges(); ++e)
    verts.push_back(0.5 * (m.vertex(m.edge(e).a) + m.vertex(m.edge(e).b)));

  std::vector<std::array<int, 3>> tris;
  std::vector<int> lineage;
  tris.reserve(4 * static_cast<size_t>(m.n_triangles()));
  lineage.reserve(tris.capacity());
  const int off = m.n_vertices();
  for (int t = 0; t < m.n_triangles(); ++t) {
    const auto& tri = m.triangle(t);
    int m01 = off + m.tri_edge(t, 0);
    int m12 = off + m.tri_edge(t, 1);
    int m20 = off + m.tri_edge(t, 2);
    tris.push_back({tri[0], m01, m20});
    tris.push_back({m01, tri[1], m12});
    tris.push_back({m20, m12, tri[2]});
    tris.push_back({m01, m12, m20});
    for (int c = 0; c < 4; ++c) lineage.push_back(t);
  }
  return std::make_shared<Mesh2D>(std::move(verts), std::move(tris), mesh, std::move(lineage));
}

/// Element of `coarse` containing fine element `elem`, following the
/// refinement lineage chain. `coarse` must be an ancestor of `fine`.
inline int ancestor_element(const Mesh2D& fine, int elem, const Mesh2D& coarse) {
  const Mesh2D* m = &fine;
  while (m != &coarse) {
    if (!m->has_lineage())
      throw std::invalid_argument("ancestor_element: meshes are not related by refinement");
    elem = m->parent_of(elem);
    m = m->parent();
  }
  return elem;
}

inline void save_mesh(const Mesh2D& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_mesh: cannot open " + path);
  char buf[80];
  out << m.n_vertices() << ' ' << m.n_edges() << ' ' << m.n_triangles() << '\n';
  for (int v = 0; v < m.n_vertices(); ++v) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %d\n", m.vertex(v).x(), m.vertex(v).y(),
                  m.vertex_on_boundary(v) ? 1 : 0);
    out << buf;
  }
  for (int t = 0; t < m.n_triangles(); ++t) {
    const auto& tri = m.triangle(t);
    out << tri[0] << ' ' << tri[1] << ' ' << tri[2] << '\n';
  }
  if (!out) throw std::runtime_error("save_mesh: write failed for " + path);
}

inline MeshPtr load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MeshFormatError("load_mesh: cannot open " + path);
  int nv = 0, ne = 0, nt = 0;
  if (!(in >> nv >> ne >> nt) || nv < 3 || nt < 1)
    throw MeshFormatError("load_mesh: bad header in " + path);
  std::vector<Vec2> verts(nv);
  for (int v = 0; v < nv; ++v) {
    double x, y;
    int flag;
    if (!(in >> x >> y >> flag)) throw MeshFormatError("load_mesh: bad vertex line");
    verts[v] = Vec2(x, y);
  }
  std::vector<std::array<int, 3>> tris(nt);
  for (int t = 0; t < nt; ++t) {
    if (!(in >> tris[t][0] >> tris[t][1] >> tris[t][2]))
      throw MeshFormatError("load_mesh: bad triangle line");
    for (int v : tris[t])
      if (v < 0 || v >= nv) throw MeshFormatError("load_mesh: vertex index out of range");
  }
  auto mesh = std::make_shared<Mesh2D>(std::move(verts), std::move(tris));
  if (mesh->n_edges() != ne)
    throw MeshFormatError("load_mesh: header edge count does not match connectivity");
  return mesh;
}

}  // namespace divfree

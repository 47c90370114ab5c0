// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "divfree/assembly.hpp"
#include "divfree/discretization.hpp"

using namespace divfree;

namespace {

Eigen::VectorXd random_vector(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

// single reference triangle (0,0)-(1,0)-(0,1)
MeshPtr reference_triangle_mesh() {
  return std::make_shared<Mesh2D>(std::vector<Vec2>{Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)},
                                  std::vector<std::array<int, 3>>{{0, 1, 2}});
}

// exact volume block int_K 2 nu eps_i : eps_j on the reference triangle for
// the reference dual basis at nu = 1/2 (symbolic integration oracle)
const double kRefVolumeBlock[6][6] = {
    {1, 0, 1, 0, 1, 0},   {0, 18, 0, -9, 0, 0}, {1, 0, 1, 0, 1, 0},
    {0, -9, 0, 9, 0, -9}, {1, 0, 1, 0, 1, 0},   {0, 0, 0, -9, 0, 18}};

}  // namespace

TEST_CASE("reference-triangle volume block matches the symbolic oracle") {
  const double nu = 0.5, area = 0.5;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      const Eigen::Matrix2d gi = bdm1_ref_grad(i), gj = bdm1_ref_grad(j);
      const Eigen::Matrix2d ei = 0.5 * (gi + gi.transpose());
      const Eigen::Matrix2d ej = 0.5 * (gj + gj.transpose());
      const double val = 2.0 * nu * area * ei.cwiseProduct(ej).sum();
      CHECK(val == Catch::Approx(kRefVolumeBlock[i][j]).margin(1e-14));
    }
}

TEST_CASE("element basis data carries the orientation signs") {
  auto mesh = reference_triangle_mesh();
  auto Vh = build_space(mesh, SpaceKind::Bdm1Velocity);
  CHECK(Vh->dim() == 0);  // all edges on the boundary: every DOF eliminated
  detail::Bdm1ElemBasis b(*Vh, 0);
  // edges (0,1) and (1,2) run lower->higher, edge (2,0) runs opposite
  const double sg[6] = {1, 1, 1, 1, -1, 1};
  for (int i = 0; i < 6; ++i) {
    CHECK(b.sign[i] == sg[i]);
    for (int j = 0; j < 6; ++j) {
      const double val = 2.0 * 0.5 * 0.5 * b.eps[i].cwiseProduct(b.eps[j]).sum();
      CHECK(val == Catch::Approx(sg[i] * sg[j] * kRefVolumeBlock[i][j]).margin(1e-13));
    }
  }
  // assembling on the all-boundary mesh yields the empty matrix
  SparseMatrix A = assemble_a(*Vh, AssemblyConfig{});
  CHECK(A.rows() == 0);
}

TEST_CASE("A is symmetric and positive definite at alpha = 6") {
  auto Vh = build_space(generate_square_mixed(4), SpaceKind::Bdm1Velocity);
  AssemblyConfig cfg;
  SparseMatrix A = assemble_a(*Vh, cfg);
  CHECK(A.symmetric_flag());
  CHECK(A.asymmetry() <= 1e-12 * A.max_abs());
  for (int k = 0; k < 100; ++k) {
    const Eigen::VectorXd x = random_vector(Vh->dim(), 100 + k);
    CHECK(x.dot(A.apply(x)) > 0.0);
  }
}

TEST_CASE("A scales linearly in nu") {
  auto Vh = build_space(generate_lshape(2), SpaceKind::Bdm1Velocity);
  AssemblyConfig c1;
  c1.nu = 0.5;
  AssemblyConfig c3 = c1;
  c3.nu = 1.5;
  SparseMatrix A1 = assemble_a(*Vh, c1);
  SparseMatrix A3 = assemble_a(*Vh, c3);
  REQUIRE(A1.nnz() == A3.nnz());
  for (long k = 0; k < A1.nnz(); ++k)
    CHECK(A3.eigen().valuePtr()[k] == 3.0 * A1.eigen().valuePtr()[k]);
}

TEST_CASE("penalty term is monotone in alpha") {
  auto Vh = build_space(generate_square(3), SpaceKind::Bdm1Velocity);
  AssemblyConfig lo;
  lo.alpha = 2.0;
  AssemblyConfig hi = lo;
  hi.alpha = 9.0;
  SparseMatrix Alo = assemble_a(*Vh, lo);
  SparseMatrix Ahi = assemble_a(*Vh, hi);
  for (int k = 0; k < 50; ++k) {
    const Eigen::VectorXd x = random_vector(Vh->dim(), 500 + k);
    CHECK(x.dot(Ahi.apply(x)) >= x.dot(Alo.apply(x)) - 1e-12);
  }
}

TEST_CASE("wrong space kinds are rejected") {
  auto mesh = generate_square(2);
  auto Qh = build_space(mesh, SpaceKind::P0Pressure);
  auto Nh = build_space(mesh, SpaceKind::P2Stream);
  AssemblyConfig cfg;
  CHECK_THROWS_AS(assemble_a(*Qh, cfg), std::invalid_argument);
  CHECK_THROWS_AS(assemble_mass(*Nh, cfg), std::invalid_argument);
  auto Vh2 = build_space(generate_square(3), SpaceKind::Bdm1Velocity);
  CHECK_THROWS_AS(assemble_bdiv(*Vh2, *Qh), std::invalid_argument);
  AssemblyConfig bad;
  bad.nu = -1.0;
  CHECK_THROWS_AS(assemble_a(*Vh2, bad), std::invalid_argument);
}

TEST_CASE("Bdiv rows integrate the divergence") {
  auto mesh = generate_lshape(4);
  auto Vh = build_space(mesh, SpaceKind::Bdm1Velocity);
  auto Qh = build_space(mesh, SpaceKind::P0Pressure);
  SparseMatrix B = assemble_bdiv(*Vh, *Qh);
  Field u(Vh, random_vector(Vh->dim(), 17));
  const Eigen::VectorXd r = B.apply(u.coeffs);
  for (int t = 0; t < mesh->n_triangles(); ++t)
    CHECK(r[t] == Catch::Approx(-mesh->tri_area(t) * u.divergence(t)).margin(1e-13));
}

TEST_CASE("Bdiv annihilates curls: Bdiv * Pcurl = 0") {
  for (auto mesh : {generate_square(3), generate_lshape(2)}) {
    auto Vh = build_space(mesh, SpaceKind::Bdm1Velocity);
    auto Qh = build_space(mesh, SpaceKind::P0Pressure);
    auto Nh = build_space(mesh, SpaceKind::P2Stream);
    SparseMatrix B = assemble_bdiv(*Vh, *Qh);
    SparseMatrix P = assemble_pcurl(*Nh, *Vh);
    Eigen::SparseMatrix<double> prod =
        Eigen::SparseMatrix<double>(B.eigen()) * Eigen::SparseMatrix<double>(P.eigen());
    double m = 0.0;
    for (int k = 0; k < prod.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(prod, k); it; ++it)
        m = std::max(m, std::abs(it.value()));
    CHECK(m <= 1e-13);
  }
}

TEST_CASE("mass matrix equals direct quadrature of |u_h|^2 and is SPD") {
  auto mesh = generate_square_mixed(4);
  auto Vh = build_space(mesh, SpaceKind::Bdm1Velocity);
  AssemblyConfig cfg;
  SparseMatrix M = assemble_mass(*Vh, cfg);
  CHECK(M.asymmetry() <= 1e-12 * M.max_abs());
  Field u(Vh, random_vector(Vh->dim(), 23));
  const double quad_form = u.coeffs.dot(M.apply(u.coeffs));
  double l2 = 0.0;
  const auto rule = triangle_rule(4);
  for (int t = 0; t < mesh->n_triangles(); ++t) {
    const ElementMap map = mesh->element_map(t);
    for (const auto& q : rule)
      l2 += q.w * map.det * u.velocity(t, Vec2(q.x, q.y)).squaredNorm();
  }
  CHECK(quad_form == Catch::Approx(l2).epsilon(1e-12));
  CHECK(quad_form > 0.0);
}

TEST_CASE("diagonally scaled mass matrix stays well conditioned under refinement") {
  MeshPtr mesh = generate_square(4);
  std::vector<double> conds;
  for (int lvl = 0; lvl < 3; ++lvl) {
    if (lvl > 0) mesh = red_refine(mesh);
    auto Vh = build_space(mesh, SpaceKind::Bdm1Velocity);
    SparseMatrix M = assemble_mass(*Vh, AssemblyConfig{});
    Eigen::VectorXd dinv(Vh->dim());
    for (int i = 0; i < Vh->dim(); ++i) dinv[i] = 1.0 / std::sqrt(M.eigen().coeff(i, i));
    auto scaled_apply = [&](const Eigen::VectorXd& x) {
      return Eigen::VectorXd(
          (dinv.array() * M.apply((dinv.array() * x.array()).matrix()).array()).matrix());
    };
    Eigen::VectorXd v = random_vector(Vh->dim(), 3).normalized();
    double lmax = 0.0;
    for (int it = 0; it < 200; ++it) {
      v = scaled_apply(v);
      lmax = v.norm();
      v /= lmax;
    }
    Eigen::VectorXd w = random_vector(Vh->dim(), 5).normalized();
    double mu = 0.0;
    for (int it = 0; it < 200; ++it) {
      w = Eigen::VectorXd(lmax * 1.01 * w - scaled_apply(w));
      mu = w.norm();
      w /= mu;
    }
    const double lmin = lmax * 1.01 - mu;
    conds.push_back(lmax / lmin);
  }
  CHECK(conds[1] <= 2.0 * conds[0]);
  CHECK(conds[2] <= 2.0 * conds[0]);
}

TEST_CASE("Pcurl carries the analytic edge-moment pattern") {
  auto mesh = generate_square(4);
  auto Vh = build_space(mesh, SpaceKind::Bdm1Velocity);
  auto Nh = build_space(mesh, SpaceKind::P2Stream);
  SparseMatrix P = assemble_pcurl(*Nh, *Vh);
  int tested = 0;
  for (int e = 0; e < mesh->n_edges(); ++e) {
    const MeshEdge& ed = mesh->edge(e);
    if (ed.boundary) continue;
    const int row0 = 2 * Vh->interior_edge_index(e);
    const int da = Nh->interior_vertex_index(ed.a);
    const int db = Nh->interior_vertex_index(ed.b);
    const int dm = Nh->n_interior_vertices() + Nh->interior_edge_index(e);
    if (da < 0 || db < 0) continue;
    ++tested;
    // constant moment of curl(psi) = psi(b) - psi(a); Legendre moment:
    // 2/3 at the endpoints, -4/3 at the midpoint
    CHECK(P.eigen().coeff(row0, da) == Catch::Approx(-1.0).margin(1e-13));
    CHECK(P.eigen().coeff(row0, db) == Catch::Approx(1.0).margin(1e-13));
    CHECK(std::abs(P.eigen().coeff(row0, dm)) <= 1e-13);
    CHECK(P.eigen().coeff(row0 + 1, da) == Catch::Approx(2.0 / 3.0).margin(1e-13));
    CHECK(P.eigen().coeff(row0 + 1, db) == Catch::Approx(2.0 / 3.0).margin(1e-13));
    CHECK(P.eigen().coeff(row0 + 1, dm) == Catch::Approx(-4.0 / 3.0).margin(1e-13));
  }
  CHECK(tested > 0);
  // zero stream function maps to the zero velocity
  CHECK(P.apply(Eigen::VectorXd::Zero(Nh->dim())).norm() == 0.0);
}

TEST_CASE("Pcurl has full column rank") {
  auto mesh = generate_square(3);
  auto Vh = build_space(mesh, SpaceKind::Bdm1Velocity);
  auto Nh = build_space(mesh, SpaceKind::P2Stream);
  SparseMatrix P = assemble_pcurl(*Nh, *Vh);
  Eigen::MatrixXd dense(P.eigen());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(dense);
  const auto& sv = svd.singularValues();
  CHECK(sv(sv.size() - 1) > 1e-10 * sv(0));
}

TEST_CASE("triple product equals the directly assembled stream stiffness") {
  for (auto mesh : {generate_square_mixed(4), generate_lshape(4)}) {
    auto Vh = build_space(mesh, SpaceKind::Bdm1Velocity);
    auto Nh = build_space(mesh, SpaceKind::P2Stream);
    AssemblyConfig cfg;
    SparseMatrix M = assemble_mass(*Vh, cfg);
    SparseMatrix P = assemble_pcurl(*Nh, *Vh);
    SparseMatrix Aq = assemble_aq(M, P);
    SparseMatrix K = assemble_p2_stiffness(*Nh, cfg);
    Eigen::SparseMatrix<double> diff =
        Eigen::SparseMatrix<double>(Aq.eigen()) - Eigen::SparseMatrix<double>(K.eigen());
    double m = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(diff, k); it; ++it)
        m = std::max(m, std::abs(it.value()));
    CHECK(m <= 1e-11 * Aq.max_abs());
    // SPD with no surviving constants
    SpdFactor f(Aq);
    CHECK(f.positive_definite());
  }
}

TEST_CASE("manufactured solution matches the frozen oracle values") {
  const ManufacturedStokes sq = ManufacturedStokes::square();
  const ManufacturedStokes ls = ManufacturedStokes::lshape();
  const Vec2 p1(1.0 / 3, 0.25), p2(0.7, 0.2), p3(0.125, 0.625);

  CHECK(sq.velocity(p1).x() == Catch::Approx(0.0092592592592592587).epsilon(1e-14));
  CHECK(sq.velocity(p1).y() == Catch::Approx(-0.03125).epsilon(1e-14));
  CHECK(sq.pressure(p1) == Catch::Approx(0.14583333333333334).epsilon(1e-14));
  CHECK(sq.force(0.5, p1).x() == Catch::Approx(1.9027777777777777).epsilon(1e-13));
  CHECK(sq.force(0.5, p1).y() == Catch::Approx(-1.6736111111111112).epsilon(1e-13));
  CHECK(sq.force(0.5, p2).x() == Catch::Approx(1.4773333333333334).epsilon(1e-13));
  CHECK(sq.force(0.5, p3).y() == Catch::Approx(-3.3229166666666665).epsilon(1e-13));
  CHECK(ls.pressure(p2) == Catch::Approx(0.84999999999999998).epsilon(1e-14));
  CHECK(ls.force(0.5, p3).x() == Catch::Approx(3.7991071428571428).epsilon(1e-13));

  // derivative implementations vs central finite differences
  const double h = 1e-6;
  for (const Vec2& p : {p1, p2, p3}) {
    const Eigen::Matrix2d g = sq.velocity_grad(p);
    const Vec2 dx = (sq.velocity(p + Vec2(h, 0)) - sq.velocity(p - Vec2(h, 0))) / (2 * h);
    const Vec2 dy = (sq.velocity(p + Vec2(0, h)) - sq.velocity(p - Vec2(0, h))) / (2 * h);
    CHECK(g(0, 0) == Catch::Approx(dx.x()).margin(1e-8));
    CHECK(g(1, 0) == Catch::Approx(dx.y()).margin(1e-8));
    CHECK(g(0, 1) == Catch::Approx(dy.x()).margin(1e-8));
    CHECK(g(1, 1) == Catch::Approx(dy.y()).margin(1e-8));
    CHECK(g.trace() == Catch::Approx(0.0).margin(1e-14));  // divergence-free
    const double sx = (sq.stream(p + Vec2(h, 0)) - sq.stream(p - Vec2(h, 0))) / (2 * h);
    const double sy = (sq.stream(p + Vec2(0, h)) - sq.stream(p - Vec2(0, h))) / (2 * h);
    CHECK(sq.velocity(p).x() == Catch::Approx(sy).margin(1e-8));
    CHECK(sq.velocity(p).y() == Catch::Approx(-sx).margin(1e-8));
  }
}

TEST_CASE("rhs of the zero load vanishes") {
  auto Vh = build_space(generate_square(2), SpaceKind::Bdm1Velocity);
  const Eigen::VectorXd F =
      assemble_rhs(*Vh, [](const Vec2&) { return Vec2(Vec2::Zero()); }, AssemblyConfig{});
  CHECK(F.norm() == 0.0);
}

TEST_CASE("rhs of the fixed load matches an independent quadrature oracle") {
  auto mesh = generate_lshape(2);
  auto Vh = build_space(mesh, SpaceKind::Bdm1Velocity);
  AssemblyConfig cfg;
  const Eigen::VectorXd F = assemble_rhs(*Vh, fixed_load, cfg);
  const auto rule = triangle_rule(6);
  for (int i = 0; i < Vh->dim(); ++i) {
    Field basis = Field::zero(Vh);
    basis.coeffs[i] = 1.0;
    double val = 0.0;
    for (int t = 0; t < mesh->n_triangles(); ++t) {
      const ElementMap map = mesh->element_map(t);
      for (const auto& q : rule) {
        const Vec2 xh(q.x, q.y);
        val += q.w * map.det * fixed_load(map.to_physical(xh)).dot(basis.velocity(t, xh));
      }
    }
    CHECK(F[i] == Catch::Approx(val).margin(1e-13));
  }
}

TEST_CASE("traction correction equals the boundary integral of the exact stress") {
  auto mesh = generate_square(3);
  auto Vh = build_space(mesh, SpaceKind::Bdm1Velocity);
  AssemblyConfig cfg;
  const ManufacturedStokes ex = ManufacturedStokes::square();
  auto f = [&](const Vec2& x) { return ex.force(cfg.nu, x); };
  const Eigen::VectorXd with = assemble_rhs(*Vh, f, cfg, &ex);
  const Eigen::VectorXd without = assemble_rhs(*Vh, f, cfg);
  const Eigen::VectorXd diff = with - without;
  // oracle: strain from finite differences of the velocity
  auto fd_strain = [&](const Vec2& x) {
    const double h = 1e-6;
    Eigen::Matrix2d g;
    const Vec2 dx = (ex.velocity(x + Vec2(h, 0)) - ex.velocity(x - Vec2(h, 0))) / (2 * h);
    const Vec2 dy = (ex.velocity(x + Vec2(0, h)) - ex.velocity(x - Vec2(0, h))) / (2 * h);
    g << dx.x(), dy.x(), dx.y(), dy.y();
    return Eigen::Matrix2d(0.5 * (g + g.transpose()));
  };
  Eigen::VectorXd oracle = Eigen::VectorXd::Zero(Vh->dim());
  const auto erule = gauss_rule(4);
  for (int e = 0; e < mesh->n_edges(); ++e) {
    const MeshEdge& ed = mesh->edge(e);
    if (!ed.boundary) continue;
    const int t = ed.any_element();
    const ElementMap map = mesh->element_map(t);
    const Vec2 n = ed.outward_normal();
    for (const auto& q : erule) {
      const Vec2 x = mesh->vertex(ed.a) + q.t * ed.length * ed.tangent;
      const Vec2 en = fd_strain(x) * n;
      const Vec2 gt = 2.0 * cfg.nu * (en - en.dot(n) * n);
      detail::Bdm1ElemBasis b(*Vh, t);
      for (int l = 0; l < 6; ++l) {
        if (b.gdof[l] < 0) continue;
        oracle[b.gdof[l]] += q.w * ed.length * gt.dot(b.value(l, map.to_reference(x)));
      }
    }
  }
  CHECK((diff - oracle).lpNorm<Eigen::Infinity>() <= 1e-7);
}

TEST_CASE("Galerkin consistency: a_h(u_exact, .) = F on divergence-free directions") {
  for (auto [mesh, ex] : {std::pair{generate_square(3), ManufacturedStokes::square()},
                          std::pair{generate_lshape(2), ManufacturedStokes::lshape()}}) {
    auto Vh = build_space(mesh, SpaceKind::Bdm1Velocity);
    auto Nh = build_space(mesh, SpaceKind::P2Stream);
    AssemblyConfig cfg;
    SparseMatrix P = assemble_pcurl(*Nh, *Vh);
    const Eigen::VectorXd F =
        assemble_rhs(*Vh, [&](const Vec2& x) { return ex.force(cfg.nu, x); }, cfg, &ex);

    // independent quadrature of G[i] = a_h(u_exact, phi_i): the exact velocity
    // is smooth so its jumps vanish; only the volume term and one consistency
    // term survive
    Eigen::VectorXd G = Eigen::VectorXd::Zero(Vh->dim());
    const auto vrule = triangle_rule(cfg.tri_degree);
    for (int t = 0; t < mesh->n_triangles(); ++t) {
      detail::Bdm1ElemBasis b(*Vh, t);
      for (const auto& q : vrule) {
        const Vec2 x = b.map.to_physical(Vec2(q.x, q.y));
        const Eigen::Matrix2d eps_u = ex.strain(x);
        for (int l = 0; l < 6; ++l)
          if (b.gdof[l] >= 0)
            G[b.gdof[l]] += q.w * b.map.det * 2.0 * cfg.nu * eps_u.cwiseProduct(b.eps[l]).sum();
      }
    }
    const auto erule = gauss_rule(cfg.edge_points);
    for (int e = 0; e < mesh->n_edges(); ++e) {
      const MeshEdge& ed = mesh->edge(e);
      if (ed.boundary) continue;
      for (int s = 0; s < 2; ++s) {
        detail::Bdm1ElemBasis b(*Vh, ed.tri[s]);
        const double sf = s == 0 ? 1.0 : -1.0;
        for (const auto& q : erule) {
          const Vec2 x = mesh->vertex(ed.a) + q.t * ed.length * ed.tangent;
          const Eigen::Matrix2d eps_u = ex.strain(x);
          const Vec2 xh = b.map.to_reference(x);
          for (int l = 0; l < 6; ++l) {
            if (b.gdof[l] < 0) continue;
            const Vec2 v = b.value(l, xh);
            const Vec2 vt = v - v.dot(ed.normal) * ed.normal;
            const Eigen::Matrix2d jump = sf * detail::sym_outer(vt, ed.normal);
            G[b.gdof[l]] -= q.w * ed.length * 2.0 * cfg.nu * eps_u.cwiseProduct(jump).sum();
          }
        }
      }
    }
    const Eigen::VectorXd r = P.apply_transpose(G - F);
    CHECK(r.norm() <= 1e-9 * P.apply_transpose(F).norm());
  }
}

TEST_CASE("assembly is deterministic") {
  auto Vh = build_space(generate_square_mixed(4), SpaceKind::Bdm1Velocity);
  AssemblyConfig cfg;
  SparseMatrix A1 = assemble_a(*Vh, cfg);
  SparseMatrix A2 = assemble_a(*Vh, cfg);
  REQUIRE(A1.nnz() == A2.nnz());
  for (long k = 0; k < A1.nnz(); ++k)
    CHECK(A1.eigen().valuePtr()[k] == A2.eigen().valuePtr()[k]);
}

TEST_CASE("coordinate export writes row col value lines") {
  auto mesh = generate_square(2);
  auto Vh = build_space(mesh, SpaceKind::Bdm1Velocity);
  auto Qh = build_space(mesh, SpaceKind::P0Pressure);
  SparseMatrix B = assemble_bdiv(*Vh, *Qh);
  B.save_coordinate("divfree_test_mat.txt");
  std::ifstream in("divfree_test_mat.txt");
  long count = 0;
  int r, c;
  double v;
  while (in >> r >> c >> v) {
    CHECK(v == B.eigen().coeff(r, c));
    ++count;
  }
  CHECK(count == B.nnz());
  in.close();
  std::remove("divfree_test_mat.txt");
}

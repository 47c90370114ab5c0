// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "divfree/solver.hpp"

using namespace divfree;

namespace {

Eigen::VectorXd random_vector(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

Discretization disc_on(MeshPtr mesh) { return build_discretization(mesh, AssemblyConfig{}); }

LoadSpec square_load() {
  return LoadSpec::manufactured_load(ManufacturedStokes::square(), 0.5);
}

}  // namespace

TEST_CASE("pcg solves a 2x2 diagonal system in at most 2 iterations") {
  Eigen::MatrixXd D = Eigen::Vector2d(2.0, 5.0).asDiagonal();
  auto A = [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(D * x); };
  auto B = [](const Eigen::VectorXd& x) { return x; };
  Eigen::VectorXd rhs(2);
  rhs << 1.0, -3.0;
  auto [x, rep] = pcg(A, B, rhs, PcgOptions{1e-12, 10});
  CHECK(rep.converged);
  CHECK(rep.n_it <= 2);
  CHECK((D * x - rhs).norm() <= 1e-11);
  CHECK(rep.rho > 0.0);
  CHECK(rep.rho < 1.0);
  // Ritz values approximate the spectrum {2, 5}
  CHECK(rep.ritz_min == Catch::Approx(2.0).epsilon(1e-6));
  CHECK(rep.ritz_max == Catch::Approx(5.0).epsilon(1e-6));
}

TEST_CASE("pcg on a zero right-hand side returns immediately") {
  auto A = [](const Eigen::VectorXd& x) { return x; };
  auto [x, rep] = pcg(A, A, Eigen::VectorXd::Zero(5));
  CHECK(rep.converged);
  CHECK(rep.n_it == 0);
  CHECK(x.norm() == 0.0);
}

TEST_CASE("pcg reports non-convergence instead of throwing") {
  // an ill-conditioned diagonal with a tiny iteration budget
  Eigen::VectorXd diag(50);
  for (int i = 0; i < 50; ++i) diag[i] = std::pow(10.0, i % 7);
  auto A = [&](const Eigen::VectorXd& x) {
    return Eigen::VectorXd((diag.array() * x.array()).matrix());
  };
  auto B = [](const Eigen::VectorXd& x) { return x; };
  auto [x, rep] = pcg(A, B, random_vector(50, 2), PcgOptions{1e-14, 3});
  CHECK_FALSE(rep.converged);
  CHECK(rep.n_it == 3);
  CHECK(static_cast<int>(rep.residuals.size()) == 4);
}

TEST_CASE("reduced operator is symmetric positive definite") {
  Discretization d = disc_on(generate_square_mixed(8));
  ReducedOperator op(d);
  CHECK(op.dim() == 289);
  for (unsigned seed : {1u, 2u, 3u}) {
    const Eigen::VectorXd x = random_vector(op.dim(), seed);
    const Eigen::VectorXd y = random_vector(op.dim(), seed + 100);
    CHECK(std::abs(op(x).dot(y) - op(y).dot(x)) <=
          1e-12 * op(x).norm() * y.norm());
    CHECK(x.dot(op(x)) > 0.0);
  }
  CHECK_THROWS_AS(op(Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

TEST_CASE("auxiliary preconditioner is SPD and costs three inner solves") {
  Discretization d = disc_on(generate_square_mixed(4));
  AuxPreconditioner B(d);
  const long before = B.inner_solve_count();
  const Eigen::VectorXd r = random_vector(d.stream->dim(), 4);
  const Eigen::VectorXd s = random_vector(d.stream->dim(), 5);
  const Eigen::VectorXd Br = B(r);
  CHECK(B.inner_solve_count() - before == 3);
  CHECK(std::abs(Br.dot(s) - B(s).dot(r)) <= 1e-12 * Br.norm() * s.norm());
  CHECK(r.dot(Br) > 0.0);
}

TEST_CASE("preconditioned solve is uniform over three levels") {
  MeshPtr mesh = generate_square_mixed(8);
  std::vector<int> iters;
  for (int j = 0; j <= 2; ++j) {
    if (j > 0) mesh = red_refine(mesh);
    Discretization d = disc_on(mesh);
    StokesSolution sol = solve_stokes(d, square_load(), PcgOptions{1e-6, 200});
    REQUIRE(sol.report.converged);
    CHECK(sol.report.n_it <= 10);
    CHECK(sol.report.rho <= 0.15);
    iters.push_back(sol.report.n_it);
  }
  CHECK(iters[2] <= iters[0] + 2);
}

TEST_CASE("Ritz-based condition estimate stays bounded across levels") {
  MeshPtr mesh = generate_square(2);
  std::vector<double> kappas;
  for (int j = 0; j <= 4; ++j) {
    if (j > 0) mesh = red_refine(mesh);
    Discretization d = disc_on(mesh);
    StokesSolution sol = solve_stokes(d, square_load(), PcgOptions{1e-10, 200});
    REQUIRE(sol.report.converged);
    kappas.push_back(sol.report.kappa_estimate());
    CHECK(sol.report.kappa_estimate() > 0.0);
  }
  const double kmax = *std::max_element(kappas.begin(), kappas.end());
  const double kmin = *std::min_element(kappas.begin(), kappas.end());
  CHECK(kmax / kmin <= 2.0);
}

TEST_CASE("pcg error decreases monotonically in the A-norm") {
  Discretization d = disc_on(generate_square_mixed(4));
  const Eigen::VectorXd F = assemble_rhs(
      *d.velocity, [](const Vec2& x) { return ManufacturedStokes::square().force(0.5, x); },
      d.config, nullptr);
  const Eigen::VectorXd b = d.Pcurl.apply_transpose(F);
  ReducedOperator op(d);
  AuxPreconditioner B(d);
  // reference solution from many accurate iterations
  auto [ref, rep0] =
      pcg([&](const Eigen::VectorXd& x) { return op(x); },
          [&](const Eigen::VectorXd& x) { return B(x); }, b, PcgOptions{1e-14, 500});
  REQUIRE(rep0.converged);
  std::vector<double> anorm;
  auto observer = [&](int, const Eigen::VectorXd& x) {
    const Eigen::VectorXd e = x - ref;
    anorm.push_back(std::sqrt(e.dot(op(e))));
  };
  pcg([&](const Eigen::VectorXd& x) { return op(x); },
      [&](const Eigen::VectorXd& x) { return B(x); }, b, PcgOptions{1e-10, 200}, observer);
  REQUIRE(anorm.size() >= 3);
  for (size_t k = 1; k + 1 < anorm.size(); ++k) CHECK(anorm[k] <= anorm[k - 1] * (1 + 1e-12));
}

TEST_CASE("pressure recovery") {
  Discretization d = disc_on(generate_square_mixed(4));
  const ManufacturedStokes ex = ManufacturedStokes::square();
  const Eigen::VectorXd F = assemble_rhs(
      *d.velocity, [&](const Vec2& x) { return ex.force(0.5, x); }, d.config, &ex);
  StokesSolution sol = solve_stokes(d, square_load(), PcgOptions{1e-12, 400});
  REQUIRE(sol.report.converged);

  SECTION("residual after recovery is in range(Bdiv^T) up to tolerance") {
    const Eigen::VectorXd resid =
        F - d.A.apply(sol.velocity.coeffs) - d.Bdiv.apply_transpose(sol.pressure.coeffs);
    CHECK(resid.norm() <= 1e-8 * F.norm());
  }

  SECTION("output has zero area-weighted mean; shifts do not change Bdiv^T p") {
    CHECK(std::abs(sol.pressure.coeffs.dot(d.element_areas)) <= 1e-12);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(d.pressure->dim());
    CHECK(d.Bdiv.apply_transpose(ones).norm() <= 1e-12);
  }

  SECTION("recovered pressure matches the direct saddle oracle") {
    SaddleSolution direct = direct_saddle_solve(d, F);
    CHECK((direct.p - sol.pressure.coeffs).norm() <= 1e-7 * direct.p.norm());
    CHECK((direct.U - sol.velocity.coeffs).norm() <= 1e-7 * direct.U.norm());
  }
}

TEST_CASE("direct saddle solve basics") {
  Discretization d = disc_on(generate_lshape(4));

  SECTION("zero load gives the zero solution") {
    SaddleSolution s = direct_saddle_solve(d, Eigen::VectorXd::Zero(d.velocity->dim()));
    CHECK(s.U.norm() <= 1e-14);
    CHECK(s.p.norm() <= 1e-14);
  }

  SECTION("velocity is divergence-free") {
    const ManufacturedStokes ex = ManufacturedStokes::lshape();
    const Eigen::VectorXd F = assemble_rhs(
        *d.velocity, [&](const Vec2& x) { return ex.force(0.5, x); }, d.config, &ex);
    SaddleSolution s = direct_saddle_solve(d, F);
    Field u(d.velocity, s.U);
    CHECK(max_abs_divergence(u) <= 1e-10 * u.coeffs.lpNorm<Eigen::Infinity>());
  }
}

TEST_CASE("pcg and direct saddle agree on both domains") {
  for (auto [mesh, ex] : {std::pair{generate_square_mixed(8), ManufacturedStokes::square()},
                          std::pair{generate_lshape(8), ManufacturedStokes::lshape()}}) {
    for (int j = 0; j <= 1; ++j) {
      if (j > 0) mesh = red_refine(mesh);
      Discretization d = disc_on(mesh);
      const Eigen::VectorXd F = assemble_rhs(
          *d.velocity, [&](const Vec2& x) { return ex.force(0.5, x); }, d.config, &ex);
      StokesSolution sol =
          solve_stokes(d, LoadSpec::manufactured_load(ex, 0.5), PcgOptions{1e-12, 400});
      SaddleSolution ref = direct_saddle_solve(d, F);
      CHECK((sol.velocity.coeffs - ref.U).norm() <= 1e-7 * ref.U.norm());
      CHECK((sol.pressure.coeffs - ref.p).norm() <= 1e-7 * ref.p.norm());
    }
  }
}

TEST_CASE("solve_stokes solution invariants") {
  Discretization d = disc_on(red_refine(generate_square_mixed(8)));
  StokesSolution sol = solve_stokes(d, square_load(), PcgOptions{1e-8, 200});
  REQUIRE(sol.report.converged);
  // velocity is exactly the curl of the stream solution
  CHECK(sol.velocity.coeffs == d.Pcurl.apply(sol.stream.coeffs));
  CHECK(max_abs_divergence(sol.velocity) <=
        1e-10 * sol.velocity.coeffs.lpNorm<Eigen::Infinity>());
  CHECK(std::abs(sol.pressure.coeffs.dot(d.element_areas)) <= 1e-12);
  // residual history collects every iteration
  CHECK(static_cast<int>(sol.report.residuals.size()) == sol.report.n_it + 1);
}

TEST_CASE("zero load solves to zero in zero iterations") {
  Discretization d = disc_on(generate_square(3));
  StokesSolution sol = solve_stokes(d, LoadSpec::zero());
  CHECK(sol.report.n_it == 0);
  CHECK(sol.report.converged);
  CHECK(sol.velocity.coeffs.norm() == 0.0);
  CHECK(sol.pressure.coeffs.norm() <= 1e-14);
  CHECK(sol.stream.coeffs.norm() == 0.0);
}

TEST_CASE("solver runs are bit-for-bit deterministic") {
  Discretization d = disc_on(generate_square_mixed(4));
  StokesSolution a = solve_stokes(d, square_load(), PcgOptions{1e-10, 200});
  StokesSolution b = solve_stokes(d, square_load(), PcgOptions{1e-10, 200});
  CHECK(a.velocity.coeffs == b.velocity.coeffs);
  CHECK(a.pressure.coeffs == b.pressure.coeffs);
  CHECK(a.report.residuals == b.report.residuals);
  CHECK(a.report.ritz_min == b.report.ritz_min);
}

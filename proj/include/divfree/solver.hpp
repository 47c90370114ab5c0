// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Eigenvalues>
#include <functional>
#include <optional>
#include <utility>

#include "divfree/discretization.hpp"
#include "divfree/helmholtz.hpp"

namespace divfree {

struct PcgOptions {
  double tol = 1e-6;  // on ||r_k||_2 / ||r_0||_2 (unpreconditioned residual)
  int maxit = 200;
};

struct PcgReport {
  int n_it = 0;
  bool converged = false;
  double rho = 0.0;                // (||r_n||/||r_0||)^(1/n_it)
  std::vector<double> residuals;   // ||r_0||, ||r_1||, ..., ||r_n||
  double ritz_min = 0.0, ritz_max = 0.0;  // extreme Ritz values of BA

  double kappa_estimate() const { return ritz_min > 0.0 ? ritz_max / ritz_min : 0.0; }
};

using LinOp = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using PcgObserver = std::function<void(int iteration, const Eigen::VectorXd& x)>;

/// Preconditioned conjugate gradient for an SPD operator/preconditioner pair.
/// Ritz extremes come from the Lanczos tridiagonal accumulated while
/// iterating. A zero right-hand side returns immediately with n_it = 0.
inline std::pair<Eigen::VectorXd, PcgReport> pcg(const LinOp& A, const LinOp& B,
                                                 const Eigen::VectorXd& rhs,
                                                 const PcgOptions& opts = {},
                                                 const PcgObserver& observer = {}) {
  PcgReport rep;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(rhs.size());
  Eigen::VectorXd r = rhs;
  const double r0 = r.norm();
  rep.residuals.push_back(r0);
  if (r0 == 0.0) {
    rep.converged = true;
    return {std::move(x), std::move(rep)};
  }
  Eigen::VectorXd z = B(r);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  std::vector<double> alphas, betas;
  for (int k = 0; k < opts.maxit; ++k) {
    const Eigen::VectorXd Ap = A(p);
    const double alpha = rz / p.dot(Ap);
    x += alpha * p;
    r -= alpha * Ap;
    alphas.push_back(alpha);
    rep.n_it = k + 1;
    const double rn = r.norm();
    rep.residuals.push_back(rn);
    if (observer) observer(k + 1, x);
    if (rn / r0 < opts.tol) {
      rep.converged = true;
      break;
    }
    z = B(r);
    const double rz_new = r.dot(z);
    const double beta = rz_new / rz;
    betas.push_back(beta);
    p = z + beta * p;
    rz = rz_new;
  }
  rep.rho = std::pow(rep.residuals.back() / r0, 1.0 / rep.n_it);
  // Lanczos tridiagonal from the CG coefficients
  const int n = rep.n_it;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    T(k, k) = 1.0 / alphas[k] + (k > 0 ? betas[k - 1] / alphas[k - 1] : 0.0);
    if (k + 1 < n) {
      const double off = std::sqrt(std::max(0.0, betas[k])) / alphas[k];
      T(k, k + 1) = off;
      T(k + 1, k) = off;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T, Eigen::EigenvaluesOnly);
  rep.ritz_min = es.eigenvalues().minCoeff();
  rep.ritz_max = es.eigenvalues().maxCoeff();
  return {std::move(x), std::move(rep)};
}

/// The reduced divergence-free system psi -> P^T A P psi (matrix-free).
class ReducedOperator {
 public:
  explicit ReducedOperator(const Discretization& d) : d_(&d) {}
  int dim() const { return d_->Pcurl.cols(); }
  Eigen::VectorXd operator()(const Eigen::VectorXd& psi) const {
    if (psi.size() != dim()) throw std::invalid_argument("ReducedOperator: dimension mismatch");
    return d_->Pcurl.apply_transpose(d_->A.apply(d_->Pcurl.apply(psi)));
  }

 private:
  const Discretization* d_;
};

/// Auxiliary-space preconditioner B = A_q^{-1} P^T M A^{-1} M P A_q^{-1};
/// exactly three inner direct solves per application.
class AuxPreconditioner {
 public:
  explicit AuxPreconditioner(const Discretization& d) : d_(&d) {
    d.Aq_factor();  // force factorizations up front
    d.A_factor();
  }
  Eigen::VectorXd operator()(const Eigen::VectorXd& r) const {
    Eigen::VectorXd y = d_->Aq_factor().solve(r);
    ++*solves_;
    y = d_->M.apply(d_->Pcurl.apply(y));
    y = d_->A_factor().solve(y);
    ++*solves_;
    y = d_->Pcurl.apply_transpose(d_->M.apply(y));
    y = d_->Aq_factor().solve(y);
    ++*solves_;
    return y;
  }
  long inner_solve_count() const { return *solves_; }

 private:
  const Discretization* d_;
  std::shared_ptr<long> solves_ = std::make_shared<long>(0);
};

/// Pressure recovery from the reduced-system velocity: the residual
/// F - A U lies in range(Bdiv^T); solve the normal equations
/// Bdiv Bdiv^T p = Bdiv (F - A U) by CG projected against the constant
/// nullvector, then shift to zero area-weighted mean.
inline Field recover_pressure(const Discretization& d, const Eigen::VectorXd& F,
                              const Eigen::VectorXd& U, double tol = 1e-10,
                              int maxit = 50000) {
  const Eigen::VectorXd r = F - d.A.apply(U);
  Eigen::VectorXd b = d.Bdiv.apply(r);
  const int n = static_cast<int>(b.size());
  auto project = [n](Eigen::VectorXd& v) { v.array() -= v.sum() / n; };
  project(b);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd res = b;
  const double b0 = res.norm();
  if (b0 > 0.0) {
    Eigen::VectorXd dir = res;
    double rr = res.squaredNorm();
    bool done = false;
    for (int k = 0; k < maxit; ++k) {
      Eigen::VectorXd Ad = d.Bdiv.apply(d.Bdiv.apply_transpose(dir));
      project(Ad);
      const double alpha = rr / dir.dot(Ad);
      p += alpha * dir;
      res -= alpha * Ad;
      if (res.norm() / b0 < tol) {
        done = true;
        break;
      }
      const double rr_new = res.squaredNorm();
      dir = res + (rr_new / rr) * dir;
      rr = rr_new;
    }
    if (!done) throw std::runtime_error("recover_pressure: inner CG did not converge");
  }
  p.array() -= p.dot(d.element_areas) / d.element_areas.sum();
  return Field(d.pressure, std::move(p));
}

struct SaddleSolution {
  Eigen::VectorXd U;
  Eigen::VectorXd p;
};

/// Direct factorization of the full Stokes saddle system (verification oracle).
inline SaddleSolution direct_saddle_solve(const Discretization& d, const Eigen::VectorXd& F) {
  const int nv = d.velocity->dim(), nq = d.pressure->dim();
  if (F.size() != nv) throw std::invalid_argument("direct_saddle_solve: rhs size mismatch");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nv + nq + 1);
  rhs.head(nv) = F;
  const Eigen::VectorXd x = d.saddle_factor().solve(rhs);
  return {x.head(nv), x.segment(nv, nq)};
}

/// Right-hand side description: a volume force plus (optionally) the
/// manufactured solution supplying the boundary traction correction.
struct LoadSpec {
  std::function<Vec2(const Vec2&)> f;
  std::optional<ManufacturedStokes> manufactured;

  static LoadSpec manufactured_load(const ManufacturedStokes& ex, double nu) {
    LoadSpec l;
    l.f = [ex, nu](const Vec2& x) { return ex.force(nu, x); };
    l.manufactured = ex;
    return l;
  }
  static LoadSpec fixed() {
    LoadSpec l;
    l.f = [](const Vec2& x) { return fixed_load(x); };
    return l;
  }
  static LoadSpec zero() {
    LoadSpec l;
    l.f = [](const Vec2&) { return Vec2::Zero(); };
    return l;
  }
};

struct StokesSolution {
  Field velocity;  // u_h = P_curl psi_h, divergence-free by construction
  Field pressure;  // zero area-weighted mean
  Field stream;    // psi_h
  PcgReport report;
};

/// Full pipeline: assemble the load, solve the reduced system by PCG with the
/// auxiliary-space preconditioner, recover the pressure.
inline StokesSolution solve_stokes(const Discretization& d, const LoadSpec& load,
                                   const PcgOptions& opts = {}) {
  const Eigen::VectorXd F =
      assemble_rhs(*d.velocity, load.f, d.config,
                   load.manufactured ? &*load.manufactured : nullptr);
  const Eigen::VectorXd b = d.Pcurl.apply_transpose(F);
  ReducedOperator op(d);
  AuxPreconditioner prec(d);
  auto [psi, rep] = pcg([&op](const Eigen::VectorXd& x) { return op(x); },
                        [&prec](const Eigen::VectorXd& x) { return prec(x); }, b, opts);
  Eigen::VectorXd U = d.Pcurl.apply(psi);
  Field p = recover_pressure(d, F, U, std::min(opts.tol, 1e-10));
  return {Field(d.velocity, std::move(U)), std::move(p), Field(d.stream, std::move(psi)),
          std::move(rep)};
}

}  // namespace divfree

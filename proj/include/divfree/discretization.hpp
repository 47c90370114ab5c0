// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <mutex>

#include "divfree/assembly.hpp"

namespace divfree {

/// Bordered saddle matrix [[A11, B^T, 0], [B, 0, m], [0, m^T, 0]]; the last
/// row/column pins the m-weighted mean of the second unknown block.
inline Eigen::SparseMatrix<double> bordered_saddle(const SparseMatrix& A11,
                                                   const SparseMatrix& B,
                                                   const Eigen::VectorXd& m) {
  const int nv = A11.rows(), nq = B.rows();
  if (A11.cols() != nv || B.cols() != nv || m.size() != nq)
    throw std::invalid_argument("bordered_saddle: dimension mismatch");
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(A11.nnz() + 2 * B.nnz() + 2 * nq);
  using It = SparseMatrix::Storage::InnerIterator;
  for (int k = 0; k < A11.eigen().outerSize(); ++k)
    for (It it(A11.eigen(), k); it; ++it)
      trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  for (int k = 0; k < B.eigen().outerSize(); ++k)
    for (It it(B.eigen(), k); it; ++it) {
      const int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
      trips.emplace_back(nv + r, c, it.value());
      trips.emplace_back(c, nv + r, it.value());
    }
  for (int q = 0; q < nq; ++q) {
    trips.emplace_back(nv + q, nv + nq, m[q]);
    trips.emplace_back(nv + nq, nv + q, m[q]);
  }
  Eigen::SparseMatrix<double> s(nv + nq + 1, nv + nq + 1);
  s.setFromTriplets(trips.begin(), trips.end());
  return s;
}

/// All assembled operators of one mesh level, with lazily cached direct
/// factorizations (cache access serialized; matrices immutable).
struct Discretization {
  MeshPtr mesh;
  FeSpacePtr velocity;  // Bdm1Velocity
  FeSpacePtr pressure;  // P0Pressure
  FeSpacePtr stream;    // P2Stream
  AssemblyConfig config;

  SparseMatrix A;      // DG elasticity form
  SparseMatrix M;      // velocity mass
  SparseMatrix Bdiv;   // -(q, div v)
  SparseMatrix Pcurl;  // curl embedding N_h -> V_h
  SparseMatrix Aq;     // P^T M P (stream Laplacian)
  SparseMatrix grad_gram;  // broken H1 Gram
  SparseMatrix jump_gram;  // h^-1 tangential-jump Gram
  Eigen::VectorXd element_areas;

  const SpdFactor& A_factor() const {
    std::lock_guard<std::mutex> lock(cache_->mu);
    if (!cache_->a) cache_->a = std::make_unique<SpdFactor>(A);
    return *cache_->a;
  }
  const SpdFactor& Aq_factor() const {
    std::lock_guard<std::mutex> lock(cache_->mu);
    if (!cache_->aq) cache_->aq = std::make_unique<SpdFactor>(Aq);
    return *cache_->aq;
  }
  /// Factorization of the mixed-Poisson saddle system [[M,B^T],[B,0]] + mean border.
  const LuFactor& mixed_factor() const {
    std::lock_guard<std::mutex> lock(cache_->mu);
    if (!cache_->mixed)
      cache_->mixed = std::make_unique<LuFactor>(bordered_saddle(M, Bdiv, element_areas));
    return *cache_->mixed;
  }
  /// Factorization of the Stokes saddle system [[A,B^T],[B,0]] + mean border.
  const LuFactor& saddle_factor() const {
    std::lock_guard<std::mutex> lock(cache_->mu);
    if (!cache_->saddle)
      cache_->saddle = std::make_unique<LuFactor>(bordered_saddle(A, Bdiv, element_areas));
    return *cache_->saddle;
  }
  /// Release cached factorizations (the matrices stay).
  void drop_factors() const {
    std::lock_guard<std::mutex> lock(cache_->mu);
    cache_->a.reset();
    cache_->aq.reset();
    cache_->mixed.reset();
    cache_->saddle.reset();
  }

 private:
  struct Cache {
    std::mutex mu;
    std::unique_ptr<SpdFactor> a, aq;
    std::unique_ptr<LuFactor> mixed, saddle;
  };
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

inline Discretization build_discretization(MeshPtr mesh, const AssemblyConfig& cfg) {
  cfg.validate();
  Discretization d;
  d.mesh = mesh;
  d.config = cfg;
  d.velocity = build_space(mesh, SpaceKind::Bdm1Velocity);
  d.pressure = build_space(mesh, SpaceKind::P0Pressure);
  d.stream = build_space(mesh, SpaceKind::P2Stream);
  d.A = assemble_a(*d.velocity, cfg);
  d.M = assemble_mass(*d.velocity, cfg);
  d.Bdiv = assemble_bdiv(*d.velocity, *d.pressure);
  d.Pcurl = assemble_pcurl(*d.stream, *d.velocity);
  d.Aq = assemble_aq(d.M, d.Pcurl);
  d.grad_gram = assemble_grad_gram(*d.velocity);
  d.jump_gram = assemble_jump_gram(*d.velocity, cfg.edge_points);
  d.element_areas.resize(mesh->n_triangles());
  for (int t = 0; t < mesh->n_triangles(); ++t) d.element_areas[t] = mesh->tri_area(t);
  return d;
}

/// ||x||_DG^2 = 2 nu (x^T G x + x^T J x) for velocity coefficients x.
inline double dg_norm_vh(const Discretization& d, const Eigen::VectorXd& x) {
  const double g = x.dot(d.grad_gram.apply(x));
  const double j = x.dot(d.jump_gram.apply(x));
  return std::sqrt(2.0 * d.config.nu * (g + j));
}

inline double l2_norm_vh(const Discretization& d, const Eigen::VectorXd& x) {
  return std::sqrt(x.dot(d.M.apply(x)));
}

/// Tangential-jump seminorm |[[u]]|_* of a velocity coefficient vector.
inline double jump_seminorm_vh(const Discretization& d, const Eigen::VectorXd& x) {
  return std::sqrt(x.dot(d.jump_gram.apply(x)));
}

inline double l2_norm_qh(const Discretization& d, const Eigen::VectorXd& x) {
  return std::sqrt(x.cwiseProduct(x).dot(d.element_areas));
}

/// ||div u||_0 over the mesh (the divergence is piecewise constant).
inline double div_l2_norm(const Discretization& d, const Field& u) {
  double s = 0.0;
  for (int t = 0; t < d.mesh->n_triangles(); ++t) {
    const double dv = u.divergence(t);
    s += d.element_areas[t] * dv * dv;
  }
  return std::sqrt(s);
}

inline double max_abs_divergence(const Field& u) {
  double m = 0.0;
  for (int t = 0; t < u.space->mesh().n_triangles(); ++t)
    m = std::max(m, std::abs(u.divergence(t)));
  return m;
}

}  // namespace divfree

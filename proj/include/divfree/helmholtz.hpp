// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "divfree/discretization.hpp"

namespace divfree {

struct MixedPoissonResult {
  Field sigma;  // in V_h
  Field q;      // in Q_h, zero (area-weighted) mean
};

/// Mixed approximation of the Neumann Poisson problem driven by div(v_h):
///   (sigma, tau) - (q, div tau) = 0          for all tau in V_h
///   (div sigma, s) = (div v_h, s)            for all s in Q_h
/// solved through one factorization of the bordered indefinite system.
inline MixedPoissonResult mixed_poisson(const Discretization& d, const Field& v) {
  if (v.space != d.velocity)
    throw std::invalid_argument("mixed_poisson: field is not in this level's V_h");
  const int nv = d.velocity->dim(), nq = d.pressure->dim();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nv + nq + 1);
  rhs.segment(nv, nq) = d.Bdiv.apply(v.coeffs);
  const Eigen::VectorXd x = d.mixed_factor().solve(rhs);
  return {Field(d.velocity, x.head(nv)), Field(d.pressure, x.segment(nv, nq))};
}

/// Discrete Helmholtz decomposition v = g + w with w divergence-free.
struct HelmholtzSplit {
  Field input;             // v_h
  Field gradient_part;     // g_h (the discrete-gradient component)
  Field divfree_part;      // w_h = v_h - g_h
  Field stream_potential;  // phi_h in N_h with w_h = curl(phi_h)
  Field potential_q;       // q_h in Q_h from the mixed solve
};

inline HelmholtzSplit split(const Discretization& d, const Field& v) {
  MixedPoissonResult mp = mixed_poisson(d, v);
  Field w(d.velocity, v.coeffs - mp.sigma.coeffs);
  // recover the stream potential from A_q phi = P^T M w
  const Eigen::VectorXd rhs = d.Pcurl.apply_transpose(d.M.apply(w.coeffs));
  Field phi(d.stream, d.Aq_factor().solve(rhs));
  return {v, mp.sigma, w, std::move(phi), mp.q};
}

/// M-orthogonal projection onto the divergence-free subspace, in stream
/// coordinates: psi = A_q^{-1} P^T M v.
inline Eigen::VectorXd project_divfree(const Discretization& d, const Eigen::VectorXd& v) {
  if (v.size() != d.velocity->dim())
    throw std::invalid_argument("project_divfree: coefficient size mismatch");
  return d.Aq_factor().solve(d.Pcurl.apply_transpose(d.M.apply(v)));
}

/// ||g_h||_DG / ||div v_h||_0 — the stability quotient of the decomposition.
inline double stability_ratio(const Discretization& d, const Field& v) {
  const double divnorm = div_l2_norm(d, v);
  const double scale = std::max(1.0, v.coeffs.lpNorm<Eigen::Infinity>());
  if (divnorm <= 1e-13 * scale)
    throw std::invalid_argument("stability_ratio: input is divergence-free");
  HelmholtzSplit s = split(d, v);
  return dg_norm_vh(d, s.gradient_part.coeffs) / divnorm;
}

}  // namespace divfree

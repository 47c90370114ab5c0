// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "divfree/solver.hpp"
#include "json.hpp"

namespace divfree {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Norms by direct integration (independent of the assembled Gram matrices)
// ---------------------------------------------------------------------------

/// ||v||_DG = sqrt(2nu |v|_{1,h}^2 + 2nu |[[v_t]]|_*^2) of a velocity Field,
/// evaluated by element/edge quadrature.
inline double dg_norm(const Field& u, double nu, int edge_points = 4) {
  const Mesh2D& m = u.space->mesh();
  double grad2 = 0.0;
  for (int t = 0; t < m.n_triangles(); ++t)
    grad2 += m.tri_area(t) * u.velocity_grad(t).squaredNorm();
  double jump2 = 0.0;
  const auto rule = gauss_rule(edge_points);
  for (int e = 0; e < m.n_edges(); ++e) {
    const MeshEdge& ed = m.edge(e);
    if (ed.boundary) continue;
    const ElementMap map0 = m.element_map(ed.tri[0]);
    const ElementMap map1 = m.element_map(ed.tri[1]);
    const Vec2 pa = m.vertex(ed.a);
    double acc = 0.0;
    for (const auto& q : rule) {
      const Vec2 x = pa + q.t * ed.length * ed.tangent;
      const Vec2 dv = u.velocity(ed.tri[0], map0.to_reference(x)) -
                      u.velocity(ed.tri[1], map1.to_reference(x));
      const Vec2 dvt = dv - dv.dot(ed.normal) * ed.normal;
      acc += q.w * detail::sym_outer(dvt, ed.normal).squaredNorm();
    }
    jump2 += acc;  // the h_e^{-1} weight cancels the arc-length factor
  }
  return std::sqrt(2.0 * nu * (grad2 + jump2));
}

/// Errors of a discrete solution against the manufactured one.
struct VsExactErrors {
  double l2_velocity = kNaN;
  double dg_velocity = kNaN;
  double l2_pressure = kNaN;
};

inline VsExactErrors errors_vs_exact(const Discretization& d, const Field& u, const Field& p,
                                     const ManufacturedStokes& ex, int degree = 8) {
  const Mesh2D& m = *d.mesh;
  const auto rule = triangle_rule(degree);
  // pressure error in the quotient norm: remove the mean of the difference
  double pshift = 0.0;
  for (int t = 0; t < m.n_triangles(); ++t) {
    const ElementMap map = m.element_map(t);
    double s = 0.0;
    for (const auto& q : rule) s += q.w * ex.pressure(map.to_physical(Vec2(q.x, q.y)));
    pshift += s * map.det - p.coeffs[t] * m.tri_area(t);
  }
  pshift /= m.total_area();
  double l2u = 0.0, g2 = 0.0, l2p = 0.0;
  for (int t = 0; t < m.n_triangles(); ++t) {
    const ElementMap map = m.element_map(t);
    const Eigen::Matrix2d gh = u.velocity_grad(t);
    const double ph = p.coeffs[t];
    for (const auto& q : rule) {
      const Vec2 xh(q.x, q.y);
      const Vec2 x = map.to_physical(xh);
      l2u += q.w * map.det * (ex.velocity(x) - u.velocity(t, xh)).squaredNorm();
      g2 += q.w * map.det * (ex.velocity_grad(x) - gh).squaredNorm();
      const double dp = ex.pressure(x) - ph - pshift;
      l2p += q.w * map.det * dp * dp;
    }
  }
  // the exact velocity is smooth, so the jump of the error is the jump of u_h
  const double jump = jump_seminorm_vh(d, u.coeffs);
  VsExactErrors e;
  e.l2_velocity = std::sqrt(l2u);
  e.dg_velocity = std::sqrt(2.0 * d.config.nu * (g2 + jump * jump));
  e.l2_pressure = std::sqrt(l2p);
  return e;
}

// ---------------------------------------------------------------------------
// Study reports
// ---------------------------------------------------------------------------

struct ErrorSet {
  double l2_velocity = kNaN;
  double dg_velocity = kNaN;
  double l2_pressure = kNaN;
  double jump_seminorm = kNaN;
};

struct LevelRecord {
  int level = 0;
  int n_elements = 0;
  int n_velocity_dofs = 0;
  ErrorSet errors;
  double gamma0 = kNaN, gamma_dg = kNaN, gamma_p = kNaN, gamma_star = kNaN;
  PcgReport pcg;
};

struct StudyReport {
  std::string study;   // convergence | precond
  std::string domain;  // square | lshape
  std::string load;    // manufactured | fixed | none
  double nu = 0.5, alpha = 6.0, tol = 1e-6;
  int levels = 0;  // finest refinement level J
  std::vector<LevelRecord> rows;
  std::string failure;  // nonempty if a level failed; rows above it are valid
};

struct StudyConfig {
  std::string domain = "square";
  int levels = 5;
  std::string load = "manufactured";
  double nu = 0.5;
  double alpha = 6.0;
  double tol = 1e-10;  // PCG tolerance (precond study: typically 1e-6)
  int maxit = 200;
  int coarse_n = 8;

  void validate() const {
    if (domain != "square" && domain != "lshape")
      throw std::invalid_argument("StudyConfig: domain must be square or lshape");
    if (load != "manufactured" && load != "fixed")
      throw std::invalid_argument("StudyConfig: load must be manufactured or fixed");
    if (levels < 0) throw std::invalid_argument("StudyConfig: levels must be >= 0");
    if (load == "manufactured" && levels < 1)
      throw std::invalid_argument("StudyConfig: manufactured study needs >= 1 refinement");
    if (load == "fixed" && levels < 2)
      throw std::invalid_argument("StudyConfig: fixed-load study needs >= 2 refinements");
    if (!(nu > 0) || !(alpha > 0) || !(tol > 0) || maxit < 1 || coarse_n < 1)
      throw std::invalid_argument("StudyConfig: bad parameter");
  }
};

/// Coarse mesh per domain: the mixed square mesh reproduces the reference
/// entity counts (160 elements / 97 vertices / 448 velocity DOFs at n=8).
inline MeshPtr coarse_mesh_for(const StudyConfig& cfg) {
  return cfg.domain == "lshape" ? generate_lshape(cfg.coarse_n)
                                : generate_square_mixed(cfg.coarse_n);
}

struct LevelSolution {
  std::shared_ptr<Discretization> disc;
  StokesSolution sol;
};

namespace detail {

inline double rate_log2(double coarse, double fine) {
  if (!std::isfinite(coarse) || !std::isfinite(fine) || !(coarse > 0) || !(fine > 0))
    return kNaN;
  return std::log2(coarse / fine);
}

}  // namespace detail

/// Rates gamma = log2(||uI_{k-1}-u_{k-1}|| / ||uI_k-u_k||) in the L2 and DG
/// norms, likewise for the pressure projection, and
/// gamma_* = log2(|[[u_{k-1}]]|_* / |[[u_k]]|_*). All differences are between
/// discrete functions on one mesh, hence integrated exactly.
inline std::vector<LevelRecord> rates_vs_interpolant(const std::vector<LevelSolution>& levels,
                                                     const ManufacturedStokes& ex) {
  if (levels.size() < 2)
    throw std::invalid_argument("rates_vs_interpolant: need at least 2 levels");
  const size_t n = levels.size();
  std::vector<double> d0(n), ddg(n), dp(n), js(n);
  std::vector<LevelRecord> rows(n);
  for (size_t k = 0; k < n; ++k) {
    const Discretization& d = *levels[k].disc;
    const Field uI = interpolate_velocity(d.velocity, [&](const Vec2& x) { return ex.velocity(x); });
    const Field pI = project_pressure(d.pressure, [&](const Vec2& x) { return ex.pressure(x); });
    const Eigen::VectorXd du = uI.coeffs - levels[k].sol.velocity.coeffs;
    Eigen::VectorXd dq = pI.coeffs - levels[k].sol.pressure.coeffs;
    dq.array() -= dq.dot(d.element_areas) / d.element_areas.sum();  // quotient norm
    d0[k] = l2_norm_vh(d, du);
    ddg[k] = dg_norm_vh(d, du);
    dp[k] = l2_norm_qh(d, dq);
    js[k] = jump_seminorm_vh(d, levels[k].sol.velocity.coeffs);

    LevelRecord& r = rows[k];
    r.level = static_cast<int>(k);
    r.n_elements = d.mesh->n_triangles();
    r.n_velocity_dofs = d.velocity->dim();
    r.pcg = levels[k].sol.report;
    const VsExactErrors e = errors_vs_exact(d, levels[k].sol.velocity, levels[k].sol.pressure, ex);
    r.errors.l2_velocity = e.l2_velocity;
    r.errors.dg_velocity = e.dg_velocity;
    r.errors.l2_pressure = e.l2_pressure;
    r.errors.jump_seminorm = js[k];
  }
  for (size_t k = 1; k < n; ++k) {
    rows[k].gamma0 = detail::rate_log2(d0[k - 1], d0[k]);
    rows[k].gamma_dg = detail::rate_log2(ddg[k - 1], ddg[k]);
    rows[k].gamma_p = detail::rate_log2(dp[k - 1], dp[k]);
    rows[k].gamma_star = detail::rate_log2(js[k - 1], js[k]);
  }
  return rows;
}

/// Rates from consecutive nested solutions (fixed right-hand side):
/// gamma(k) = log2(||u_k - u_{k-1}|| / ||u_{k+1} - u_k||), with the coarse
/// field evaluated on the fine mesh through the refinement lineage, and
/// gamma_*(k) from the differenced jump seminorms (absolute values; a
/// negative difference is noted on stderr).
inline std::vector<LevelRecord> rates_cauchy(const std::vector<LevelSolution>& levels) {
  if (levels.size() < 3) throw std::invalid_argument("rates_cauchy: need at least 3 levels");
  const size_t n = levels.size();
  for (size_t k = 1; k < n; ++k)
    if (levels[k].disc->mesh->parent() != levels[k - 1].disc->mesh.get())
      throw std::invalid_argument("rates_cauchy: levels are not a nested refinement chain");
  std::vector<double> d0(n, kNaN), ddg(n, kNaN), dp(n, kNaN), js(n);
  std::vector<LevelRecord> rows(n);
  for (size_t k = 0; k < n; ++k) {
    const Discretization& d = *levels[k].disc;
    js[k] = jump_seminorm_vh(d, levels[k].sol.velocity.coeffs);
    if (k >= 1) {
      const Field up = prolong_velocity(levels[k - 1].sol.velocity, d.velocity);
      const Field pp = prolong_pressure(levels[k - 1].sol.pressure, d.pressure);
      const Eigen::VectorXd du = levels[k].sol.velocity.coeffs - up.coeffs;
      Eigen::VectorXd dq = levels[k].sol.pressure.coeffs - pp.coeffs;
      dq.array() -= dq.dot(d.element_areas) / d.element_areas.sum();  // quotient norm
      d0[k] = l2_norm_vh(d, du);
      ddg[k] = dg_norm_vh(d, du);
      dp[k] = l2_norm_qh(d, dq);
    }
    LevelRecord& r = rows[k];
    r.level = static_cast<int>(k);
    r.n_elements = d.mesh->n_triangles();
    r.n_velocity_dofs = d.velocity->dim();
    r.pcg = levels[k].sol.report;
    r.errors.l2_velocity = d0[k];
    r.errors.dg_velocity = ddg[k];
    r.errors.l2_pressure = dp[k];
    r.errors.jump_seminorm = js[k];
  }
  for (size_t k = 1; k + 1 < n; ++k) {
    rows[k].gamma0 = detail::rate_log2(d0[k], d0[k + 1]);
    rows[k].gamma_dg = detail::rate_log2(ddg[k], ddg[k + 1]);
    rows[k].gamma_p = detail::rate_log2(dp[k], dp[k + 1]);
    const double num = js[k] - js[k - 1], den = js[k + 1] - js[k];
    if (num < 0 || den < 0)
      std::fprintf(stderr,
                   "rates_cauchy: negative jump-seminorm difference at level %zu; "
                   "using absolute values\n",
                   k);
    rows[k].gamma_star = detail::rate_log2(std::abs(num), std::abs(den));
  }
  return rows;
}

inline StudyReport run_convergence_study(const StudyConfig& cfg) {
  cfg.validate();
  StudyReport rep;
  rep.study = "convergence";
  rep.domain = cfg.domain;
  rep.load = cfg.load;
  rep.nu = cfg.nu;
  rep.alpha = cfg.alpha;
  rep.tol = cfg.tol;
  rep.levels = cfg.levels;

  const AssemblyConfig acfg{cfg.nu, cfg.alpha, 6, 4};
  const PcgOptions opts{cfg.tol, cfg.maxit};
  const ManufacturedStokes ex = ManufacturedStokes::for_domain(cfg.domain);
  const LoadSpec load = cfg.load == "manufactured" ? LoadSpec::manufactured_load(ex, cfg.nu)
                                                   : LoadSpec::fixed();
  std::vector<LevelSolution> levels;
  MeshPtr mesh = coarse_mesh_for(cfg);
  try {
    for (int j = 0; j <= cfg.levels; ++j) {
      if (j > 0) mesh = red_refine(mesh);
      auto disc = std::make_shared<Discretization>(build_discretization(mesh, acfg));
      StokesSolution sol = solve_stokes(*disc, load, opts);
      disc->drop_factors();
      levels.push_back({std::move(disc), std::move(sol)});
    }
    rep.rows = cfg.load == "manufactured" ? rates_vs_interpolant(levels, ex)
                                          : rates_cauchy(levels);
  } catch (const std::exception& e) {
    rep.failure = e.what();
    for (size_t k = 0; k < levels.size(); ++k) {
      LevelRecord r;
      r.level = static_cast<int>(k);
      r.n_elements = levels[k].disc->mesh->n_triangles();
      r.n_velocity_dofs = levels[k].disc->velocity->dim();
      r.pcg = levels[k].sol.report;
      rep.rows.push_back(std::move(r));
    }
  }
  return rep;
}

inline StudyReport run_precond_study(const StudyConfig& cfg) {
  cfg.validate();
  StudyReport rep;
  rep.study = "precond";
  rep.domain = cfg.domain;
  rep.load = "manufactured";
  rep.nu = cfg.nu;
  rep.alpha = cfg.alpha;
  rep.tol = cfg.tol;
  rep.levels = cfg.levels;

  const AssemblyConfig acfg{cfg.nu, cfg.alpha, 6, 4};
  const PcgOptions opts{cfg.tol, cfg.maxit};
  const ManufacturedStokes ex = ManufacturedStokes::for_domain(cfg.domain);
  const LoadSpec load = LoadSpec::manufactured_load(ex, cfg.nu);
  MeshPtr mesh;
  try {
    for (int j = 0; j <= cfg.levels; ++j) {
      mesh = j == 0 ? coarse_mesh_for(cfg) : red_refine(mesh);
      Discretization disc = build_discretization(mesh, acfg);
      StokesSolution sol = solve_stokes(disc, load, opts);
      disc.drop_factors();
      LevelRecord r;
      r.level = j;
      r.n_elements = disc.mesh->n_triangles();
      r.n_velocity_dofs = disc.velocity->dim();
      r.pcg = sol.report;
      rep.rows.push_back(std::move(r));
    }
  } catch (const std::exception& e) {
    rep.failure = e.what();
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt_num(double v) {
  if (std::isnan(v)) return "\"nan\"";
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

inline double parse_num(const std::string& s) {
  if (s == "\"nan\"" || s == "nan") return kNaN;
  return std::strtod(s.c_str(), nullptr);
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

inline std::string to_csv(const StudyReport& r) {
  std::ostringstream out;
  out << "study," << r.study << "\n";
  out << "domain," << r.domain << "\n";
  out << "load," << r.load << "\n";
  out << "nu," << detail::fmt_num(r.nu) << "\n";
  out << "alpha," << detail::fmt_num(r.alpha) << "\n";
  out << "tol," << detail::fmt_num(r.tol) << "\n";
  out << "levels," << r.levels << "\n";
  if (!r.failure.empty()) out << "failure," << r.failure << "\n";
  out << "header,level,n_elements,n_velocity_dofs,l2_velocity,dg_velocity,l2_pressure,"
         "jump_seminorm,gamma0,gamma_dg,gamma_p,gamma_star,pcg_n_it,pcg_rho,pcg_ritz_min,"
         "pcg_ritz_max\n";
  for (const auto& row : r.rows) {
    out << "row," << row.level << ',' << row.n_elements << ',' << row.n_velocity_dofs << ','
        << detail::fmt_num(row.errors.l2_velocity) << ',' << detail::fmt_num(row.errors.dg_velocity)
        << ',' << detail::fmt_num(row.errors.l2_pressure) << ','
        << detail::fmt_num(row.errors.jump_seminorm) << ',' << detail::fmt_num(row.gamma0) << ','
        << detail::fmt_num(row.gamma_dg) << ',' << detail::fmt_num(row.gamma_p) << ','
        << detail::fmt_num(row.gamma_star) << ',' << row.pcg.n_it << ','
        << detail::fmt_num(row.pcg.rho) << ',' << detail::fmt_num(row.pcg.ritz_min) << ','
        << detail::fmt_num(row.pcg.ritz_max) << "\n";
  }
  return out.str();
}

inline StudyReport parse_csv_string(const std::string& text) {
  StudyReport r;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    const std::string& key = f[0];
    if (key == "study") r.study = f.at(1);
    else if (key == "domain") r.domain = f.at(1);
    else if (key == "load") r.load = f.at(1);
    else if (key == "nu") r.nu = detail::parse_num(f.at(1));
    else if (key == "alpha") r.alpha = detail::parse_num(f.at(1));
    else if (key == "tol") r.tol = detail::parse_num(f.at(1));
    else if (key == "levels") r.levels = std::stoi(f.at(1));
    else if (key == "failure") r.failure = line.substr(8);
    else if (key == "header") continue;
    else if (key == "row") {
      if (f.size() != 16) throw std::runtime_error("parse_csv: malformed row");
      LevelRecord row;
      row.level = std::stoi(f[1]);
      row.n_elements = std::stoi(f[2]);
      row.n_velocity_dofs = std::stoi(f[3]);
      row.errors.l2_velocity = detail::parse_num(f[4]);
      row.errors.dg_velocity = detail::parse_num(f[5]);
      row.errors.l2_pressure = detail::parse_num(f[6]);
      row.errors.jump_seminorm = detail::parse_num(f[7]);
      row.gamma0 = detail::parse_num(f[8]);
      row.gamma_dg = detail::parse_num(f[9]);
      row.gamma_p = detail::parse_num(f[10]);
      row.gamma_star = detail::parse_num(f[11]);
      row.pcg.n_it = std::stoi(f[12]);
      row.pcg.rho = detail::parse_num(f[13]);
      row.pcg.ritz_min = detail::parse_num(f[14]);
      row.pcg.ritz_max = detail::parse_num(f[15]);
      r.rows.push_back(std::move(row));
    } else {
      throw std::runtime_error("parse_csv: unknown key " + key);
    }
  }
  return r;
}

inline StudyReport parse_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("parse_csv: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv_string(ss.str());
}

inline std::string to_markdown(const StudyReport& r) {
  std::ostringstream out;
  out << "# " << r.study << " study: " << r.domain << ", load " << r.load << "\n\n";
  out << "nu=" << detail::fmt_num(r.nu) << " alpha=" << detail::fmt_num(r.alpha)
      << " tol=" << detail::fmt_num(r.tol) << " levels=" << r.levels << "\n\n";
  if (!r.failure.empty()) out << "**failed:** " << r.failure << "\n\n";
  auto md = [](double v) {
    if (std::isnan(v)) return std::string("nan");
    char b[32];
    std::snprintf(b, sizeof b, "%.3g", v);
    return std::string(b);
  };
  out << "| level | elements | velocity DOFs | l2_velocity | dg_velocity | l2_pressure | "
         "jump_seminorm | n_it | rho |\n";
  out << "|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& row : r.rows)
    out << "| " << row.level << " | " << row.n_elements << " | " << row.n_velocity_dofs << " | "
        << md(row.errors.l2_velocity) << " | " << md(row.errors.dg_velocity) << " | "
        << md(row.errors.l2_pressure) << " | " << md(row.errors.jump_seminorm) << " | "
        << row.pcg.n_it << " | " << md(row.pcg.rho) << " |\n";
  out << "\n| rate |";
  for (size_t k = 1; k < r.rows.size(); ++k) out << " k=" << k << " |";
  out << "\n|---|";
  for (size_t k = 1; k < r.rows.size(); ++k) out << "---|";
  out << "\n";
  auto rate_row = [&](const char* name, auto get) {
    out << "| " << name << " |";
    for (size_t k = 1; k < r.rows.size(); ++k) {
      char b[32];
      const double v = get(r.rows[k]);
      if (std::isnan(v)) out << " nan |";
      else {
        std::snprintf(b, sizeof b, " %.2f |", v);
        out << b;
      }
    }
    out << "\n";
  };
  rate_row("gamma_0", [](const LevelRecord& x) { return x.gamma0; });
  rate_row("gamma_DG", [](const LevelRecord& x) { return x.gamma_dg; });
  rate_row("gamma_p", [](const LevelRecord& x) { return x.gamma_p; });
  rate_row("gamma_*", [](const LevelRecord& x) { return x.gamma_star; });
  return out.str();
}

inline nlohmann::json pcg_to_json(const PcgReport& p, int level) {
  auto num = [](double v) {
    return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v);
  };
  nlohmann::json j;
  j["level"] = level;
  j["n_it"] = p.n_it;
  j["rho"] = num(p.rho);
  j["residuals"] = p.residuals;
  j["ritz_min"] = num(p.ritz_min);
  j["ritz_max"] = num(p.ritz_max);
  j["converged"] = p.converged;
  return j;
}

inline nlohmann::json to_json(const StudyReport& r) {
  auto num = [](double v) {
    return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v);
  };
  nlohmann::json j;
  j["study"] = r.study;
  j["domain"] = r.domain;
  j["load"] = r.load;
  j["nu"] = r.nu;
  j["alpha"] = r.alpha;
  j["tol"] = r.tol;
  j["levels"] = r.levels;
  if (!r.failure.empty()) j["failure"] = r.failure;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json o;
    o["level"] = row.level;
    o["n_elements"] = row.n_elements;
    o["n_velocity_dofs"] = row.n_velocity_dofs;
    o["errors"] = {{"l2_velocity", num(row.errors.l2_velocity)},
                   {"dg_velocity", num(row.errors.dg_velocity)},
                   {"l2_pressure", num(row.errors.l2_pressure)},
                   {"jump_seminorm", num(row.errors.jump_seminorm)}};
    o["rates"] = {{"gamma0", num(row.gamma0)},
                  {"gamma_dg", num(row.gamma_dg)},
                  {"gamma_p", num(row.gamma_p)},
                  {"gamma_star", num(row.gamma_star)}};
    o["pcg"] = pcg_to_json(row.pcg, row.level);
    j["rows"].push_back(std::move(o));
  }
  return j;
}

enum class ReportFormat { csv, markdown, json };

inline void emit(const StudyReport& r, ReportFormat fmt, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit: cannot open " + path);
  switch (fmt) {
    case ReportFormat::csv: out << to_csv(r); break;
    case ReportFormat::markdown: out << to_markdown(r); break;
    case ReportFormat::json: out << to_json(r).dump(2) << "\n"; break;
  }
  if (!out) throw std::runtime_error("emit: write failed for " + path);
}

}  // namespace divfree

// SPDX-License-Identifier: Apache-2.0
//
// divfree-stokes: generate meshes, run the convergence studies, and run the
// preconditioner study from the command line.

#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "divfree/study.hpp"

namespace {

divfree::ReportFormat format_for(const std::string& fmt, const std::string& path,
                                 divfree::ReportFormat fallback) {
  if (fmt == "csv") return divfree::ReportFormat::csv;
  if (fmt == "markdown" || fmt == "md") return divfree::ReportFormat::markdown;
  if (fmt == "json") return divfree::ReportFormat::json;
  if (!fmt.empty()) throw CLI::ValidationError("--format", "unknown format " + fmt);
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv")
    return divfree::ReportFormat::csv;
  if (path.size() >= 3 && path.substr(path.size() - 3) == ".md")
    return divfree::ReportFormat::markdown;
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json")
    return divfree::ReportFormat::json;
  return fallback;
}

void apply_thread_cap() {
  if (const char* env = std::getenv("DFS_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) Eigen::setNbThreads(n);
  }
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_cap();
  CLI::App app{"H(div)-conforming DG Stokes solver with auxiliary-space preconditioning"};
  app.require_subcommand(1);

  divfree::StudyConfig cfg;
  std::string out, format;

  auto* conv = app.add_subcommand("convergence", "run a refinement study and report rates");
  conv->add_option("--domain", cfg.domain, "square | lshape")->default_val("square");
  conv->add_option("--levels", cfg.levels, "number of refinements")->default_val(5);
  conv->add_option("--load", cfg.load, "manufactured | fixed")->default_val("manufactured");
  conv->add_option("--nu", cfg.nu, "viscosity")->default_val(0.5);
  conv->add_option("--alpha", cfg.alpha, "penalty parameter")->default_val(6.0);
  conv->add_option("--tol", cfg.tol, "PCG relative residual tolerance")->default_val(1e-10);
  conv->add_option("--maxit", cfg.maxit, "PCG iteration cap")->default_val(200);
  conv->add_option("--coarse-n", cfg.coarse_n, "cells per side of the coarse mesh")
      ->default_val(8);
  conv->add_option("--out", out, "report path")->required();
  conv->add_option("--format", format, "csv | markdown | json (default: by extension)");

  auto* prec = app.add_subcommand("precond", "run the preconditioned-PCG uniformity study");
  prec->add_option("--domain", cfg.domain, "square | lshape")->default_val("square");
  prec->add_option("--levels", cfg.levels, "finest refinement level J")->default_val(4);
  prec->add_option("--tol", cfg.tol, "PCG relative residual tolerance")->default_val(1e-6);
  prec->add_option("--maxit", cfg.maxit, "PCG iteration cap")->default_val(200);
  prec->add_option("--nu", cfg.nu, "viscosity")->default_val(0.5);
  prec->add_option("--alpha", cfg.alpha, "penalty parameter")->default_val(6.0);
  prec->add_option("--coarse-n", cfg.coarse_n, "cells per side of the coarse mesh")
      ->default_val(8);
  prec->add_option("--out", out, "report path")->required();
  prec->add_option("--format", format, "csv | markdown | json (default: by extension)");

  std::string gen = "square";
  int mesh_n = 8, mesh_refine = 0;
  auto* mesh = app.add_subcommand("mesh", "generate and save a mesh");
  mesh->add_option("--gen", gen, "square | lshape | square-mixed")->default_val("square");
  mesh->add_option("--n", mesh_n, "cells per side")->default_val(8);
  mesh->add_option("--refine", mesh_refine, "red refinements to apply")->default_val(0);
  mesh->add_option("--out", out, "mesh path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (mesh->parsed()) {
      if (mesh_refine < 0) throw std::invalid_argument("mesh: --refine must be >= 0");
      divfree::MeshPtr m;
      if (gen == "square") m = divfree::generate_square(mesh_n);
      else if (gen == "lshape") m = divfree::generate_lshape(mesh_n);
      else if (gen == "square-mixed") m = divfree::generate_square_mixed(mesh_n);
      else throw std::invalid_argument("mesh: unknown generator " + gen);
      for (int i = 0; i < mesh_refine; ++i) m = divfree::red_refine(m);
      divfree::save_mesh(*m, out);
      std::cout << "wrote " << out << ": " << m->n_vertices() << " vertices, " << m->n_edges()
                << " edges, " << m->n_triangles() << " triangles\n";
      return 0;
    }

    divfree::StudyReport rep;
    if (conv->parsed()) {
      rep = divfree::run_convergence_study(cfg);
      divfree::emit(rep, format_for(format, out, divfree::ReportFormat::csv), out);
    } else {
      rep = divfree::run_precond_study(cfg);
      divfree::emit(rep, format_for(format, out, divfree::ReportFormat::json), out);
    }
    std::cout << divfree::to_markdown(rep);
    if (!rep.failure.empty()) {
      std::cerr << "study failed: " << rep.failure << "\n";
      return 3;
    }
    std::cout << "wrote " << out << "\n";
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

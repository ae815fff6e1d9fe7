// sdiag — decide and compute s-diagonalizations of shift-preserving
// operators on finitely generated shift-invariant spaces, sampled on a
// uniform grid over the frequency torus.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sdiag/pipeline.hpp"

namespace {

struct CommonArgs {
  std::string problem_path;
  int grid = 0;
  std::optional<double> margin, tol_rank, tol_cluster;
  std::string out_dir;
};

void attach_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("problem", a.problem_path, "problem file to load")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--grid", a.grid, "override the samples per dimension");
  cmd->add_option("--margin", a.margin, "angle margin for the YES decision");
  cmd->add_option("--tol-rank", a.tol_rank, "relative rank threshold");
  cmd->add_option("--tol-cluster", a.tol_cluster, "eigenvalue clustering width");
  cmd->add_option("--out", a.out_dir, "directory for report and CSV dumps");
}

sdiag::PipelineOptions to_options(const CommonArgs& a) {
  sdiag::PipelineOptions o;
  o.grid_override = a.grid;
  o.margin = a.margin;
  o.rank_tol = a.tol_rank;
  o.cluster_tol = a.tol_cluster;
  o.out_dir = a.out_dir;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"s-diagonalization of shift-preserving operators"};
  app.require_subcommand(1);

  CommonArgs analyze_args, diag_args, verify_args, synth_args;
  std::string dec_path;

  CLI::App* analyze = app.add_subcommand(
      "analyze", "decide s-diagonalizability and print the report");
  attach_common(analyze, analyze_args);

  CLI::App* diagonalize = app.add_subcommand(
      "diagonalize", "compute the decomposition and save the artifact");
  attach_common(diagonalize, diag_args);

  CLI::App* verify = app.add_subcommand(
      "verify", "re-check a decomposition against the operator");
  attach_common(verify, verify_args);
  verify->add_option("--dec", dec_path, "saved decomposition to verify")
      ->check(CLI::ExistingFile);

  CLI::App* synthesize = app.add_subcommand(
      "synthesize", "rebuild the operator from its eigenpairs");
  attach_common(synthesize, synth_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage and input errors exit 1
  }

  try {
    sdiag::PipelineResult res;
    if (analyze->parsed()) {
      auto p = sdiag::parse_problem_file(analyze_args.problem_path);
      res = sdiag::cmd_analyze(p, to_options(analyze_args));
    } else if (diagonalize->parsed()) {
      auto p = sdiag::parse_problem_file(diag_args.problem_path);
      res = sdiag::cmd_diagonalize(p, to_options(diag_args));
    } else if (verify->parsed()) {
      auto p = sdiag::parse_problem_file(verify_args.problem_path);
      res = sdiag::cmd_verify(p, to_options(verify_args), dec_path);
    } else {
      auto p = sdiag::parse_problem_file(synth_args.problem_path);
      res = sdiag::cmd_synthesize(p, to_options(synth_args));
    }
    std::cout << res.report.render();
    return res.exit_code;
  } catch (const sdiag::parse_error& e) {
    std::cerr << "sdiag: parse error at line " << e.line << ": " << e.what()
              << '\n';
    return 1;
  } catch (const sdiag::error& e) {
    std::cerr << "sdiag: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "sdiag: internal error: " << e.what() << '\n';
    return 1;
  }
}

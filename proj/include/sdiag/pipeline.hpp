#pragma once

#include "sdiag/problem.hpp"
#include "sdiag/report.hpp"
#include "sdiag/signal.hpp"

namespace sdiag {

// Project a coefficient vector onto one eigenspace of the decomposition,
// fiberwise, and recover coefficients on the out_radius window. Orthogonal
// projection inside J(omega) by default; oblique = true uses the projection
// along the other eigenspaces (sum of projections = identity).
CoefficientVector project_to_eigenpair(const RangeOperatorField& R,
                                       const SDiagonalization& dec, int j,
                                       const CoefficientVector& f, int out_radius,
                                       bool oblique = false);

struct PipelineOptions {
  int grid_override = 0;
  std::optional<double> margin, rank_tol, cluster_tol;
  std::string out_dir;  // when set: reports, CSV dumps, decomposition artifact
};

struct PipelineResult {
  Report report;
  int exit_code;  // 0 yes/success, 2 no verdict
  std::optional<Decision> decision;
  std::optional<ProblemSetting> setting;
};

// analyze: frame + operator diagnostics and the decision, nothing written
// beyond the report. diagonalize: decision + decomposition artifact and CSV
// dumps when out_dir is set. verify: structural + signal-level re-check (of a
// stored artifact when given, else of a fresh decomposition). synthesize:
// spectral or oblique reconstruction residuals.
PipelineResult cmd_analyze(const ProblemFile& p, const PipelineOptions& o);
PipelineResult cmd_diagonalize(const ProblemFile& p, const PipelineOptions& o);
PipelineResult cmd_verify(const ProblemFile& p, const PipelineOptions& o,
                          const std::string& decomposition_path = "");
PipelineResult cmd_synthesize(const ProblemFile& p, const PipelineOptions& o);

// Decomposition artifact, line oriented.
void save_decomposition(std::ostream& out, const SDiagonalization& dec);
SDiagonalization load_decomposition(std::istream& in,
                                    std::shared_ptr<const FiberFrame> frame);

// Plot data: "cell,omega[,omega2],..." CSV dumps.
void write_csv_dumps(const std::filesystem::path& dir, const ProblemSetting& s,
                     const Decision& d);

}  // namespace sdiag

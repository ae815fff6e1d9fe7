#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "sdiag/decompose.hpp"

namespace sdiag {

// Sparse trig polynomial: lattice point -> coefficient, canonically ordered.
using TrigPoly = std::map<std::array<int, 2>, cplx>;

// One generator: either per-component trig polynomials (component lattice
// point -> polynomial) or a path to a raw per-cell fiber table.
struct GeneratorSpec {
  std::map<std::array<int, 2>, TrigPoly> components;
  std::string table_path;  // non-empty <=> raw table form
};

// Parsed problem file. The operator block defines the action on generators:
// R(T phi_j) = sum_i m_{i,j}(omega) T phi_i.
struct ProblemFile {
  std::string name;
  int d = 1;
  int n_per_dim = 0;
  int window_radius = 0;
  std::optional<double> tol_rank, tol_cluster, tol_margin, tol_lowerbound;
  std::vector<GeneratorSpec> generators;
  std::map<std::pair<int, int>, TrigPoly> op;  // 1-based (i, j)
  std::filesystem::path base_dir;              // for resolving table paths

  bool operator==(const ProblemFile& o) const;
};

// Line-oriented text format; referenced table paths must exist.
ProblemFile parse_problem(std::istream& in, const std::filesystem::path& base_dir);
ProblemFile parse_problem_file(const std::filesystem::path& path);
std::string serialize_problem(const ProblemFile& p);

// Largest trig degree appearing in the operator block.
int operator_degree(const ProblemFile& p);

// Everything the pipeline needs, realized on a grid.
struct ProblemSetting {
  FrequencyGrid grid;
  LatticeWindow window;
  std::shared_ptr<const GeneratorSet> gens;
  std::shared_ptr<const FiberFrame> frame;
  std::shared_ptr<const RangeOperatorField> op;
  DecisionOptions opts;
};

// Realize the problem. grid_override > 0 replaces n_per_dim (rejected when a
// generator is bound to a raw table: those are grid-bound).
ProblemSetting build_problem(const ProblemFile& p, int grid_override = 0);

}  // namespace sdiag

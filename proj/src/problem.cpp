#include "sdiag/problem.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace sdiag {

bool ProblemFile::operator==(const ProblemFile& o) const {
  auto tie = [](const ProblemFile& p) {
    return std::tie(p.name, p.d, p.n_per_dim, p.window_radius, p.tol_rank,
                    p.tol_cluster, p.tol_margin, p.tol_lowerbound);
  };
  if (tie(*this) != tie(o) || op != o.op ||
      generators.size() != o.generators.size())
    return false;
  for (std::size_t i = 0; i < generators.size(); ++i)
    if (generators[i].components != o.generators[i].components ||
        generators[i].table_path != o.generators[i].table_path)
      return false;
  return true;
}

namespace {

std::array<int, 2> read_lattice(std::istringstream& is, int d, std::size_t lineno,
                                const char* what) {
  std::array<int, 2> k{0, 0};
  for (int a = 0; a < d; ++a)
    if (!(is >> k[a]))
      throw parse_error(std::string(what) + " needs " + std::to_string(d) +
                            " lattice coordinates",
                        lineno);
  return k;
}

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

ProblemFile parse_problem(std::istream& in, const std::filesystem::path& base_dir) {
  ProblemFile p;
  p.base_dir = base_dir;
  std::string line;
  std::size_t lineno = 0;
  bool magic_seen = false, grid_seen = false, window_seen = false;
  int declared_gens = 0;

  while (std::getline(in, line)) {
    ++lineno;
    std::string stripped = line.substr(0, line.find('#'));
    std::istringstream is(stripped);
    std::string key;
    if (!(is >> key)) continue;

    if (!magic_seen) {
      if (key != "sdiag-problem")
        throw parse_error("file must start with 'sdiag-problem 1'", lineno);
      int ver;
      if (!(is >> ver) || ver != 1)
        throw parse_error("unsupported problem format version", lineno);
      magic_seen = true;
      continue;
    }

    if (key == "name") {
      if (!(is >> p.name)) throw parse_error("name needs a value", lineno);
    } else if (key == "grid") {
      if (!(is >> p.d >> p.n_per_dim))
        throw parse_error("grid needs: d n_per_dim", lineno);
      if (p.d != 1 && p.d != 2) throw parse_error("grid dimension must be 1 or 2", lineno);
      if (p.n_per_dim < 1) throw parse_error("grid needs n_per_dim >= 1", lineno);
      grid_seen = true;
    } else if (key == "window") {
      if (!(is >> p.window_radius) || p.window_radius < 0)
        throw parse_error("window needs a radius >= 0", lineno);
      window_seen = true;
    } else if (key == "tol") {
      std::string which;
      double val;
      if (!(is >> which >> val)) throw parse_error("tol needs: name value", lineno);
      if (which == "rank")
        p.tol_rank = val;
      else if (which == "cluster")
        p.tol_cluster = val;
      else if (which == "margin")
        p.tol_margin = val;
      else if (which == "lowerbound")
        p.tol_lowerbound = val;
      else
        throw parse_error("unknown tolerance '" + which + "'", lineno);
    } else if (key == "generators") {
      if (!(is >> declared_gens) || declared_gens < 1)
        throw parse_error("generators needs a count >= 1", lineno);
      p.generators.assign(static_cast<std::size_t>(declared_gens), GeneratorSpec{});
    } else if (key == "gen") {
      if (!grid_seen) throw parse_error("gen before grid", lineno);
      int i;
      if (!(is >> i) || i < 1 || i > declared_gens)
        throw parse_error("gen index out of range", lineno);
      std::string form;
      if (!(is >> form)) throw parse_error("gen needs 'comp' or 'file'", lineno);
      GeneratorSpec& gs = p.generators[static_cast<std::size_t>(i - 1)];
      if (form == "comp") {
        auto k = read_lattice(is, p.d, lineno, "gen comp");
        auto m = read_lattice(is, p.d, lineno, "gen term");
        double re, im;
        if (!(is >> re >> im)) throw parse_error("gen term needs re im", lineno);
        if (!gs.table_path.empty())
          throw parse_error("generator mixes comp and file forms", lineno);
        gs.components[k][m] += cplx(re, im);
      } else if (form == "file") {
        std::string path;
        if (!(is >> path)) throw parse_error("gen file needs a path", lineno);
        if (!gs.components.empty())
          throw parse_error("generator mixes comp and file forms", lineno);
        gs.table_path = path;
        if (!std::filesystem::exists(base_dir / path))
          throw parse_error("generator table '" + path + "' does not exist", lineno);
      } else {
        throw parse_error("gen needs 'comp' or 'file'", lineno);
      }
    } else if (key == "op") {
      if (!grid_seen) throw parse_error("op before grid", lineno);
      int i, j;
      if (!(is >> i >> j) || i < 1 || j < 1 || i > declared_gens || j > declared_gens)
        throw parse_error("op indices out of range", lineno);
      auto m = read_lattice(is, p.d, lineno, "op term");
      double re, im;
      if (!(is >> re >> im)) throw parse_error("op term needs re im", lineno);
      p.op[{i, j}][m] += cplx(re, im);
    } else if (key == "end") {
      break;
    } else {
      throw parse_error("unknown directive '" + key + "'", lineno);
    }
  }
  if (!magic_seen) throw parse_error("empty problem file", lineno);
  if (!grid_seen) throw parse_error("problem file lacks a grid line", lineno);
  if (!window_seen) throw parse_error("problem file lacks a window line", lineno);
  if (p.generators.empty()) throw parse_error("problem file lacks generators", lineno);
  return p;
}

ProblemFile parse_problem_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw error("cannot open problem file " + path.string());
  ProblemFile p = parse_problem(in, path.parent_path());
  if (p.name.empty()) p.name = path.stem().string();
  return p;
}

std::string serialize_problem(const ProblemFile& p) {
  std::ostringstream out;
  out << "sdiag-problem 1\n";
  if (!p.name.empty()) out << "name " << p.name << "\n";
  out << "grid " << p.d << ' ' << p.n_per_dim << "\n";
  out << "window " << p.window_radius << "\n";
  if (p.tol_rank) out << "tol rank " << fmt_double(*p.tol_rank) << "\n";
  if (p.tol_cluster) out << "tol cluster " << fmt_double(*p.tol_cluster) << "\n";
  if (p.tol_margin) out << "tol margin " << fmt_double(*p.tol_margin) << "\n";
  if (p.tol_lowerbound)
    out << "tol lowerbound " << fmt_double(*p.tol_lowerbound) << "\n";
  out << "generators " << p.generators.size() << "\n";
  auto put_lattice = [&](const std::array<int, 2>& k) {
    out << ' ' << k[0];
    if (p.d == 2) out << ' ' << k[1];
  };
  for (std::size_t i = 0; i < p.generators.size(); ++i) {
    const GeneratorSpec& gs = p.generators[i];
    if (!gs.table_path.empty()) {
      out << "gen " << (i + 1) << " file " << gs.table_path << "\n";
      continue;
    }
    for (const auto& [k, poly] : gs.components)
      for (const auto& [m, c] : poly) {
        out << "gen " << (i + 1) << " comp";
        put_lattice(k);
        put_lattice(m);
        out << ' ' << fmt_double(c.real()) << ' ' << fmt_double(c.imag()) << "\n";
      }
  }
  for (const auto& [ij, poly] : p.op)
    for (const auto& [m, c] : poly) {
      out << "op " << ij.first << ' ' << ij.second;
      put_lattice(m);
      out << ' ' << fmt_double(c.real()) << ' ' << fmt_double(c.imag()) << "\n";
    }
  out << "end\n";
  return out.str();
}

int operator_degree(const ProblemFile& p) {
  int deg = 0;
  for (const auto& [ij, poly] : p.op)
    for (const auto& [m, c] : poly)
      deg = std::max({deg, std::abs(m[0]), p.d == 2 ? std::abs(m[1]) : 0});
  return deg;
}

namespace {

GeneratorSet load_generator_tables(const ProblemFile& p, const FrequencyGrid& grid,
                                   const LatticeWindow& window) {
  const int l = static_cast<int>(p.generators.size());
  std::vector<Eigen::MatrixXcd> G(
      grid.cells(),
      Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(window.size()), l));
  for (int i = 0; i < l; ++i) {
    const GeneratorSpec& gs = p.generators[static_cast<std::size_t>(i)];
    if (gs.table_path.empty()) {
      for (const auto& [k, poly] : gs.components) {
        std::size_t row = window.index(k);
        if (row == LatticeWindow::npos)
          throw error("generator component lies outside the window");
        for (std::size_t c = 0; c < grid.cells(); ++c) {
          cplx v(0.0, 0.0);
          auto w = grid.center(c);
          for (const auto& [m, coef] : poly)
            v += coef * unit_character(w, m, p.d);
          G[c](static_cast<Eigen::Index>(row), i) = v;
        }
      }
      continue;
    }
    std::ifstream in(p.base_dir / gs.table_path);
    if (!in) throw error("cannot open generator table " + gs.table_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string stripped = line.substr(0, line.find('#'));
      std::istringstream is(stripped);
      long cell;
      if (!(is >> cell)) continue;
      if (cell < 0 || static_cast<std::size_t>(cell) >= grid.cells())
        throw parse_error("generator table cell index out of range (table is "
                          "bound to the declared grid)",
                          lineno);
      std::array<int, 2> k{0, 0};
      for (int a = 0; a < p.d; ++a)
        if (!(is >> k[a]))
          throw parse_error("generator table line needs lattice coordinates", lineno);
      double re, im;
      if (!(is >> re >> im))
        throw parse_error("generator table line needs re im", lineno);
      std::size_t row = window.index(k);
      if (row == LatticeWindow::npos)
        throw parse_error("generator table component outside the window", lineno);
      G[static_cast<std::size_t>(cell)](static_cast<Eigen::Index>(row), i) =
          cplx(re, im);
    }
  }
  return GeneratorSet(grid, window, std::move(G));
}

}  // namespace

ProblemSetting build_problem(const ProblemFile& p, int grid_override) {
  int n = p.n_per_dim;
  if (grid_override > 0) {
    for (const auto& gs : p.generators)
      if (!gs.table_path.empty())
        throw error("cannot override the grid: generator tables are grid-bound");
    n = grid_override;
  }
  FrequencyGrid grid(p.d, n);
  LatticeWindow window(p.d, p.window_radius);

  DecisionOptions opts;
  if (p.tol_rank) opts.rank_tol = *p.tol_rank;
  if (p.tol_cluster) opts.cluster_tol = *p.tol_cluster;
  if (p.tol_margin) opts.angle_margin = *p.tol_margin;

  auto gens =
      std::make_shared<const GeneratorSet>(load_generator_tables(p, grid, window));
  auto frame = std::make_shared<const FiberFrame>(
      frame_from_generators(gens, opts.rank_tol));

  const int l = static_cast<int>(p.generators.size());
  std::vector<Eigen::MatrixXcd> entries(grid.cells());
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(l, l);
    auto w = grid.center(c);
    for (const auto& [ij, poly] : p.op) {
      cplx v(0.0, 0.0);
      for (const auto& [m, coef] : poly) v += coef * unit_character(w, m, p.d);
      M(ij.first - 1, ij.second - 1) = v;
    }
    entries[c] = std::move(M);
  }
  FiberAction action = action_generator_table(
      gens, frame, [entries](std::size_t c) { return entries[c]; });
  auto op = std::make_shared<const RangeOperatorField>(matrix_rep(action, frame));

  return ProblemSetting{grid, window, std::move(gens), std::move(frame),
                        std::move(op), opts};
}

}  // namespace sdiag

#include "sdiag/fiberize.hpp"

#include <algorithm>

#include <Eigen/SVD>

namespace sdiag {

FiberField::FiberField(const FrequencyGrid& g, const LatticeWindow& w,
                       std::vector<Eigen::VectorXcd> vals)
    : grid(g), window(w), v(std::move(vals)) {
  if (v.size() != grid.cells()) throw error("fiber field size does not match grid");
  for (const auto& x : v)
    if (static_cast<std::size_t>(x.size()) != window.size())
      throw error("fiber length does not match window");
}

GeneratorSet::GeneratorSet(const FrequencyGrid& g, const LatticeWindow& w,
                           std::vector<Eigen::MatrixXcd> fibers)
    : grid(g), window(w), count(0), G(std::move(fibers)) {
  if (G.size() != grid.cells()) throw error("generator set size does not match grid");
  if (G.empty()) throw error("generator set needs at least one cell");
  count = static_cast<int>(G[0].cols());
  for (const auto& m : G) {
    if (static_cast<std::size_t>(m.rows()) != window.size())
      throw error("generator fiber length does not match window");
    if (static_cast<int>(m.cols()) != count)
      throw error("generator count varies across cells");
  }
  if (count < 1) throw error("generator set needs at least one generator");
}

FiberField fiberize_signal(const FourierEvaluator& fhat, const FrequencyGrid& grid,
                           const LatticeWindow& window) {
  if (grid.dim() != window.dim())
    throw error("window/grid mismatch: dimensions differ");
  std::vector<Eigen::VectorXcd> v(grid.cells());
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    auto w = grid.center(c);
    Eigen::VectorXcd fiber(static_cast<Eigen::Index>(window.size()));
    for (std::size_t i = 0; i < window.size(); ++i) {
      auto k = window.point(i);
      std::array<double, 2> xi{w[0] + k[0], w[1] + (grid.dim() == 2 ? k[1] : 0)};
      fiber[static_cast<Eigen::Index>(i)] = fhat(xi);
    }
    v[c] = std::move(fiber);
  }
  return FiberField(grid, window, std::move(v));
}

FiberField fiberize_signal(const std::vector<ComplexField>& samples,
                           const FrequencyGrid& grid, const LatticeWindow& window) {
  if (grid.dim() != window.dim())
    throw error("window/grid mismatch: dimensions differ");
  if (samples.size() != window.size())
    throw error("window/grid mismatch: one sample field per lattice point required");
  for (const auto& s : samples)
    if (s.grid != grid) throw error("window/grid mismatch: sample grid differs");
  std::vector<Eigen::VectorXcd> v(grid.cells());
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    Eigen::VectorXcd fiber(static_cast<Eigen::Index>(window.size()));
    for (std::size_t i = 0; i < window.size(); ++i)
      fiber[static_cast<Eigen::Index>(i)] = samples[i](c);
    v[c] = std::move(fiber);
  }
  return FiberField(grid, window, std::move(v));
}

GeneratorSet generators_from_symbols(
    const FrequencyGrid& grid, const LatticeWindow& window,
    const std::vector<std::vector<std::pair<std::array<int, 2>, Sequence>>>& comps) {
  const int l = static_cast<int>(comps.size());
  if (l < 1) throw error("generator set needs at least one generator");
  std::vector<Eigen::MatrixXcd> G(
      grid.cells(),
      Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(window.size()), l));
  for (int i = 0; i < l; ++i) {
    for (const auto& [k, poly] : comps[static_cast<std::size_t>(i)]) {
      std::size_t row = window.index(k);
      if (row == LatticeWindow::npos)
        throw error("generator component lies outside the window");
      for (std::size_t c = 0; c < grid.cells(); ++c)
        G[c](static_cast<Eigen::Index>(row), i) = eval_symbol_at(poly, grid.center(c));
    }
  }
  return GeneratorSet(grid, window, std::move(G));
}

namespace {

// Residual of column v against the orthonormal columns of Q, re-orthogonalized.
Eigen::VectorXcd mgs_residual(const Eigen::MatrixXcd& Q, Eigen::VectorXcd v) {
  if (Q.cols() > 0) {
    v -= Q * (Q.adjoint() * v);
    v -= Q * (Q.adjoint() * v);
  }
  return v;
}

}  // namespace

FiberFrame frame_from_generators(std::shared_ptr<const GeneratorSet> gens,
                                 double rank_tol) {
  const GeneratorSet& g = *gens;
  const std::size_t N = g.grid.cells();
  const int l = g.count;
  const Eigen::Index M = static_cast<Eigen::Index>(g.window.size());

  std::vector<Eigen::MatrixXcd> basis(N);
  std::vector<int> dim(N, 0);
  std::vector<std::vector<int>> picked(N);

  for (std::size_t c = 0; c < N; ++c) {
    const Eigen::MatrixXcd& Gc = g.G[c];
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(Gc);
    const auto& sv = svd.singularValues();
    double top = sv.size() > 0 ? sv[0] : 0.0;
    int rank = 0;
    if (top > 1e-300)
      for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] >= rank_tol * top) ++rank;

    Eigen::MatrixXcd Q(M, 0);
    std::vector<int> cols;
    const double thr = rank_tol * top;
    for (int j = 0; j < l && static_cast<int>(cols.size()) < rank; ++j) {
      Eigen::VectorXcd r = mgs_residual(Q, Gc.col(j));
      double nr = r.norm();
      if (nr >= thr && nr > 1e-300) {
        Q.conservativeResize(M, Q.cols() + 1);
        Q.col(Q.cols() - 1) = r / nr;
        cols.push_back(j);
      }
    }
    // Greedy sweep short of the SVD rank: top up by largest residual, ties by
    // generator index. Keeps the frame deterministic on borderline cells.
    while (static_cast<int>(cols.size()) < rank) {
      int best = -1;
      double best_nr = 0.0;
      Eigen::VectorXcd best_r;
      for (int j = 0; j < l; ++j) {
        if (std::find(cols.begin(), cols.end(), j) != cols.end()) continue;
        Eigen::VectorXcd r = mgs_residual(Q, Gc.col(j));
        double nr = r.norm();
        if (nr > best_nr) {
          best_nr = nr;
          best = j;
          best_r = std::move(r);
        }
      }
      if (best < 0 || best_nr <= 1e-300) break;
      Q.conservativeResize(M, Q.cols() + 1);
      Q.col(Q.cols() - 1) = best_r / best_nr;
      cols.push_back(best);
      std::sort(cols.begin(), cols.end());
    }

    dim[c] = static_cast<int>(Q.cols());
    basis[c] = std::move(Q);
    picked[c] = std::move(cols);
  }

  std::vector<MeasurableMask> rank_masks;
  rank_masks.reserve(static_cast<std::size_t>(l) + 1);
  for (int n = 0; n <= l; ++n) {
    std::vector<std::uint8_t> bits(N, 0);
    for (std::size_t c = 0; c < N; ++c)
      if (dim[c] == n) bits[c] = 1;
    rank_masks.emplace_back(g.grid, std::move(bits));
  }

  int space_dim = 0;
  for (std::size_t c = 0; c < N; ++c) space_dim = std::max(space_dim, dim[c]);

  FiberFrame frame{g.grid,
                   g.window,
                   std::move(gens),
                   std::move(basis),
                   std::move(dim),
                   std::move(picked),
                   std::move(rank_masks),
                   space_dim,
                   MeasurableMask(g.grid, true),
                   rank_tol};
  frame.support = frame.rank_masks[0].complement();
  return frame;
}

FiberField project_onto_fiber(const FiberFrame& frame, const FiberField& f) {
  if (f.grid != frame.grid || f.window != frame.window)
    throw error("window/grid mismatch between frame and fiber field");
  std::vector<Eigen::VectorXcd> out(f.v.size());
  for (std::size_t c = 0; c < f.v.size(); ++c) {
    const Eigen::MatrixXcd& B = frame.basis[c];
    if (B.cols() == 0)
      out[c] = Eigen::VectorXcd::Zero(f.v[c].size());
    else
      out[c] = B * (B.adjoint() * f.v[c]);
  }
  return FiberField(f.grid, f.window, std::move(out));
}

double fiber_mass(const FiberField& f) {
  double s = 0.0;
  for (const auto& x : f.v) s += x.squaredNorm();
  return s / static_cast<double>(f.grid.cells());
}

}  // namespace sdiag

#include "sdiag/lattice.hpp"

#include <cmath>
#include <cstdlib>

namespace sdiag {

LatticeWindow::LatticeWindow(int d, int radius) : d_(d), K_(radius) {
  if (d != 1 && d != 2) throw error("window dimension must be 1 or 2");
  if (radius < 0) throw error("window radius must be >= 0");
  std::size_t side = static_cast<std::size_t>(2 * K_ + 1);
  size_ = d == 1 ? side : side * side;
}

std::array<int, 2> LatticeWindow::point(std::size_t i) const {
  int side = 2 * K_ + 1;
  if (d_ == 1) return {static_cast<int>(i) - K_, 0};
  return {static_cast<int>(i / static_cast<std::size_t>(side)) - K_,
          static_cast<int>(i % static_cast<std::size_t>(side)) - K_};
}

bool LatticeWindow::inside(const std::array<int, 2>& k) const {
  for (int a = 0; a < d_; ++a)
    if (std::abs(k[a]) > K_) return false;
  return true;
}

std::size_t LatticeWindow::index(const std::array<int, 2>& k) const {
  if (!inside(k)) return npos;
  std::size_t side = static_cast<std::size_t>(2 * K_ + 1);
  if (d_ == 1) return static_cast<std::size_t>(k[0] + K_);
  return static_cast<std::size_t>(k[0] + K_) * side + static_cast<std::size_t>(k[1] + K_);
}

Sequence::Sequence(const LatticeWindow& w, Eigen::VectorXcd vals)
    : window(w), a(std::move(vals)) {
  if (static_cast<std::size_t>(a.size()) != window.size())
    throw error("sequence size does not match window");
}

Sequence::Sequence(const LatticeWindow& w)
    : window(w), a(Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(w.size()))) {}

cplx Sequence::at(const std::array<int, 2>& k) const {
  std::size_t i = window.index(k);
  if (i == LatticeWindow::npos) return cplx(0.0, 0.0);
  return a[static_cast<Eigen::Index>(i)];
}

cplx unit_character(const std::array<double, 2>& omega, const std::array<int, 2>& k,
                    int d) {
  double phase = omega[0] * k[0];
  if (d == 2) phase += omega[1] * k[1];
  return std::polar(1.0, -2.0 * M_PI * phase);
}

cplx eval_symbol_at(const Sequence& a, const std::array<double, 2>& omega) {
  cplx s(0.0, 0.0);
  for (std::size_t i = 0; i < a.window.size(); ++i)
    s += a.a[static_cast<Eigen::Index>(i)] *
         unit_character(omega, a.window.point(i), a.window.dim());
  return s;
}

ComplexField eval_symbol(const Sequence& a, const FrequencyGrid& grid) {
  if (grid.dim() != a.window.dim()) throw error("symbol/grid dimension mismatch");
  Eigen::VectorXcd v(static_cast<Eigen::Index>(grid.cells()));
  for (std::size_t c = 0; c < grid.cells(); ++c)
    v[static_cast<Eigen::Index>(c)] = eval_symbol_at(a, grid.center(c));
  return ComplexField(grid, std::move(v));
}

Sequence sample_to_sequence(const ComplexField& f, int radius) {
  const FrequencyGrid& grid = f.grid;
  if (2 * radius + 1 > grid.n_per_dim())
    throw error("sample window exceeds the aliasing limit of the grid");
  LatticeWindow w(grid.dim(), radius);
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(w.size()));
  const double inv_n = 1.0 / static_cast<double>(grid.cells());
  for (std::size_t i = 0; i < w.size(); ++i) {
    auto k = w.point(i);
    cplx s(0.0, 0.0);
    for (std::size_t c = 0; c < grid.cells(); ++c)
      s += f(c) * std::conj(unit_character(grid.center(c), k, grid.dim()));
    out[static_cast<Eigen::Index>(i)] = s * inv_n;
  }
  return Sequence(w, std::move(out));
}

Sequence shift_sequence(const Sequence& a, const std::array<int, 2>& k0) {
  int grow = std::abs(k0[0]);
  if (a.window.dim() == 2) grow = std::max(grow, std::abs(k0[1]));
  LatticeWindow w(a.window.dim(), a.window.radius() + grow);
  Sequence out(w);
  for (std::size_t i = 0; i < a.window.size(); ++i) {
    auto k = a.window.point(i);
    std::array<int, 2> kk{k[0] + k0[0], k[1] + (a.window.dim() == 2 ? k0[1] : 0)};
    out.a[static_cast<Eigen::Index>(w.index(kk))] = a.a[static_cast<Eigen::Index>(i)];
  }
  return out;
}

double sequence_norm(const Sequence& a) { return a.a.norm(); }

}  // namespace sdiag

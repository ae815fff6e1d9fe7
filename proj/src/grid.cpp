#include "sdiag/grid.hpp"

#include <algorithm>
#include <numeric>

namespace sdiag {

FrequencyGrid::FrequencyGrid(int d, int n_per_dim) : d_(d), n_(n_per_dim) {
  if (d != 1 && d != 2) throw error("grid dimension must be 1 or 2");
  if (n_per_dim < 1) throw error("grid needs at least one cell per axis");
  cells_ = d == 1 ? static_cast<std::size_t>(n_)
                  : static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_);
}

std::array<double, 2> FrequencyGrid::center(std::size_t c) const {
  auto t = coords(c);
  std::array<double, 2> w{0.0, 0.0};
  for (int a = 0; a < d_; ++a) w[a] = (t[a] + 0.5) / n_;
  return w;
}

std::array<int, 2> FrequencyGrid::coords(std::size_t c) const {
  if (d_ == 1) return {static_cast<int>(c), 0};
  return {static_cast<int>(c / static_cast<std::size_t>(n_)),
          static_cast<int>(c % static_cast<std::size_t>(n_))};
}

std::size_t FrequencyGrid::index(const std::array<int, 2>& t) const {
  if (d_ == 1) return static_cast<std::size_t>(t[0]);
  return static_cast<std::size_t>(t[0]) * static_cast<std::size_t>(n_) +
         static_cast<std::size_t>(t[1]);
}

MeasurableMask::MeasurableMask(const FrequencyGrid& grid, bool full)
    : grid_(grid), bits_(grid.cells(), full ? 1 : 0) {}

MeasurableMask::MeasurableMask(const FrequencyGrid& grid, std::vector<std::uint8_t> bits)
    : grid_(grid), bits_(std::move(bits)) {
  if (bits_.size() != grid_.cells()) throw error("mask size does not match grid");
}

std::size_t MeasurableMask::count() const {
  return static_cast<std::size_t>(std::count_if(
      bits_.begin(), bits_.end(), [](std::uint8_t b) { return b != 0; }));
}

MeasurableMask MeasurableMask::complement() const {
  std::vector<std::uint8_t> b(bits_.size());
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = bits_[i] ? 0 : 1;
  return MeasurableMask(grid_, std::move(b));
}

MeasurableMask MeasurableMask::set(std::size_t c, bool v) const {
  std::vector<std::uint8_t> b = bits_;
  b[c] = v ? 1 : 0;
  return MeasurableMask(grid_, std::move(b));
}

bool MeasurableMask::subset_of(const MeasurableMask& o) const {
  if (grid_ != o.grid_) throw error("mask grids differ");
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i] && !o.bits_[i]) return false;
  return true;
}

static void check_same_grid(const MeasurableMask& a, const MeasurableMask& b) {
  if (a.grid() != b.grid()) throw error("mask grids differ");
}

MeasurableMask mask_union(const MeasurableMask& a, const MeasurableMask& b) {
  check_same_grid(a, b);
  std::vector<std::uint8_t> r(a.bits().size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = (a.bits()[i] | b.bits()[i]);
  return MeasurableMask(a.grid(), std::move(r));
}

MeasurableMask mask_intersect(const MeasurableMask& a, const MeasurableMask& b) {
  check_same_grid(a, b);
  std::vector<std::uint8_t> r(a.bits().size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = (a.bits()[i] & b.bits()[i]);
  return MeasurableMask(a.grid(), std::move(r));
}

MeasurableMask mask_difference(const MeasurableMask& a, const MeasurableMask& b) {
  check_same_grid(a, b);
  std::vector<std::uint8_t> r(a.bits().size());
  for (std::size_t i = 0; i < r.size(); ++i)
    r[i] = (a.bits()[i] && !b.bits()[i]) ? 1 : 0;
  return MeasurableMask(a.grid(), std::move(r));
}

double mask_measure(const MeasurableMask& a) {
  return static_cast<double>(a.count()) / static_cast<double>(a.grid().cells());
}

RealField::RealField(const FrequencyGrid& g, Eigen::VectorXd vals)
    : grid(g), v(std::move(vals)) {
  if (static_cast<std::size_t>(v.size()) != grid.cells())
    throw error("field size does not match grid");
}

ComplexField::ComplexField(const FrequencyGrid& g, Eigen::VectorXcd vals)
    : grid(g), v(std::move(vals)) {
  if (static_cast<std::size_t>(v.size()) != grid.cells())
    throw error("field size does not match grid");
}

MatrixField::MatrixField(const FrequencyGrid& g, std::vector<Eigen::MatrixXcd> mats)
    : grid(g), m(std::move(mats)) {
  if (m.size() != grid.cells()) throw error("field size does not match grid");
}

double ess_sup(const RealField& f, const MeasurableMask& A) {
  if (f.grid != A.grid()) throw error("field and mask grids differ");
  bool seen = false;
  double s = 0.0;
  for (std::size_t c = 0; c < f.grid.cells(); ++c) {
    if (!A.contains(c)) continue;
    double x = f(c);
    if (!seen || x > s) s = x;
    seen = true;
  }
  if (!seen) throw null_set_error("ess-sup over null set");
  return s;
}

double ess_sup(const RealField& f) { return ess_sup(f, MeasurableMask(f.grid, true)); }

}  // namespace sdiag

#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "sdiag/errors.hpp"

namespace sdiag {

using cplx = std::complex<double>;

// Uniform grid of cells over the frequency torus [0,1)^d, d in {1,2}.
// Cells are half-open boxes of side 1/n; the sample point of a cell is its
// center (t+0.5)/n per axis. Cell indices are row-major in the first axis.
// Immutable after construction.
class FrequencyGrid {
 public:
  FrequencyGrid(int d, int n_per_dim);

  int dim() const { return d_; }
  int n_per_dim() const { return n_; }
  std::size_t cells() const { return cells_; }

  // Center of cell c, one coordinate per axis (second coordinate 0 when d==1).
  std::array<double, 2> center(std::size_t c) const;

  // Multi-index of cell c.
  std::array<int, 2> coords(std::size_t c) const;
  std::size_t index(const std::array<int, 2>& t) const;

  bool operator==(const FrequencyGrid& o) const { return d_ == o.d_ && n_ == o.n_; }
  bool operator!=(const FrequencyGrid& o) const { return !(*this == o); }

 private:
  int d_;
  int n_;
  std::size_t cells_;
};

// Measurable set surrogate: a set of whole cells. Measure = cell count / total.
class MeasurableMask {
 public:
  explicit MeasurableMask(const FrequencyGrid& grid, bool full = false);
  MeasurableMask(const FrequencyGrid& grid, std::vector<std::uint8_t> bits);

  const FrequencyGrid& grid() const { return grid_; }
  bool contains(std::size_t c) const { return bits_[c] != 0; }
  std::size_t count() const;
  bool empty() const { return count() == 0; }

  MeasurableMask complement() const;
  MeasurableMask set(std::size_t c, bool v) const;  // returns a modified copy

  bool operator==(const MeasurableMask& o) const {
    return grid_ == o.grid_ && bits_ == o.bits_;
  }

  // True when every cell of *this lies in o.
  bool subset_of(const MeasurableMask& o) const;

  const std::vector<std::uint8_t>& bits() const { return bits_; }

 private:
  FrequencyGrid grid_;
  std::vector<std::uint8_t> bits_;
};

MeasurableMask mask_union(const MeasurableMask& a, const MeasurableMask& b);
MeasurableMask mask_intersect(const MeasurableMask& a, const MeasurableMask& b);
MeasurableMask mask_difference(const MeasurableMask& a, const MeasurableMask& b);

// Lebesgue measure surrogate: cell count ratio. Additivity over union/intersection
// is exact on the underlying integer counts.
double mask_measure(const MeasurableMask& a);

// Per-cell scalar samples over a grid.
struct RealField {
  FrequencyGrid grid;
  Eigen::VectorXd v;

  RealField(const FrequencyGrid& g, Eigen::VectorXd vals);
  double operator()(std::size_t c) const { return v[static_cast<Eigen::Index>(c)]; }
};

struct ComplexField {
  FrequencyGrid grid;
  Eigen::VectorXcd v;

  ComplexField(const FrequencyGrid& g, Eigen::VectorXcd vals);
  cplx operator()(std::size_t c) const { return v[static_cast<Eigen::Index>(c)]; }
};

// Per-cell matrices; dimensions may vary cell to cell.
struct MatrixField {
  FrequencyGrid grid;
  std::vector<Eigen::MatrixXcd> m;

  MatrixField(const FrequencyGrid& g, std::vector<Eigen::MatrixXcd> mats);
  const Eigen::MatrixXcd& operator()(std::size_t c) const { return m[c]; }
};

// Essential supremum surrogate: max over the cells of A.
// Throws null_set_error when A has no cells.
double ess_sup(const RealField& f, const MeasurableMask& A);

// Convenience: ess-sup over the whole torus.
double ess_sup(const RealField& f);

}  // namespace sdiag

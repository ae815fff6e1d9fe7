#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "sdiag/grid.hpp"

namespace sdiag {

// Cubic block of integer lattice points {k : |k_a| <= K}, enumerated
// lexicographically with the first axis major: (-K,..),(-K+1,..),..
// size() = (2K+1)^d.
class LatticeWindow {
 public:
  LatticeWindow(int d, int radius);

  int dim() const { return d_; }
  int radius() const { return K_; }
  std::size_t size() const { return size_; }

  std::array<int, 2> point(std::size_t i) const;
  // Index of lattice point k, or npos when outside the window.
  std::size_t index(const std::array<int, 2>& k) const;
  bool inside(const std::array<int, 2>& k) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  bool operator==(const LatticeWindow& o) const { return d_ == o.d_ && K_ == o.K_; }
  bool operator!=(const LatticeWindow& o) const { return !(*this == o); }

 private:
  int d_;
  int K_;
  std::size_t size_;
};

// Finitely supported sequence on a lattice window; value layout follows the
// window enumeration.
struct Sequence {
  LatticeWindow window;
  Eigen::VectorXcd a;

  Sequence(const LatticeWindow& w, Eigen::VectorXcd vals);
  explicit Sequence(const LatticeWindow& w);  // zero sequence

  cplx at(const std::array<int, 2>& k) const;  // 0 outside the window
};

// e_k(omega) = exp(-2 pi i <omega, k>).
cplx unit_character(const std::array<double, 2>& omega, const std::array<int, 2>& k,
                    int d);

// Symbol of a sequence: a_hat(omega) = sum_k a_k e_k(omega), sampled per cell.
ComplexField eval_symbol(const Sequence& a, const FrequencyGrid& grid);
cplx eval_symbol_at(const Sequence& a, const std::array<double, 2>& omega);

// Grid DFT: recover window coefficients from per-cell samples,
// a_k = (1/N) sum_cells f(omega_c) conj(e_k(omega_c)). Exact (no aliasing) for
// trig polynomials of degree <= radius when 2*radius+1 <= n_per_dim; the
// caller gets an error otherwise.
Sequence sample_to_sequence(const ComplexField& f, int radius);

// Index-shift: (shift_sequence(a, k0))(k) = a(k - k0); window grows by |k0|.
Sequence shift_sequence(const Sequence& a, const std::array<int, 2>& k0);

double sequence_norm(const Sequence& a);

}  // namespace sdiag

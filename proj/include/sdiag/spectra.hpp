#pragma once

#include "sdiag/rangeop.hpp"

namespace sdiag {

// Per-cell eigenvalue data. Eigenvalues are kept in canonical order (real
// part, then imaginary part); distinct[c] holds the single-linkage cluster
// representatives (means), also in canonical order, so distinct[c].size() is
// the distinct count i(omega).
struct FiberSpectrum {
  FrequencyGrid grid;
  std::vector<Eigen::VectorXcd> eigs;       // length dim[c], canonical order
  std::vector<std::vector<cplx>> distinct;  // cluster representatives
  double cluster_tol;
  double norm_bound;  // K_R of the source operator

  int count(std::size_t c) const { return static_cast<int>(distinct[c].size()); }

  // Partition mask A_{n,i}: cells with fiber dimension n and i distinct
  // eigenvalues.
  MeasurableMask partition_mask(const FiberFrame& frame, int n, int i) const;
};

// One pasted eigenvalue: a bounded measurable function lambda_j with its
// support C_j; off support the value is the padding norm_bound + j.
struct PastedEigenvalue {
  int j;  // 1-based slot
  ComplexField lambda;
  MeasurableMask support;  // C_j
  double padding;
};

// Eigenvalues of every fiber matrix. cluster_tol < 0 means the default
// 1e-6 * max(1, K_R).
FiberSpectrum fiber_spectra(const RangeOperatorField& R, double cluster_tol = -1.0);

// Measurable pasting: exactly g slots, where g = max over cells of the
// distinct count; slot j carries the j-th distinct eigenvalue where the cell
// has at least j of them and the padding value elsewhere. Supports are nested:
// C_{j+1} subset of C_j.
std::vector<PastedEigenvalue> paste_eigenvalues(const FiberSpectrum& s);

// Max distinct count over the grid (the spectral multiplicity bound g).
int pasted_count(const FiberSpectrum& s);

// Kernel of R - lambda_j I, nonzero exactly on the support C_j. The singular
// value zero floor is widened to 4 * cluster_tol so values merged by
// clustering contribute their whole eigenspace.
KernelField eigenspace_field(const RangeOperatorField& R, const PastedEigenvalue& lam,
                             const FiberSpectrum& s, double rank_tol = 1e-8);

// Per-cell diagonalizability: sum of geometric multiplicities over the
// distinct eigenvalues vs. the fiber dimension.
struct DiagnosabilityField {
  std::vector<int> geometric_sum;
  MeasurableMask defect;  // cells where the sum falls short
};

DiagnosabilityField diagonalizable_field(const RangeOperatorField& R,
                                         const FiberSpectrum& s,
                                         double rank_tol = 1e-8);

}  // namespace sdiag

#pragma once

#include <optional>
#include <string>

#include "sdiag/spectra.hpp"

namespace sdiag {

// Trig-polynomial fit of a sampled field: the coefficient sequence plus the
// max-norm fit residual over the grid. Exact (residual ~ machine) when the
// field is a trig polynomial of degree <= the fit window.
struct SymbolFit {
  Sequence coeffs;
  double residual;
};

// Least-squares trig-polynomial fit on the uniform grid (the grid DFT is the
// orthogonal projection). degree < 0 means the largest window below the
// aliasing limit, capped at cap_degree.
SymbolFit symbol_from_field(const ComplexField& f, int degree, int cap_degree = 8);

// One s-eigenvalue/eigenspace pair: the convolution symbol (sampled field +
// fitted sequence), its spectrum sigma(V_a) and the per-cell eigenspace bases
// in frame coordinates.
struct SEigenpair {
  ComplexField lambda;       // sampled symbol values (authoritative)
  SymbolFit symbol;          // fitted coefficient sequence
  MeasurableMask spectrum;   // sigma(V_a)
  KernelField eigenspace;    // J_{V_a}(omega) = ker(R - lambda I)
};

struct SDiagonalization {
  std::shared_ptr<const FiberFrame> frame;
  std::vector<SEigenpair> pairs;
  int g;                 // spectral multiplicity bound (max distinct count)
  double ess_sup_cb;     // recorded angle supremum
  bool minimal;          // component count == g
  std::vector<int> k_field;  // distinct-count field the decomposition answers to

  int components() const { return static_cast<int>(pairs.size()); }
};

// Cosine of the tuple angle c_b(M_1,...,M_r) at one cell: the norm of
//P_{M_r} ... P_{M_1} P_{M_0^perp}, with M_0 the joint intersection obtained
// from the null space of the summed complement projections. Bases must be
// orthonormal; requires r >= 2.
double angle_cb_cell(const std::vector<Eigen::MatrixXcd>& bases, int ambient);

// Field version over per-cell subspace lists.
RealField angle_cb(const FrequencyGrid& grid,
                   const std::vector<std::vector<Eigen::MatrixXcd>>& per_cell,
                   const std::vector<int>& ambient);

// C_b(omega) for a range operator: per cell the tuple angle of the orthogonal
// complements of the nonzero eigenspaces; cells with at most one eigenspace
// get 0. Throws defective_fiber_error (carrying the cells) when the
// eigenspaces do not fill the fiber.
RealField cb_field(const RangeOperatorField& R,
                   const std::vector<KernelField>& eigenspaces);

struct DecisionOptions {
  double rank_tol = 1e-8;
  double cluster_tol = -1.0;     // default 1e-6 * max(1, K_R)
  double angle_margin = 0.01;    // YES needs ess sup C_b <= 1 - margin
  int fit_degree = -1;           // default: window radius
};

struct Decision {
  bool yes;
  std::string reason;  // "defective fibers" or "angle degeneration" on NO
  MeasurableMask defect_mask;
  double ess_sup_cb;
  RealField cb;
  FiberSpectrum spectra;
  std::optional<SDiagonalization> decomposition;
};

// The decision procedure: s-diagonalizable iff every fiber matrix is
// diagonalizable and ess sup C_b stays away from 1 by the margin. On YES the
// decomposition has exactly g pairs with nested spectra
// sigma(V_{a_j}) = {k(omega) >= j}.
Decision decide_s_diagonalizable(const RangeOperatorField& R,
                                 const DecisionOptions& opts = {});

// Residual field ||R - sum_j lambda_j P_j|| with orthogonal projections.
// Pre: R normal; otherwise an error pointing at oblique_synthesis.
RealField spectral_synthesis(const RangeOperatorField& R, const SDiagonalization& dec,
                             double normal_tol = 1e-10);

struct ObliqueSynthesis {
  RealField residual;
  double worst_condition;
  bool conditioning_warning;  // worst condition > 1/(1 - ess_sup_cb)^2
  std::string warning;
};

// Residual field with oblique projections from the stacked eigenspace bases.
ObliqueSynthesis oblique_synthesis(const RangeOperatorField& R,
                                   const SDiagonalization& dec);

// Decomposition of the inverse operator: symbols 1/lambda_j on each support,
// identical eigenspaces. Errors (naming the worst cell) when some |lambda_j|
// falls below lower_bound_tol on its support.
SDiagonalization invert_decomposition(const SDiagonalization& dec,
                                      double lower_bound_tol = 1e-8);

// Split pair j0 along mask A (strictly between the empty set and the support):
// two pairs with spectra A and support \ A, symbols extended by zero. The
// result is a valid decomposition with one more component than minimal.
SDiagonalization split_spectrum(const SDiagonalization& dec, int j0,
                                const MeasurableMask& A);

// h(omega) = number of spectra containing the cell.
std::vector<int> h_field(const SDiagonalization& dec);

// h == k cellwise (k = distinct eigenvalue count; 0 off the support).
bool verify_h_equals_k(const SDiagonalization& dec, const FiberSpectrum& s,
                       std::size_t* first_bad = nullptr);

// Structural re-check of a decomposition against an operator: eigenvector
// residuals, per-cell completeness of the stacked bases, pairwise symbol
// separation on overlapping spectra, eigenspaces vanishing off support.
struct VerifyReport {
  bool ok;
  std::string what;
  double max_eigen_residual;
  double min_stack_sigma;
};

VerifyReport verify_decomposition(const RangeOperatorField& R,
                                  const SDiagonalization& dec,
                                  double eigen_res_tol = -1.0);

}  // namespace sdiag

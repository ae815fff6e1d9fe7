#pragma once

#include <functional>
#include <memory>

#include "sdiag/fiberize.hpp"

namespace sdiag {

// Sampled matrix representation of a shift-preserving operator: per cell the
// n(omega) x n(omega) matrix of the range operator in the frame basis.
// Immutable after construction; norm_bound caches ess-sup of the per-cell
// spectral norms.
struct RangeOperatorField {
  std::shared_ptr<const FiberFrame> frame;
  std::vector<Eigen::MatrixXcd> mat;
  double norm_bound;  // K_R

  RangeOperatorField(std::shared_ptr<const FiberFrame> fr,
                     std::vector<Eigen::MatrixXcd> mats);
  const Eigen::MatrixXcd& operator()(std::size_t c) const { return mat[c]; }
  const FrequencyGrid& grid() const { return frame->grid; }
};

// Per-cell orthonormal kernel bases, in frame coordinates, with the rank
// partition {B_k}.
struct KernelField {
  std::shared_ptr<const FiberFrame> frame;
  std::vector<Eigen::MatrixXcd> basis;  // per cell, dim[c] x nullity
  std::vector<int> rank;
  std::vector<MeasurableMask> rank_masks;  // B_k, k = 0..max fiber dim

  const Eigen::MatrixXcd& operator()(std::size_t c) const { return basis[c]; }
};

// Action of an operator on fibers: given a cell and vectors inside J(omega)
// (columns), return the image vectors (columns, same length M).
using FiberAction =
    std::function<Eigen::MatrixXcd(std::size_t cell, const Eigen::MatrixXcd& cols)>;

// Matrix representation of an action against the frame: [R](omega) = B* A(B).
// Errors when an action output leaves J(omega) by more than tol (relative to
// the output magnitude), naming the worst cell.
RangeOperatorField matrix_rep(const FiberAction& action,
                              std::shared_ptr<const FiberFrame> frame,
                              double tol = 1e-8);

// Direct construction from per-cell matrices already in frame coordinates.
RangeOperatorField operator_from_matrices(std::shared_ptr<const FiberFrame> frame,
                                          std::vector<Eigen::MatrixXcd> mats);

// Action helpers.
FiberAction action_multiply(const ComplexField& symbol);       // v -> a(omega) v
FiberAction action_frame_operator(const GeneratorSet& gens);   // v -> G G* v

// Action defined by coefficients against the generators:
// R(T phi_j) = sum_i entries(i,j)(omega) T phi_i. entries_at(cell) returns the
// l x l coefficient matrix at that cell.
FiberAction action_generator_table(
    std::shared_ptr<const GeneratorSet> gens, std::shared_ptr<const FiberFrame> frame,
    std::function<Eigen::MatrixXcd(std::size_t)> entries_at);

// ess-sup over cells of the per-cell spectral norm. Equals norm_bound.
double op_norm(const RangeOperatorField& R);

// Per-cell spectral norms as a field.
RealField op_norm_field(const RangeOperatorField& R);

RangeOperatorField adjoint(const RangeOperatorField& R);
bool is_normal(const RangeOperatorField& R, double tol = 1e-10);
bool is_self_adjoint(const RangeOperatorField& R, double tol = 1e-10);

// Cellwise inverse. Requires the smallest per-cell singular value to stay
// >= lower_bound_tol on every cell; the error names the worst cell.
// Default tolerance when lower_bound_tol < 0: 1e-8 * max(1, K_R).
RangeOperatorField invert(const RangeOperatorField& R, double lower_bound_tol = -1.0);

// Orthonormal kernel bases per cell. Rank from singular values (relative
// rank_tol, plus absolute floor zero_abs >= 0); pivot submatrix by max |det|
// over all k x k submatrices for n <= 4 (ties: lexicographically smallest row
// set, then column set), column-pivoted QR above; kernel vectors from the
// pivot block by back-substitution, then Gram-Schmidt.
KernelField kernel_field(const RangeOperatorField& R, double rank_tol = 1e-8,
                         double zero_abs = 0.0);

// Same construction applied to shifted matrices A(c) = R(c) - shift(c) I.
KernelField shifted_kernel_field(const RangeOperatorField& R, const ComplexField& shift,
                                 double rank_tol, double zero_abs);

}  // namespace sdiag

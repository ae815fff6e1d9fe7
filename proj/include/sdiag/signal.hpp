#pragma once

#include <iosfwd>

#include "sdiag/rangeop.hpp"

namespace sdiag {

// A signal in V as finite-support coefficient sequences against the
// generators: f = sum_i sum_k b_i(k) T_k phi_i. One sequence per generator,
// all on a common window.
struct CoefficientVector {
  std::vector<Sequence> channel;

  CoefficientVector(std::vector<Sequence> ch);
  int channels() const { return static_cast<int>(channel.size()); }
  int dim() const { return channel[0].window.dim(); }
  int radius() const { return channel[0].window.radius(); }
};

double coeff_norm(const CoefficientVector& f);

// Exact discrete convolution; output window radius is the sum of the input
// radii. Errors when the combined support exceeds the hard cap (radius 64).
Sequence convolve(const Sequence& a, const Sequence& b);

// Channelwise action of the s-eigenvalue: (a * b_i) per generator.
CoefficientVector apply_lambda(const Sequence& a, const CoefficientVector& f);

// Coefficient shift on every channel.
CoefficientVector shift_coeffs(const CoefficientVector& f,
                               const std::array<int, 2>& k0);

// Apply the operator through the fiber domain: synthesize fibers from the
// coefficients, act with [R](omega), then recover output coefficients on the
// out_radius window by grid DFT. Exact when every symbol in play is a trig
// polynomial of degree <= out_radius.
//
// Requires per-cell full column rank of the generator matrix (documented
// restriction); errors when the fibers leave J(omega) by more than in_tol.
CoefficientVector apply_operator(const RangeOperatorField& R,
                                 const CoefficientVector& f, int out_radius,
                                 double in_tol = 1e-8);

// True when the per-cell generator matrix has full column rank everywhere
// (the reconstruction precondition); reports a failing cell.
bool frame_full_rank(const FiberFrame& frame, std::size_t* bad_cell = nullptr);

// Synthesize per-cell generator coordinates from the channel symbols.
Eigen::MatrixXcd coeff_symbols(const CoefficientVector& f, const FrequencyGrid& grid);

// Coefficient files: one line per entry, "i k_1 .. k_d re im" with 1-based
// channel index i. Channels and window radius inferred from the content.
CoefficientVector load_coefficients(std::istream& in, int d, int channels);
void save_coefficients(std::ostream& out, const CoefficientVector& f);

}  // namespace sdiag

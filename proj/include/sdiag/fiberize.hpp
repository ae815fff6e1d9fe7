#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "sdiag/lattice.hpp"

namespace sdiag {

// Fibers of one signal: per cell the vector {fhat(omega + k)}_k over the
// lattice window, i.e. the fiberization map evaluated on the grid.
struct FiberField {
  FrequencyGrid grid;
  LatticeWindow window;
  std::vector<Eigen::VectorXcd> v;  // per cell, length window.size()

  FiberField(const FrequencyGrid& g, const LatticeWindow& w,
             std::vector<Eigen::VectorXcd> vals);
};

// Finitely many generator fibers stacked columnwise: per cell an M x l matrix
// whose column i is the fiber of generator i. Raw per-cell vectors are the
// internal form regardless of how the generators were described.
struct GeneratorSet {
  FrequencyGrid grid;
  LatticeWindow window;
  int count;
  std::vector<Eigen::MatrixXcd> G;  // per cell, M x count

  GeneratorSet(const FrequencyGrid& g, const LatticeWindow& w,
               std::vector<Eigen::MatrixXcd> fibers);
};

// Per-cell orthonormal basis of the fiber span J(omega), with the rank
// partition {A_n} of the torus. dim[c] = n(omega_c); basis[c] is M x dim[c].
// picked[c] lists the generator columns the basis was built from, in
// generator order.
struct FiberFrame {
  FrequencyGrid grid;
  LatticeWindow window;
  std::shared_ptr<const GeneratorSet> source;
  std::vector<Eigen::MatrixXcd> basis;
  std::vector<int> dim;
  std::vector<std::vector<int>> picked;
  std::vector<MeasurableMask> rank_masks;  // A_n, n = 0..generator count
  int space_dim;                           // L(V) = max dim
  MeasurableMask support;                  // sigma(V), complement of A_0
  double rank_tol;

  const Eigen::MatrixXcd& B(std::size_t c) const { return basis[c]; }
};

using FourierEvaluator = std::function<cplx(const std::array<double, 2>&)>;

// Sample the fiberization of one signal given its Fourier transform as a
// callable over R^d.
FiberField fiberize_signal(const FourierEvaluator& fhat, const FrequencyGrid& grid,
                           const LatticeWindow& window);

// Same, from per-lattice-point samples: component i of the result at cell c is
// samples[i](c). samples.size() must equal window.size() and every field must
// live on `grid`.
FiberField fiberize_signal(const std::vector<ComplexField>& samples,
                           const FrequencyGrid& grid, const LatticeWindow& window);

// Generators from per-component symbol tables: fiber component k of generator
// i at omega is the trig polynomial comps[i][k] evaluated at omega.
GeneratorSet generators_from_symbols(
    const FrequencyGrid& grid, const LatticeWindow& window,
    const std::vector<std::vector<std::pair<std::array<int, 2>, Sequence>>>& comps);

// Rank-revealing frame construction. Rank per cell from the SVD of the
// generator matrix (threshold rank_tol relative to the top singular value),
// basis by Gram-Schmidt over generator columns in generator order.
FiberFrame frame_from_generators(std::shared_ptr<const GeneratorSet> gens,
                                 double rank_tol = 1e-8);

// Orthogonal projection of fibers onto J(omega): per cell B B* v.
FiberField project_onto_fiber(const FiberFrame& frame, const FiberField& f);

// Quadrature surrogate of ||f||^2: mean over cells of ||fiber||^2.
double fiber_mass(const FiberField& f);

}  // namespace sdiag

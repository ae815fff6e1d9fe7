#include "sdiag/rangeop.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

namespace sdiag {

namespace {

double spectral_norm(const Eigen::MatrixXcd& A) {
  if (A.rows() == 0 || A.cols() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A);
  return svd.singularValues()[0];
}

}  // namespace

RangeOperatorField::RangeOperatorField(std::shared_ptr<const FiberFrame> fr,
                                       std::vector<Eigen::MatrixXcd> mats)
    : frame(std::move(fr)), mat(std::move(mats)), norm_bound(0.0) {
  if (mat.size() != frame->grid.cells())
    throw error("operator field size does not match grid");
  for (std::size_t c = 0; c < mat.size(); ++c) {
    const int n = frame->dim[c];
    if (mat[c].rows() != n || mat[c].cols() != n)
      throw error("operator block does not match fiber dimension");
    norm_bound = std::max(norm_bound, spectral_norm(mat[c]));
  }
}

RangeOperatorField matrix_rep(const FiberAction& action,
                              std::shared_ptr<const FiberFrame> frame,
                              double tol) {
  const FiberFrame& fr = *frame;
  std::vector<Eigen::MatrixXcd> mats(fr.grid.cells());
  double worst = 0.0;
  std::size_t worst_cell = 0;
  for (std::size_t c = 0; c < fr.grid.cells(); ++c) {
    const Eigen::MatrixXcd& B = fr.basis[c];
    if (B.cols() == 0) {
      mats[c] = Eigen::MatrixXcd::Zero(0, 0);
      continue;
    }
    Eigen::MatrixXcd A = action(c, B);
    if (A.rows() != B.rows() || A.cols() != B.cols())
      throw error("action output has the wrong shape");
    mats[c] = B.adjoint() * A;
    double res = (A - B * mats[c]).norm() / std::max(1.0, A.norm());
    if (res > worst) {
      worst = res;
      worst_cell = c;
    }
  }
  if (worst > tol) {
    auto w = fr.grid.center(worst_cell);
    throw not_range_operator_error(
        "not a range operator on J: action output leaves the fiber span at cell " +
            std::to_string(worst_cell) + " (omega = " + std::to_string(w[0]) +
            (fr.grid.dim() == 2 ? ", " + std::to_string(w[1]) : std::string()) +
            "), relative residual " + std::to_string(worst),
        worst_cell, worst);
  }
  return RangeOperatorField(std::move(frame), std::move(mats));
}

RangeOperatorField operator_from_matrices(std::shared_ptr<const FiberFrame> frame,
                                          std::vector<Eigen::MatrixXcd> mats) {
  return RangeOperatorField(std::move(frame), std::move(mats));
}

FiberAction action_multiply(const ComplexField& symbol) {
  return [symbol](std::size_t c, const Eigen::MatrixXcd& cols) {
    return Eigen::MatrixXcd(symbol(c) * cols);
  };
}

FiberAction action_frame_operator(const GeneratorSet& gens) {
  std::vector<Eigen::MatrixXcd> G = gens.G;
  return [G](std::size_t c, const Eigen::MatrixXcd& cols) {
    return Eigen::MatrixXcd(G[c] * (G[c].adjoint() * cols));
  };
}

FiberAction action_generator_table(
    std::shared_ptr<const GeneratorSet> gens, std::shared_ptr<const FiberFrame> frame,
    std::function<Eigen::MatrixXcd(std::size_t)> entries_at) {
  return [gens, frame, entries_at](std::size_t c, const Eigen::MatrixXcd& cols) {
    const Eigen::MatrixXcd& G = gens->G[c];
    const std::vector<int>& pick = frame->picked[c];
    // Coordinates of the input columns in the picked generator columns: the
    // picked columns are independent by construction, so the solve is well
    // posed even when the full generator matrix is rank deficient.
    Eigen::MatrixXcd Gp(G.rows(), static_cast<Eigen::Index>(pick.size()));
    for (std::size_t j = 0; j < pick.size(); ++j) Gp.col(static_cast<Eigen::Index>(j)) = G.col(pick[j]);
    Eigen::MatrixXcd w =
        Gp.completeOrthogonalDecomposition().solve(cols);  // pick-count x cols
    Eigen::MatrixXcd beta = Eigen::MatrixXcd::Zero(G.cols(), cols.cols());
    for (std::size_t j = 0; j < pick.size(); ++j)
      beta.row(pick[j]) = w.row(static_cast<Eigen::Index>(j));
    return Eigen::MatrixXcd(G * (entries_at(c) * beta));
  };
}

double op_norm(const RangeOperatorField& R) { return R.norm_bound; }

RealField op_norm_field(const RangeOperatorField& R) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(R.mat.size()));
  for (std::size_t c = 0; c < R.mat.size(); ++c)
    v[static_cast<Eigen::Index>(c)] = spectral_norm(R.mat[c]);
  return RealField(R.grid(), std::move(v));
}

RangeOperatorField adjoint(const RangeOperatorField& R) {
  std::vector<Eigen::MatrixXcd> mats(R.mat.size());
  for (std::size_t c = 0; c < R.mat.size(); ++c) mats[c] = R.mat[c].adjoint();
  return RangeOperatorField(R.frame, std::move(mats));
}

bool is_normal(const RangeOperatorField& R, double tol) {
  const double slack = tol * std::max(1.0, R.norm_bound);
  for (const auto& A : R.mat) {
    if (A.rows() == 0) continue;
    if (spectral_norm(A * A.adjoint() - A.adjoint() * A) > slack) return false;
  }
  return true;
}

bool is_self_adjoint(const RangeOperatorField& R, double tol) {
  const double slack = tol * std::max(1.0, R.norm_bound);
  for (const auto& A : R.mat) {
    if (A.rows() == 0) continue;
    if (spectral_norm(A - A.adjoint()) > slack) return false;
  }
  return true;
}

RangeOperatorField invert(const RangeOperatorField& R, double lower_bound_tol) {
  if (lower_bound_tol < 0.0) lower_bound_tol = 1e-8 * std::max(1.0, R.norm_bound);
  double worst = -1.0;
  std::size_t worst_cell = 0;
  for (std::size_t c = 0; c < R.mat.size(); ++c) {
    const auto& A = R.mat[c];
    if (A.rows() == 0) continue;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A);
    double smin = svd.singularValues()[svd.singularValues().size() - 1];
    if (worst < 0.0 || smin < worst) {
      worst = smin;
      worst_cell = c;
    }
  }
  if (worst >= 0.0 && worst < lower_bound_tol) {
    auto w = R.grid().center(worst_cell);
    throw not_bounded_below_error(
        "not uniformly bounded below: smallest singular value " +
            std::to_string(worst) + " at cell " + std::to_string(worst_cell) +
            " (omega = " + std::to_string(w[0]) +
            (R.grid().dim() == 2 ? ", " + std::to_string(w[1]) : std::string()) +
            ") under tolerance " + std::to_string(lower_bound_tol),
        worst_cell, worst);
  }
  std::vector<Eigen::MatrixXcd> mats(R.mat.size());
  for (std::size_t c = 0; c < R.mat.size(); ++c) {
    const auto& A = R.mat[c];
    mats[c] = A.rows() == 0 ? A : Eigen::MatrixXcd(A.partialPivLu().inverse());
  }
  return RangeOperatorField(R.frame, std::move(mats));
}

namespace {

// All k-subsets of {0..n-1} in lexicographic order.
void subsets(int n, int k, std::vector<std::vector<int>>& out) {
  std::vector<int> cur(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) cur[static_cast<std::size_t>(i)] = i;
  while (true) {
    out.push_back(cur);
    int i = k - 1;
    while (i >= 0 && cur[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) break;
    ++cur[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j)
      cur[static_cast<std::size_t>(j)] = cur[static_cast<std::size_t>(j - 1)] + 1;
  }
}

Eigen::MatrixXcd submatrix(const Eigen::MatrixXcd& A, const std::vector<int>& rows,
                           const std::vector<int>& cols) {
  Eigen::MatrixXcd S(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          A(rows[i], cols[j]);
  return S;
}

// Pivot block of rank k: row and column sets whose k x k submatrix has the
// largest |det|; ties resolved by enumeration order (lexicographic row set,
// then column set). Exhaustive for n <= 4, column-pivoted QR beyond.
void pivot_block(const Eigen::MatrixXcd& A, int k, std::vector<int>& rows,
                 std::vector<int>& cols) {
  const int n = static_cast<int>(A.rows());
  if (n <= 4) {
    std::vector<std::vector<int>> rsets, csets;
    subsets(n, k, rsets);
    csets = rsets;
    double best = -1.0;
    for (const auto& r : rsets) {
      for (const auto& cset : csets) {
        double d = std::abs(submatrix(A, r, cset).determinant());
        if (d > best) {
          best = d;
          rows = r;
          cols = cset;
        }
      }
    }
    return;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(A);
  auto perm = qr.colsPermutation().indices();
  cols.assign(perm.data(), perm.data() + k);
  std::sort(cols.begin(), cols.end());
  Eigen::MatrixXcd Ac(A.rows(), k);
  for (int j = 0; j < k; ++j) Ac.col(j) = A.col(cols[static_cast<std::size_t>(j)]);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr2(Ac.transpose());
  auto perm2 = qr2.colsPermutation().indices();
  rows.assign(perm2.data(), perm2.data() + k);
  std::sort(rows.begin(), rows.end());
}

// Kernel basis of one matrix: rank by singular values, null vectors from the
// pivot block (free column gets 1, pivot columns get -M_h^{-1} c), then
// Gram-Schmidt in free-column order.
std::pair<Eigen::MatrixXcd, int> kernel_of(const Eigen::MatrixXcd& A, double rank_tol,
                                           double zero_abs) {
  const int n = static_cast<int>(A.rows());
  if (n == 0) return {Eigen::MatrixXcd::Zero(0, 0), 0};
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A);
  const auto& sv = svd.singularValues();
  double top = sv[0];
  double thr = std::max(rank_tol * top, zero_abs);
  int k = 0;
  if (top > 1e-300)
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv[i] > thr) ++k;
  if (k == n) return {Eigen::MatrixXcd::Zero(n, 0), k};
  if (k == 0) return {Eigen::MatrixXcd::Identity(n, n), 0};

  std::vector<int> prow, pcol;
  pivot_block(A, k, prow, pcol);
  Eigen::MatrixXcd Mh = submatrix(A, prow, pcol);
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(Mh);

  std::vector<int> free_cols;
  for (int j = 0; j < n; ++j)
    if (std::find(pcol.begin(), pcol.end(), j) == pcol.end()) free_cols.push_back(j);

  Eigen::MatrixXcd V(n, static_cast<Eigen::Index>(free_cols.size()));
  for (std::size_t f = 0; f < free_cols.size(); ++f) {
    Eigen::VectorXcd cvec(static_cast<Eigen::Index>(k));
    for (int i = 0; i < k; ++i)
      cvec[i] = A(prow[static_cast<std::size_t>(i)], free_cols[f]);
    Eigen::VectorXcd x = lu.solve(cvec);
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
    for (int i = 0; i < k; ++i) v[pcol[static_cast<std::size_t>(i)]] = -x[i];
    v[free_cols[f]] = cplx(1.0, 0.0);
    V.col(static_cast<Eigen::Index>(f)) = v;
  }
  // Gram-Schmidt, re-orthogonalized; the columns are independent by the
  // identity tail, so no column drops out.
  Eigen::MatrixXcd Q(n, V.cols());
  Eigen::Index q = 0;
  for (Eigen::Index j = 0; j < V.cols(); ++j) {
    Eigen::VectorXcd v = V.col(j);
    if (q > 0) {
      v -= Q.leftCols(q) * (Q.leftCols(q).adjoint() * v);
      v -= Q.leftCols(q) * (Q.leftCols(q).adjoint() * v);
    }
    Q.col(q++) = v / v.norm();
  }
  return {Q, k};
}

KernelField build_kernel_field(const RangeOperatorField& R,
                               std::function<Eigen::MatrixXcd(std::size_t)> mat_at,
                               double rank_tol, double zero_abs) {
  const std::size_t N = R.grid().cells();
  std::vector<Eigen::MatrixXcd> basis(N);
  std::vector<int> rank(N, 0);
  int maxdim = 0;
  for (std::size_t c = 0; c < N; ++c) {
    auto [B, k] = kernel_of(mat_at(c), rank_tol, zero_abs);
    basis[c] = std::move(B);
    rank[c] = k;
    maxdim = std::max(maxdim, R.frame->dim[c]);
  }
  std::vector<MeasurableMask> rank_masks;
  for (int k = 0; k <= maxdim; ++k) {
    std::vector<std::uint8_t> bits(N, 0);
    for (std::size_t c = 0; c < N; ++c)
      if (rank[c] == k) bits[c] = 1;
    rank_masks.emplace_back(R.grid(), std::move(bits));
  }
  return KernelField{R.frame, std::move(basis), std::move(rank), std::move(rank_masks)};
}

}  // namespace

KernelField kernel_field(const RangeOperatorField& R, double rank_tol,
                         double zero_abs) {
  return build_kernel_field(
      R, [&R](std::size_t c) { return R.mat[c]; }, rank_tol, zero_abs);
}

KernelField shifted_kernel_field(const RangeOperatorField& R, const ComplexField& shift,
                                 double rank_tol, double zero_abs) {
  if (shift.grid != R.grid()) throw error("shift field grid differs");
  return build_kernel_field(
      R,
      [&R, &shift](std::size_t c) {
        const auto& A = R.mat[c];
        return Eigen::MatrixXcd(
            A - shift(c) * Eigen::MatrixXcd::Identity(A.rows(), A.cols()));
      },
      rank_tol, zero_abs);
}

}  // namespace sdiag

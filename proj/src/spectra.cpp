#include "sdiag/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include <Eigen/Eigenvalues>

namespace sdiag {

namespace {

bool canon_less(const cplx& a, const cplx& b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

// Single-linkage clusters at distance cluster_tol, via union-find over pairs.
std::vector<cplx> cluster_representatives(const Eigen::VectorXcd& vals, double tol) {
  const int n = static_cast<int>(vals.size());
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(vals[i] - vals[j]) <= tol) {
        int a = find(i), b = find(j);
        if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
      }
  std::vector<cplx> sum(static_cast<std::size_t>(n), cplx(0, 0));
  std::vector<int> cnt(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    int r = find(i);
    sum[static_cast<std::size_t>(r)] += vals[i];
    cnt[static_cast<std::size_t>(r)] += 1;
  }
  std::vector<cplx> reps;
  for (int i = 0; i < n; ++i)
    if (cnt[static_cast<std::size_t>(i)] > 0)
      reps.push_back(sum[static_cast<std::size_t>(i)] /
                     static_cast<double>(cnt[static_cast<std::size_t>(i)]));
  std::sort(reps.begin(), reps.end(), canon_less);
  return reps;
}

}  // namespace

MeasurableMask FiberSpectrum::partition_mask(const FiberFrame& frame, int n,
                                             int i) const {
  std::vector<std::uint8_t> bits(grid.cells(), 0);
  for (std::size_t c = 0; c < grid.cells(); ++c)
    if (frame.dim[c] == n && count(c) == i) bits[c] = 1;
  return MeasurableMask(grid, std::move(bits));
}

FiberSpectrum fiber_spectra(const RangeOperatorField& R, double cluster_tol) {
  if (cluster_tol < 0.0) cluster_tol = 1e-6 * std::max(1.0, R.norm_bound);
  const std::size_t N = R.grid().cells();
  std::vector<Eigen::VectorXcd> eigs(N);
  std::vector<std::vector<cplx>> distinct(N);
  for (std::size_t c = 0; c < N; ++c) {
    const auto& A = R.mat[c];
    if (A.rows() == 0) {
      eigs[c] = Eigen::VectorXcd(0);
      continue;
    }
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(A, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) {
      auto w = R.grid().center(c);
      throw error("eigenvalue solver failed at cell " + std::to_string(c) +
                  " (omega = " + std::to_string(w[0]) +
                  (R.grid().dim() == 2 ? ", " + std::to_string(w[1]) : std::string()) +
                  ")");
    }
    Eigen::VectorXcd ev = es.eigenvalues();
    std::sort(ev.data(), ev.data() + ev.size(), canon_less);
    distinct[c] = cluster_representatives(ev, cluster_tol);
    eigs[c] = std::move(ev);
  }
  return FiberSpectrum{R.grid(), std::move(eigs), std::move(distinct), cluster_tol,
                       R.norm_bound};
}

int pasted_count(const FiberSpectrum& s) {
  int g = 0;
  for (std::size_t c = 0; c < s.grid.cells(); ++c) g = std::max(g, s.count(c));
  return g;
}

std::vector<PastedEigenvalue> paste_eigenvalues(const FiberSpectrum& s) {
  const int g = pasted_count(s);
  const std::size_t N = s.grid.cells();
  std::vector<PastedEigenvalue> out;
  out.reserve(static_cast<std::size_t>(g));
  for (int j = 1; j <= g; ++j) {
    const double pad = s.norm_bound + j;
    Eigen::VectorXcd lam(static_cast<Eigen::Index>(N));
    std::vector<std::uint8_t> bits(N, 0);
    for (std::size_t c = 0; c < N; ++c) {
      if (s.count(c) >= j) {
        lam[static_cast<Eigen::Index>(c)] = s.distinct[c][static_cast<std::size_t>(j - 1)];
        bits[c] = 1;
      } else {
        lam[static_cast<Eigen::Index>(c)] = cplx(pad, 0.0);
      }
    }
    out.push_back(PastedEigenvalue{j, ComplexField(s.grid, std::move(lam)),
                                   MeasurableMask(s.grid, std::move(bits)), pad});
  }
  return out;
}

KernelField eigenspace_field(const RangeOperatorField& R, const PastedEigenvalue& lam,
                             const FiberSpectrum& s, double rank_tol) {
  // 4x widening covers the single-linkage cluster diameter at fiber
  // dimensions <= 4, so merged eigenvalues keep their full eigenspace.
  const double zero_abs = 4.0 * s.cluster_tol;
  return shifted_kernel_field(R, lam.lambda, rank_tol, zero_abs);
}

DiagnosabilityField diagonalizable_field(const RangeOperatorField& R,
                                         const FiberSpectrum& s, double rank_tol) {
  const double zero_abs = 4.0 * s.cluster_tol;
  const std::size_t N = R.grid().cells();
  std::vector<int> geo(N, 0);
  std::vector<std::uint8_t> defect(N, 0);
  for (std::size_t c = 0; c < N; ++c) {
    const auto& A = R.mat[c];
    const int n = static_cast<int>(A.rows());
    if (n == 0) continue;
    int sum = 0;
    for (const cplx& mu : s.distinct[c]) {
      Eigen::MatrixXcd shifted = A - mu * Eigen::MatrixXcd::Identity(n, n);
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(shifted);
      const auto& sv = svd.singularValues();
      double top = sv[0];
      double thr = std::max(rank_tol * top, zero_abs);
      int rank = 0;
      if (top > 1e-300)
        for (Eigen::Index i = 0; i < sv.size(); ++i)
          if (sv[i] > thr) ++rank;
      sum += n - rank;
    }
    geo[c] = sum;
    if (sum < n) defect[c] = 1;
  }
  return DiagnosabilityField{std::move(geo), MeasurableMask(R.grid(), std::move(defect))};
}

}  // namespace sdiag

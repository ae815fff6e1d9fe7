#include "sdiag/decompose.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
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

Eigen::MatrixXcd orthogonal_complement(const Eigen::MatrixXcd& B, int n) {
  if (B.cols() == 0) return Eigen::MatrixXcd::Identity(n, n);
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(B);
  Eigen::MatrixXcd Q = qr.householderQ();
  return Q.rightCols(n - B.cols());
}

std::string cell_label(const FrequencyGrid& grid, std::size_t c) {
  auto w = grid.center(c);
  return "cell " + std::to_string(c) + " (omega = " + std::to_string(w[0]) +
         (grid.dim() == 2 ? ", " + std::to_string(w[1]) : std::string()) + ")";
}

std::vector<MeasurableMask> masks_from_ranks(const FrequencyGrid& grid,
                                             const std::vector<int>& rank,
                                             int maxdim) {
  std::vector<MeasurableMask> out;
  for (int k = 0; k <= maxdim; ++k) {
    std::vector<std::uint8_t> bits(grid.cells(), 0);
    for (std::size_t c = 0; c < grid.cells(); ++c)
      if (rank[c] == k) bits[c] = 1;
    out.emplace_back(grid, std::move(bits));
  }
  return out;
}

}  // namespace

SymbolFit symbol_from_field(const ComplexField& f, int degree, int cap_degree) {
  const int alias_limit = (f.grid.n_per_dim() - 1) / 2;
  if (degree < 0) degree = std::min(cap_degree, alias_limit);
  Sequence coeffs = sample_to_sequence(f, degree);
  double res = 0.0;
  for (std::size_t c = 0; c < f.grid.cells(); ++c)
    res = std::max(res, std::abs(eval_symbol_at(coeffs, f.grid.center(c)) - f(c)));
  return SymbolFit{std::move(coeffs), res};
}

double angle_cb_cell(const std::vector<Eigen::MatrixXcd>& bases, int ambient) {
  const int r = static_cast<int>(bases.size());
  if (r < 2) throw error("angle_cb needs at least 2 subspaces");
  const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(ambient, ambient);
  Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(ambient, ambient);
  for (const auto& B : bases) {
    if (B.rows() != ambient) throw error("subspace basis does not match ambient dim");
    S += I - B * B.adjoint();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(S);
  const auto& ev = es.eigenvalues();
  const double thr = 1e-8 * std::max(1.0, ev[ev.size() - 1]);
  int m0 = 0;
  while (m0 < ev.size() && ev[m0] <= thr) ++m0;
  Eigen::MatrixXcd X = I;
  if (m0 > 0) {
    Eigen::MatrixXcd U0 = es.eigenvectors().leftCols(m0);
    X -= U0 * U0.adjoint();
  }
  for (const auto& B : bases) X = B * (B.adjoint() * X);
  return spectral_norm(X);
}

RealField angle_cb(const FrequencyGrid& grid,
                   const std::vector<std::vector<Eigen::MatrixXcd>>& per_cell,
                   const std::vector<int>& ambient) {
  if (per_cell.size() != grid.cells() || ambient.size() != grid.cells())
    throw error("angle_cb input size does not match grid");
  Eigen::VectorXd v(static_cast<Eigen::Index>(grid.cells()));
  for (std::size_t c = 0; c < grid.cells(); ++c)
    v[static_cast<Eigen::Index>(c)] = angle_cb_cell(per_cell[c], ambient[c]);
  return RealField(grid, std::move(v));
}

RealField cb_field(const RangeOperatorField& R,
                   const std::vector<KernelField>& eigenspaces) {
  const std::size_t N = R.grid().cells();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N));
  std::vector<std::size_t> defective;
  for (std::size_t c = 0; c < N; ++c) {
    const int n = R.frame->dim[c];
    if (n == 0) continue;
    std::vector<const Eigen::MatrixXcd*> spaces;
    int total = 0;
    for (const auto& E : eigenspaces) {
      if (E.basis[c].cols() == 0) continue;
      spaces.push_back(&E.basis[c]);
      total += static_cast<int>(E.basis[c].cols());
    }
    if (total < n) {
      defective.push_back(c);
      continue;
    }
    if (total > n)
      throw error("eigenspaces overlap at " + cell_label(R.grid(), c));
    if (spaces.size() <= 1) continue;  // C_b = 0
    std::vector<Eigen::MatrixXcd> complements;
    complements.reserve(spaces.size());
    for (const auto* E : spaces) complements.push_back(orthogonal_complement(*E, n));
    v[static_cast<Eigen::Index>(c)] = angle_cb_cell(complements, n);
  }
  if (!defective.empty())
    throw defective_fiber_error(
        "defective fibers: eigenspaces do not fill the fiber at " +
            cell_label(R.grid(), defective[0]) + " and " +
            std::to_string(defective.size() - 1) + " more cell(s)",
        std::move(defective));
  return RealField(R.grid(), std::move(v));
}

Decision decide_s_diagonalizable(const RangeOperatorField& R,
                                 const DecisionOptions& opts) {
  FiberSpectrum spectra = fiber_spectra(R, opts.cluster_tol);
  DiagnosabilityField diag = diagonalizable_field(R, spectra, opts.rank_tol);
  const FrequencyGrid& grid = R.grid();
  if (!diag.defect.empty()) {
    // ess_sup_cb = -1: the angle was never computed.
    return Decision{false,
                    "defective fibers",
                    diag.defect,
                    -1.0,
                    RealField(grid, Eigen::VectorXd::Zero(
                                        static_cast<Eigen::Index>(grid.cells()))),
                    std::move(spectra),
                    std::nullopt};
  }

  std::vector<PastedEigenvalue> pasted = paste_eigenvalues(spectra);
  std::vector<KernelField> spaces;
  spaces.reserve(pasted.size());
  for (const auto& p : pasted)
    spaces.push_back(eigenspace_field(R, p, spectra, opts.rank_tol));

  RealField cb = cb_field(R, spaces);
  double sup = 0.0;
  for (std::size_t c = 0; c < grid.cells(); ++c) sup = std::max(sup, cb(c));

  if (sup > 1.0 - opts.angle_margin) {
    return Decision{false,          "angle degeneration", MeasurableMask(grid),
                    sup,            std::move(cb),        std::move(spectra),
                    std::nullopt};
  }

  int fit_degree = opts.fit_degree >= 0 ? opts.fit_degree : R.frame->window.radius();
  fit_degree = std::min(fit_degree, (grid.n_per_dim() - 1) / 2);

  const int g = pasted_count(spectra);
  std::vector<SEigenpair> pairs;
  pairs.reserve(static_cast<std::size_t>(g));
  for (int j = 0; j < g; ++j) {
    auto& p = pasted[static_cast<std::size_t>(j)];
    SymbolFit fit = symbol_from_field(p.lambda, fit_degree);
    // sigma(V_{a_j}) = {cells with at least j distinct eigenvalues}: this is
    // the support the pasting produced, by construction.
    pairs.push_back(SEigenpair{std::move(p.lambda), std::move(fit),
                               std::move(p.support),
                               std::move(spaces[static_cast<std::size_t>(j)])});
  }
  std::vector<int> kf(grid.cells());
  for (std::size_t c = 0; c < grid.cells(); ++c) kf[c] = spectra.count(c);

  SDiagonalization dec{R.frame, std::move(pairs), g, sup, true, std::move(kf)};
  return Decision{true,
                  "",
                  MeasurableMask(grid),
                  sup,
                  std::move(cb),
                  std::move(spectra),
                  std::move(dec)};
}

RealField spectral_synthesis(const RangeOperatorField& R, const SDiagonalization& dec,
                             double normal_tol) {
  if (!is_normal(R, normal_tol))
    throw error("operator is not normal; use oblique_synthesis");
  const std::size_t N = R.grid().cells();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N));
  for (std::size_t c = 0; c < N; ++c) {
    const auto& A = R.mat[c];
    if (A.rows() == 0) continue;
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(A.rows(), A.cols());
    for (const auto& p : dec.pairs) {
      const auto& E = p.eigenspace.basis[c];
      if (E.cols() == 0) continue;
      acc += p.lambda(c) * (E * E.adjoint());
    }
    v[static_cast<Eigen::Index>(c)] = spectral_norm(A - acc);
  }
  return RealField(R.grid(), std::move(v));
}

ObliqueSynthesis oblique_synthesis(const RangeOperatorField& R,
                                   const SDiagonalization& dec) {
  const std::size_t N = R.grid().cells();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N));
  double worst_cond = 1.0;
  for (std::size_t c = 0; c < N; ++c) {
    const auto& A = R.mat[c];
    const int n = static_cast<int>(A.rows());
    if (n == 0) continue;
    std::vector<std::pair<cplx, const Eigen::MatrixXcd*>> blocks;
    int total = 0;
    for (const auto& p : dec.pairs) {
      const auto& E = p.eigenspace.basis[c];
      if (E.cols() == 0) continue;
      blocks.emplace_back(p.lambda(c), &E);
      total += static_cast<int>(E.cols());
    }
    if (total != n)
      throw error("stacked eigenspace bases are not square at " +
                  cell_label(R.grid(), c));
    Eigen::MatrixXcd S(n, n);
    int col = 0;
    for (const auto& [lam, E] : blocks) {
      S.middleCols(col, E->cols()) = *E;
      col += static_cast<int>(E->cols());
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(S);
    const auto& sv = svd.singularValues();
    double cond = sv[0] / sv[sv.size() - 1];
    worst_cond = std::max(worst_cond, cond);
    Eigen::MatrixXcd T = S.partialPivLu().inverse();
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(n, n);
    col = 0;
    for (const auto& [lam, E] : blocks) {
      acc += lam * (S.middleCols(col, E->cols()) * T.middleRows(col, E->cols()));
      col += static_cast<int>(E->cols());
    }
    v[static_cast<Eigen::Index>(c)] = spectral_norm(A - acc);
  }
  ObliqueSynthesis out{RealField(R.grid(), std::move(v)), worst_cond, false, ""};
  if (dec.ess_sup_cb < 1.0) {
    double heuristic = 1.0 / ((1.0 - dec.ess_sup_cb) * (1.0 - dec.ess_sup_cb));
    if (worst_cond > heuristic) {
      out.conditioning_warning = true;
      out.warning = "oblique projections are ill conditioned: stacked-basis "
                    "condition number " +
                    std::to_string(worst_cond) + " exceeds 1/(1 - ess sup C_b)^2 = " +
                    std::to_string(heuristic);
    }
  }
  return out;
}

SDiagonalization invert_decomposition(const SDiagonalization& dec,
                                      double lower_bound_tol) {
  const FrequencyGrid& grid = dec.pairs.empty()
                                  ? dec.frame->grid
                                  : dec.pairs[0].lambda.grid;
  double worst = -1.0;
  std::size_t worst_cell = 0;
  int worst_pair = 0;
  double kinv = 0.0;
  for (const auto& p : dec.pairs) {
    for (std::size_t c = 0; c < grid.cells(); ++c) {
      if (!p.spectrum.contains(c)) continue;
      double a = std::abs(p.lambda(c));
      if (worst < 0.0 || a < worst) {
        worst = a;
        worst_cell = c;
        worst_pair = static_cast<int>(&p - dec.pairs.data());
      }
      if (a > 0.0) kinv = std::max(kinv, 1.0 / a);
    }
  }
  if (worst >= 0.0 && worst < lower_bound_tol)
    throw not_bounded_below_error(
        "symbol " + std::to_string(worst_pair + 1) +
            " is not bounded away from zero: |a| = " + std::to_string(worst) +
            " at " + cell_label(grid, worst_cell) + " under tolerance " +
            std::to_string(lower_bound_tol),
        worst_cell, worst);

  SDiagonalization out = dec;
  for (std::size_t j = 0; j < out.pairs.size(); ++j) {
    auto& p = out.pairs[j];
    const double pad = kinv + static_cast<double>(j + 1);
    Eigen::VectorXcd lam(static_cast<Eigen::Index>(grid.cells()));
    for (std::size_t c = 0; c < grid.cells(); ++c)
      lam[static_cast<Eigen::Index>(c)] =
          p.spectrum.contains(c) ? 1.0 / p.lambda(c) : cplx(pad, 0.0);
    p.lambda = ComplexField(grid, std::move(lam));
    p.symbol = symbol_from_field(p.lambda, p.symbol.coeffs.window.radius());
  }
  return out;
}

SDiagonalization split_spectrum(const SDiagonalization& dec, int j0,
                                const MeasurableMask& A) {
  if (j0 < 1 || j0 > dec.components()) throw error("split_spectrum: no such pair");
  const SEigenpair& p = dec.pairs[static_cast<std::size_t>(j0 - 1)];
  if (!A.subset_of(p.spectrum))
    throw error("split_spectrum: mask must lie inside the spectrum");
  const std::size_t na = A.count();
  if (na == 0 || na == p.spectrum.count())
    throw error("split_spectrum: mask must split the spectrum properly");
  MeasurableMask B = mask_difference(p.spectrum, A);
  const FrequencyGrid& grid = p.lambda.grid;
  const int maxdim = dec.frame->space_dim;

  auto restrict_pair = [&](const MeasurableMask& part) {
    Eigen::VectorXcd lam = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(grid.cells()));
    std::vector<Eigen::MatrixXcd> basis(grid.cells());
    std::vector<int> rank(grid.cells(), 0);
    for (std::size_t c = 0; c < grid.cells(); ++c) {
      const int n = dec.frame->dim[c];
      if (part.contains(c)) {
        lam[static_cast<Eigen::Index>(c)] = p.lambda(c);
        basis[c] = p.eigenspace.basis[c];
      } else {
        // extension by zero off the split part
        basis[c] = Eigen::MatrixXcd::Zero(n, 0);
      }
      rank[c] = n - static_cast<int>(basis[c].cols());
    }
    ComplexField lf(grid, std::move(lam));
    SymbolFit fit = symbol_from_field(lf, p.symbol.coeffs.window.radius());
    std::vector<MeasurableMask> rmasks = masks_from_ranks(grid, rank, maxdim);
    return SEigenpair{std::move(lf), std::move(fit), part,
                      KernelField{dec.frame, std::move(basis), std::move(rank),
                                  std::move(rmasks)}};
  };

  SDiagonalization out = dec;
  std::vector<SEigenpair> pairs;
  pairs.reserve(dec.pairs.size() + 1);
  for (int j = 0; j < dec.components(); ++j) {
    if (j == j0 - 1) {
      pairs.push_back(restrict_pair(A));
      pairs.push_back(restrict_pair(B));
    } else {
      pairs.push_back(dec.pairs[static_cast<std::size_t>(j)]);
    }
  }
  out.pairs = std::move(pairs);
  out.minimal = false;
  return out;
}

std::vector<int> h_field(const SDiagonalization& dec) {
  const FrequencyGrid& grid = dec.frame->grid;
  std::vector<int> h(grid.cells(), 0);
  for (const auto& p : dec.pairs)
    for (std::size_t c = 0; c < grid.cells(); ++c)
      if (p.spectrum.contains(c)) ++h[c];
  return h;
}

bool verify_h_equals_k(const SDiagonalization& dec, const FiberSpectrum& s,
                       std::size_t* first_bad) {
  std::vector<int> h = h_field(dec);
  for (std::size_t c = 0; c < s.grid.cells(); ++c) {
    if (h[c] != s.count(c)) {
      if (first_bad) *first_bad = c;
      return false;
    }
  }
  return true;
}

VerifyReport verify_decomposition(const RangeOperatorField& R,
                                  const SDiagonalization& dec,
                                  double eigen_res_tol) {
  if (eigen_res_tol < 0.0) eigen_res_tol = 1e-8 * std::max(1.0, R.norm_bound);
  const double collide_tol = 1e-12 * std::max(1.0, R.norm_bound);
  const FrequencyGrid& grid = R.grid();
  double max_res = 0.0;
  double min_sigma = 1.0;
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    const auto& A = R.mat[c];
    const int n = static_cast<int>(A.rows());
    int total = 0;
    std::vector<const Eigen::MatrixXcd*> stack;
    for (const auto& p : dec.pairs) {
      const auto& E = p.eigenspace.basis[c];
      if (p.spectrum.contains(c)) {
        if (E.cols() == 0)
          return {false, "empty eigenspace on its spectrum at " + cell_label(grid, c),
                  max_res, min_sigma};
        double res = spectral_norm(A * E - p.lambda(c) * E);
        max_res = std::max(max_res, res);
        if (res > eigen_res_tol)
          return {false, "eigenvector residual " + std::to_string(res) + " at " +
                             cell_label(grid, c),
                  max_res, min_sigma};
        stack.push_back(&E);
        total += static_cast<int>(E.cols());
      } else if (E.cols() != 0) {
        return {false, "eigenspace nonzero off its spectrum at " + cell_label(grid, c),
                max_res, min_sigma};
      }
    }
    if (total != n)
      return {false, "stacked bases do not fill the fiber at " + cell_label(grid, c),
              max_res, min_sigma};
    if (n > 0) {
      Eigen::MatrixXcd S(n, n);
      int col = 0;
      for (const auto* E : stack) {
        S.middleCols(col, E->cols()) = *E;
        col += static_cast<int>(E->cols());
      }
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(S);
      min_sigma = std::min(min_sigma, svd.singularValues()[n - 1]);
    }
    for (std::size_t p = 0; p < dec.pairs.size(); ++p)
      for (std::size_t q = p + 1; q < dec.pairs.size(); ++q) {
        if (!dec.pairs[p].spectrum.contains(c) || !dec.pairs[q].spectrum.contains(c))
          continue;
        if (std::abs(dec.pairs[p].lambda(c) - dec.pairs[q].lambda(c)) <= collide_tol)
          return {false, "symbols collide at " + cell_label(grid, c), max_res,
                  min_sigma};
      }
  }
  if (dec.ess_sup_cb < 1.0 && min_sigma + 1e-9 < 1.0 - dec.ess_sup_cb)
    return {false, "stacked bases fall below the angle floor", max_res, min_sigma};
  return {true, "", max_res, min_sigma};
}

}  // namespace sdiag

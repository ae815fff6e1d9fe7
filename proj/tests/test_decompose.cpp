#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include "sdiag/decompose.hpp"

using namespace sdiag;

namespace {

std::shared_ptr<const FiberFrame> plain_frame(const FrequencyGrid& g, int l,
                                              std::uint64_t seed) {
  LatticeWindow w(1, std::max(2, l));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Eigen::MatrixXcd> mats;
  for (std::size_t c = 0; c < g.cells(); ++c) {
    Eigen::MatrixXcd m(static_cast<Eigen::Index>(w.size()), l);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        m(i, j) = cplx(gauss(rng), gauss(rng));
    mats.push_back(std::move(m));
  }
  auto gens = std::make_shared<GeneratorSet>(g, w, std::move(mats));
  return std::make_shared<FiberFrame>(frame_from_generators(gens));
}

RangeOperatorField from_cellwise(
    std::shared_ptr<const FiberFrame> frame,
    const std::function<Eigen::MatrixXcd(double)>& mat) {
  const FrequencyGrid& g = frame->grid;
  std::vector<Eigen::MatrixXcd> mats;
  for (std::size_t c = 0; c < g.cells(); ++c) mats.push_back(mat(g.center(c)[0]));
  return operator_from_matrices(frame, mats);
}

Eigen::MatrixXcd coalescing_matrix(double x) {
  Eigen::MatrixXcd m(2, 2);
  m << 1.0, 1.0, 0.0, 2.0 - std::polar(1.0, -2.0 * std::numbers::pi * x);
  return m;
}

Eigen::MatrixXcd skewed_matrix(double) {
  Eigen::MatrixXcd m(2, 2);
  m << 1.0, 1.0, 0.0, 2.0;
  return m;
}

Eigen::MatrixXcd normal3_matrix(double x) {
  Eigen::VectorXcd d(3);
  d << std::polar(1.0, -2.0 * std::numbers::pi * x), 2.0,
      3.0 + std::polar(1.0, -2.0 * std::numbers::pi * x);
  return Eigen::MatrixXcd(d.asDiagonal());
}

Eigen::MatrixXcd span_line(cplx a, cplx b) {
  Eigen::MatrixXcd m(2, 1);
  double n = std::sqrt(std::norm(a) + std::norm(b));
  m << a / n, b / n;
  return m;
}

}  // namespace

TEST_CASE("tuple angle of two lines in C^2 is the cosine of their angle") {
  for (double theta : {0.1, 0.4, 1.0, 1.4}) {
    std::vector<Eigen::MatrixXcd> bases = {
        span_line(1.0, 0.0), span_line(std::cos(theta), std::sin(theta))};
    CHECK(angle_cb_cell(bases, 2) ==
          doctest::Approx(std::cos(theta)).epsilon(1e-12));
  }
}

TEST_CASE("tuple angle of orthogonal lines is zero") {
  std::vector<Eigen::MatrixXcd> bases = {span_line(1.0, 0.0), span_line(0.0, 1.0)};
  CHECK(angle_cb_cell(bases, 2) < 1e-12);
}

TEST_CASE("tuple angle of a repeated line is zero (pure intersection)") {
  std::vector<Eigen::MatrixXcd> bases = {span_line(1.0, 0.0), span_line(1.0, 0.0)};
  CHECK(angle_cb_cell(bases, 2) < 1e-12);
}

TEST_CASE("tuple angle needs at least two subspaces") {
  std::vector<Eigen::MatrixXcd> one = {span_line(1.0, 0.0)};
  CHECK_THROWS_AS(angle_cb_cell(one, 2), error);
}

TEST_CASE("coalescing operator: C_b matches the closed form 1/sqrt(1+4sin^2)") {
  const int n = 128;
  FrequencyGrid g(1, n);
  auto frame = plain_frame(g, 2, 1001);
  RangeOperatorField R = from_cellwise(frame, coalescing_matrix);
  Decision d = decide_s_diagonalizable(R);
  CHECK(!d.yes);
  CHECK(d.reason == "angle degeneration");
  CHECK(!d.decomposition.has_value());
  for (std::size_t c = 0; c < g.cells(); ++c) {
    double x = g.center(c)[0];
    double s = 2.0 * std::sin(std::numbers::pi * x);
    double oracle = 1.0 / std::sqrt(1.0 + s * s);
    CHECK(d.cb(c) == doctest::Approx(oracle).epsilon(1e-8));
  }
  double s0 = 2.0 * std::sin(std::numbers::pi * 0.5 / n);
  CHECK(d.ess_sup_cb == doctest::Approx(1.0 / std::sqrt(1.0 + s0 * s0)).epsilon(1e-10));
  CHECK(d.ess_sup_cb > 1.0 - 0.01);
}

TEST_CASE("skewed operator: constant angle 1/sqrt(2), YES with two components") {
  const int n = 64;
  FrequencyGrid g(1, n);
  auto frame = plain_frame(g, 2, 1002);
  RangeOperatorField R = from_cellwise(frame, skewed_matrix);
  Decision d = decide_s_diagonalizable(R);
  REQUIRE(d.yes);
  CHECK(d.ess_sup_cb == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-10));
  REQUIRE(d.decomposition.has_value());
  const SDiagonalization& dec = *d.decomposition;
  CHECK(dec.g == 2);
  CHECK(dec.minimal);
  CHECK(dec.components() == 2);
  for (const auto& p : dec.pairs) CHECK(mask_measure(p.spectrum) == 1.0);
  // Symbols are the constants 1 and 2 (canonical order).
  CHECK(std::abs(dec.pairs[0].lambda(0) - cplx(1.0, 0.0)) < 1e-10);
  CHECK(std::abs(dec.pairs[1].lambda(3) - cplx(2.0, 0.0)) < 1e-10);
  CHECK(dec.pairs[0].symbol.residual < 1e-12);
  CHECK(dec.pairs[1].symbol.residual < 1e-12);
}

TEST_CASE("defective operator: NO with the defect mask, no angle computed") {
  FrequencyGrid g(1, 32);
  auto frame = plain_frame(g, 2, 1003);
  RangeOperatorField R = from_cellwise(frame, [](double) {
    Eigen::MatrixXcd m(2, 2);
    m << 0.0, 1.0, 0.0, 0.0;
    return m;
  });
  Decision d = decide_s_diagonalizable(R);
  CHECK(!d.yes);
  CHECK(d.reason == "defective fibers");
  CHECK(mask_measure(d.defect_mask) == 1.0);
  CHECK(d.ess_sup_cb < 0.0);  // sentinel: the angle stage never ran
  CHECK(!d.decomposition.has_value());
}

TEST_CASE("normal three-branch operator: YES, nested unit supports, h equals k") {
  const int n = 64;
  FrequencyGrid g(1, n);
  auto frame = plain_frame(g, 3, 1004);
  RangeOperatorField R = from_cellwise(frame, normal3_matrix);
  Decision d = decide_s_diagonalizable(R);
  REQUIRE(d.yes);
  CHECK(d.ess_sup_cb < 1e-10);  // orthogonal eigenspaces
  REQUIRE(d.decomposition.has_value());
  const SDiagonalization& dec = *d.decomposition;
  CHECK(dec.g == 3);
  CHECK(dec.components() == 3);
  for (const auto& p : dec.pairs) {
    CHECK(mask_measure(p.spectrum) == 1.0);
    CHECK(p.symbol.residual < 1e-10);
    for (std::size_t c = 0; c < g.cells(); ++c) {
      // Fitted symbol agrees with the sampled field everywhere.
      CHECK(std::abs(eval_symbol_at(p.symbol.coeffs, g.center(c)) - p.lambda(c)) <
            1e-10);
    }
  }
  CHECK(verify_h_equals_k(dec, d.spectra));
  std::vector<int> h = h_field(dec);
  for (std::size_t c = 0; c < g.cells(); ++c) CHECK(h[c] == 3);
  VerifyReport vr = verify_decomposition(R, dec);
  CHECK(vr.ok);
  CHECK(vr.max_eigen_residual < 1e-10);
  CHECK(vr.min_stack_sigma > 0.99);  // orthogonal stack
}

TEST_CASE("spectral synthesis rebuilds a normal operator, refuses non-normal") {
  FrequencyGrid g(1, 64);
  auto frame3 = plain_frame(g, 3, 1005);
  RangeOperatorField R = from_cellwise(frame3, normal3_matrix);
  Decision d = decide_s_diagonalizable(R);
  REQUIRE(d.yes);
  RealField res = spectral_synthesis(R, *d.decomposition);
  CHECK(ess_sup(res) < 1e-10);

  auto frame2 = plain_frame(g, 2, 1006);
  RangeOperatorField S = from_cellwise(frame2, skewed_matrix);
  Decision ds = decide_s_diagonalizable(S);
  REQUIRE(ds.yes);
  CHECK_THROWS_AS(spectral_synthesis(S, *ds.decomposition), error);
}

TEST_CASE("oblique synthesis rebuilds any YES operator") {
  FrequencyGrid g(1, 64);
  auto frame = plain_frame(g, 2, 1007);
  RangeOperatorField R = from_cellwise(frame, skewed_matrix);
  Decision d = decide_s_diagonalizable(R);
  REQUIRE(d.yes);
  ObliqueSynthesis syn = oblique_synthesis(R, *d.decomposition);
  CHECK(ess_sup(syn.residual) < 1e-10);
  // Eigenvector matrix [e1, (1,1)/sqrt(2)]: condition number 1 + sqrt(2).
  CHECK(syn.worst_condition ==
        doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-8));
  CHECK(!syn.conditioning_warning);  // 2.414 << 1/(1 - 1/sqrt(2))^2 = 11.66

  // For a normal operator the oblique route coincides with the spectral one.
  auto frame3 = plain_frame(g, 3, 1008);
  RangeOperatorField N = from_cellwise(frame3, normal3_matrix);
  Decision dn = decide_s_diagonalizable(N);
  REQUIRE(dn.yes);
  ObliqueSynthesis syn2 = oblique_synthesis(N, *dn.decomposition);
  CHECK(ess_sup(syn2.residual) < 1e-10);
  CHECK(syn2.worst_condition == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("conditioning warning fires when the stored angle understates it") {
  FrequencyGrid g(1, 32);
  auto frame = plain_frame(g, 2, 1009);
  RangeOperatorField R = from_cellwise(frame, skewed_matrix);
  Decision d = decide_s_diagonalizable(R);
  REQUIRE(d.yes);
  SDiagonalization dec = *d.decomposition;
  dec.ess_sup_cb = 0.0;  // claim orthogonality: the threshold drops to 1
  ObliqueSynthesis syn = oblique_synthesis(R, dec);
  CHECK(syn.conditioning_warning);
  CHECK(!syn.warning.empty());
}

TEST_CASE("inverting a decomposition reciprocates symbols on their supports") {
  FrequencyGrid g(1, 64);
  auto frame = plain_frame(g, 3, 1010);
  RangeOperatorField R = from_cellwise(frame, normal3_matrix);
  Decision d = decide_s_diagonalizable(R);
  REQUIRE(d.yes);
  const SDiagonalization& dec = *d.decomposition;
  SDiagonalization inv = invert_decomposition(dec);
  REQUIRE(inv.components() == dec.components());
  for (int j = 0; j < dec.components(); ++j) {
    const auto& p = dec.pairs[static_cast<std::size_t>(j)];
    const auto& q = inv.pairs[static_cast<std::size_t>(j)];
    CHECK(q.spectrum == p.spectrum);
    for (std::size_t c = 0; c < g.cells(); ++c) {
      if (p.spectrum.contains(c)) {
        CHECK(std::abs(q.lambda(c) * p.lambda(c) - cplx(1.0, 0.0)) < 1e-12);
        CHECK(q.eigenspace(c) == p.eigenspace(c));  // same bases, bitwise
      } else {
        CHECK(q.lambda(c).imag() == 0.0);
        CHECK(q.lambda(c).real() > 0.0);  // positive padding off support
      }
    }
  }
  // The inverse decomposition diagonalizes the inverted operator.
  RangeOperatorField Rinv = invert(R);
  VerifyReport vr = verify_decomposition(Rinv, inv);
  CHECK(vr.ok);

  // A symbol touching zero blocks the inversion.
  auto frame1 = plain_frame(g, 1, 1011);
  RangeOperatorField Z = from_cellwise(frame1, [](double x) {
    Eigen::MatrixXcd m(1, 1);
    m(0, 0) = 1.0 - std::polar(1.0, -2.0 * std::numbers::pi * x);
    return m;
  });
  Decision dz = decide_s_diagonalizable(Z);
  REQUIRE(dz.yes);
  CHECK_THROWS_AS(invert_decomposition(*dz.decomposition, 0.1),
                  not_bounded_below_error);
}

TEST_CASE("splitting a spectrum yields a valid non-minimal refinement") {
  const int n = 64;
  FrequencyGrid g(1, n);
  auto frame = plain_frame(g, 3, 1012);
  RangeOperatorField R = from_cellwise(frame, normal3_matrix);
  Decision d = decide_s_diagonalizable(R);
  REQUIRE(d.yes);
  const SDiagonalization& dec = *d.decomposition;

  std::vector<std::uint8_t> bits(n, 0);
  for (std::size_t c = 0; c < g.cells(); ++c)
    if (g.center(c)[0] < 0.5) bits[c] = 1;
  MeasurableMask lower(g, bits);

  SDiagonalization ref = split_spectrum(dec, 1, lower);
  CHECK(ref.components() == dec.components() + 1);
  CHECK(!ref.minimal);
  CHECK(ref.pairs[0].spectrum == lower);
  CHECK(mask_measure(ref.pairs[1].spectrum) == 0.5);
  CHECK(mask_intersect(ref.pairs[0].spectrum, ref.pairs[1].spectrum).empty());
  // The refinement still verifies against the operator, and h is unchanged.
  VerifyReport vr = verify_decomposition(R, ref);
  CHECK(vr.ok);
  CHECK(verify_h_equals_k(ref, d.spectra));
  // Extension by zero off the split parts.
  for (std::size_t c = 0; c < g.cells(); ++c) {
    if (!ref.pairs[0].spectrum.contains(c)) {
      CHECK(ref.pairs[0].lambda(c) == cplx(0.0, 0.0));
      CHECK(ref.pairs[0].eigenspace(c).cols() == 0);
    }
  }

  // Degenerate masks are rejected.
  CHECK_THROWS_AS(split_spectrum(dec, 1, MeasurableMask(g)), error);
  CHECK_THROWS_AS(split_spectrum(dec, 1, dec.pairs[0].spectrum), error);
  CHECK_THROWS_AS(split_spectrum(dec, 0, lower), error);
}

TEST_CASE("symbol fitting: exact on trig polynomials, honest on a step") {
  const int n = 64;
  FrequencyGrid g(1, n);
  // Trig polynomial of degree 2.
  Eigen::VectorXcd s(n);
  LatticeWindow w(1, 2);
  Eigen::VectorXcd coeffs(5);
  coeffs << cplx(0.3, 0.1), cplx(-1.0, 0.0), cplx(2.0, -0.5), cplx(0.0, 1.0),
      cplx(0.7, 0.7);
  Sequence a(w, coeffs);
  ComplexField poly = eval_symbol(a, g);
  SymbolFit fit = symbol_from_field(poly, 2);
  CHECK(fit.residual < 1e-12);
  for (std::size_t i = 0; i < w.size(); ++i)
    CHECK(std::abs(fit.coeffs.a[static_cast<Eigen::Index>(i)] -
                   coeffs[static_cast<Eigen::Index>(i)]) < 1e-12);

  // A discontinuous field cannot be fit: the residual stays order one.
  Eigen::VectorXcd st(n);
  for (std::size_t c = 0; c < g.cells(); ++c)
    st[static_cast<Eigen::Index>(c)] = g.center(c)[0] < 0.5 ? 1.0 : 2.0;
  ComplexField step(g, st);
  SymbolFit sfit = symbol_from_field(step, 5);
  CHECK(sfit.residual > 0.1);
}

TEST_CASE("verify_decomposition catches tampered bases and missing pairs") {
  FrequencyGrid g(1, 32);
  auto frame = plain_frame(g, 2, 1013);
  RangeOperatorField R = from_cellwise(frame, skewed_matrix);
  Decision d = decide_s_diagonalizable(R);
  REQUIRE(d.yes);

  SDiagonalization broken = *d.decomposition;
  broken.pairs[1].eigenspace.basis[5] = Eigen::MatrixXcd::Zero(2, 0);
  broken.pairs[1].eigenspace.rank[5] = 2;
  VerifyReport vr = verify_decomposition(R, broken);
  CHECK(!vr.ok);
  CHECK(!vr.what.empty());

  SDiagonalization missing = *d.decomposition;
  missing.pairs.pop_back();
  CHECK(!verify_h_equals_k(missing, d.spectra));
  std::size_t bad = 1234;
  CHECK(!verify_h_equals_k(missing, d.spectra, &bad));
  CHECK(bad < g.cells());
}

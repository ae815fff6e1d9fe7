#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include "sdiag/fiberize.hpp"

using namespace sdiag;

namespace {

// Deterministic band-limited bump: a Gaussian envelope times a fixed 6-term
// trigonometric polynomial. Smooth, decays like exp(-x^2/8), essentially
// supported well inside |x| < 8.
cplx test_signal_hat(double x) {
  static const std::array<cplx, 6> c = {
      cplx(0.31, -0.12), cplx(-0.54, 0.20), cplx(0.87, 0.44),
      cplx(0.15, -0.71), cplx(-0.33, 0.08), cplx(0.26, 0.59)};
  cplx p(0.0, 0.0);
  for (int m = -3; m <= 2; ++m)
    p += c[static_cast<std::size_t>(m + 3)] *
         std::polar(1.0, -2.0 * std::numbers::pi * m * x);
  return std::exp(-x * x / 8.0) * p;
}

}  // namespace

TEST_CASE("lattice window enumerates lexicographically, first axis major") {
  LatticeWindow w1(1, 2);
  CHECK(w1.size() == 5);
  CHECK(w1.point(0)[0] == -2);
  CHECK(w1.point(4)[0] == 2);
  CHECK(w1.index({0, 0}) == 2);
  CHECK(w1.index({3, 0}) == LatticeWindow::npos);

  LatticeWindow w2(2, 1);
  CHECK(w2.size() == 9);
  // (-1,-1), (-1,0), (-1,1), (0,-1), ...
  CHECK(w2.point(0)[0] == -1);
  CHECK(w2.point(0)[1] == -1);
  CHECK(w2.point(1)[0] == -1);
  CHECK(w2.point(1)[1] == 0);
  CHECK(w2.point(3)[0] == 0);
  CHECK(w2.point(3)[1] == -1);
  for (std::size_t i = 0; i < w2.size(); ++i)
    CHECK(w2.index(w2.point(i)) == i);
}

TEST_CASE("grid DFT recovers trig polynomial coefficients exactly") {
  FrequencyGrid g(1, 64);
  LatticeWindow w(1, 3);
  Eigen::VectorXcd coeffs(7);
  coeffs << cplx(1, 0), cplx(0, -2), cplx(0.5, 0.5), cplx(3, 0), cplx(-1, 1),
      cplx(0, 0), cplx(0.25, -0.75);
  Sequence a(w, coeffs);
  ComplexField samples = eval_symbol(a, g);
  Sequence back = sample_to_sequence(samples, 3);
  REQUIRE(back.window == w);
  for (std::size_t i = 0; i < w.size(); ++i)
    CHECK(std::abs(back.a[static_cast<Eigen::Index>(i)] -
                   coeffs[static_cast<Eigen::Index>(i)]) < 1e-12);
}

TEST_CASE("grid DFT refuses windows beyond the aliasing limit") {
  FrequencyGrid g(1, 8);
  ComplexField f(g, Eigen::VectorXcd::Zero(8));
  CHECK_NOTHROW(sample_to_sequence(f, 3));   // 2*3+1 = 7 <= 8
  CHECK_THROWS_AS(sample_to_sequence(f, 4), error);  // 9 > 8
}

TEST_CASE("fiber mass reproduces the squared L2 norm of the signal") {
  const int K = 8, n = 256;
  FrequencyGrid g(1, n);
  LatticeWindow w(1, K);
  FourierEvaluator fhat = [](const std::array<double, 2>& x) {
    return test_signal_hat(x[0]);
  };
  FiberField F = fiberize_signal(fhat, g, w);
  double mass = fiber_mass(F);

  // Independent quadrature of the same quantity: composite Simpson over the
  // exact union of sampled intervals, [-K, K+1).
  const long panels = 1 << 18;
  const double lo = -double(K), hi = double(K) + 1.0;
  const double h = (hi - lo) / double(panels);
  double integral = std::norm(test_signal_hat(lo)) + std::norm(test_signal_hat(hi));
  for (long i = 1; i < panels; ++i)
    integral += (i % 2 ? 4.0 : 2.0) * std::norm(test_signal_hat(lo + h * double(i)));
  integral *= h / 3.0;

  CHECK(std::abs(mass - integral) < 1e-6 * integral);
}

TEST_CASE("shifting the signal modulates the fibers by a unit character") {
  const int K = 4, n = 64;
  FrequencyGrid g(1, n);
  LatticeWindow w(1, K);
  const std::array<int, 2> k0 = {3, 0};
  FourierEvaluator fhat = [](const std::array<double, 2>& x) {
    return test_signal_hat(x[0]);
  };
  FourierEvaluator shifted = [&](const std::array<double, 2>& x) {
    return std::polar(1.0, -2.0 * std::numbers::pi * (x[0] * k0[0])) *
           test_signal_hat(x[0]);
  };
  FiberField F = fiberize_signal(fhat, g, w);
  FiberField Fs = fiberize_signal(shifted, g, w);
  for (std::size_t c = 0; c < g.cells(); ++c) {
    cplx chi = unit_character(g.center(c), k0, 1);
    double diff = (Fs.v[c] - chi * F.v[c]).norm();
    CHECK(diff < 1e-12 * (1.0 + F.v[c].norm()));
  }
}

namespace {

std::shared_ptr<GeneratorSet> random_generators(const FrequencyGrid& g,
                                                const LatticeWindow& w, int l,
                                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Eigen::MatrixXcd> mats;
  mats.reserve(g.cells());
  for (std::size_t c = 0; c < g.cells(); ++c) {
    Eigen::MatrixXcd m(static_cast<Eigen::Index>(w.size()), l);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        m(i, j) = cplx(gauss(rng), gauss(rng));
    mats.push_back(std::move(m));
  }
  return std::make_shared<GeneratorSet>(g, w, std::move(mats));
}

}  // namespace

TEST_CASE("frame bases are orthonormal and full rank for generic generators") {
  FrequencyGrid g(1, 64);
  LatticeWindow w(1, 2);
  auto gens = random_generators(g, w, 3, 20240501u);
  FiberFrame frame = frame_from_generators(gens);
  CHECK(frame.space_dim == 3);
  CHECK(mask_measure(frame.support) == 1.0);
  for (std::size_t c = 0; c < g.cells(); ++c) {
    REQUIRE(frame.dim[c] == 3);
    const auto& B = frame.B(c);
    double err = (B.adjoint() * B - Eigen::MatrixXcd::Identity(3, 3)).norm();
    CHECK(err < 1e-12);
    CHECK(frame.picked[c].size() == 3);
  }
}

TEST_CASE("frame construction is deterministic and span-idempotent") {
  FrequencyGrid g(1, 32);
  LatticeWindow w(1, 2);
  auto gens = random_generators(g, w, 2, 99887766u);
  FiberFrame f1 = frame_from_generators(gens);
  FiberFrame f2 = frame_from_generators(gens);
  for (std::size_t c = 0; c < g.cells(); ++c) {
    CHECK(f1.picked[c] == f2.picked[c]);
    CHECK(f1.basis[c] == f2.basis[c]);  // bitwise: the algorithm is deterministic
  }
  // Using the orthonormal basis itself as a generator set reproduces the span.
  std::vector<Eigen::MatrixXcd> bases = f1.basis;
  auto gens2 = std::make_shared<GeneratorSet>(g, w, std::move(bases));
  FiberFrame f3 = frame_from_generators(gens2);
  for (std::size_t c = 0; c < g.cells(); ++c) {
    REQUIRE(f3.dim[c] == f1.dim[c]);
    const auto& B1 = f1.B(c);
    const auto& B3 = f3.B(c);
    double dist = (B1 * B1.adjoint() - B3 * B3.adjoint()).norm();
    CHECK(dist < 1e-8);
  }
}

TEST_CASE("rank partition detects a generator vanishing on half the torus") {
  const int n = 64;
  FrequencyGrid g(1, n);
  LatticeWindow w(1, 1);  // M = 3
  std::vector<Eigen::MatrixXcd> mats;
  for (std::size_t c = 0; c < g.cells(); ++c) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(3, 2);
    m(1, 0) = 1.0;                            // generator 1: constant e_0 component
    if (g.center(c)[0] >= 0.5) m(2, 1) = 1.0;  // generator 2: upper half only
    mats.push_back(std::move(m));
  }
  auto gens = std::make_shared<GeneratorSet>(g, w, std::move(mats));
  FiberFrame frame = frame_from_generators(gens);
  CHECK(frame.space_dim == 2);
  REQUIRE(frame.rank_masks.size() == 3);
  CHECK(mask_measure(frame.rank_masks[0]) == 0.0);
  CHECK(mask_measure(frame.rank_masks[1]) == 0.5);
  CHECK(mask_measure(frame.rank_masks[2]) == 0.5);
  CHECK(mask_measure(frame.support) == 1.0);
  // The rank partition is a partition: pairwise disjoint, union the torus.
  MeasurableMask acc(g);
  for (const auto& A : frame.rank_masks) {
    CHECK(mask_intersect(acc, A).empty());
    acc = mask_union(acc, A);
  }
  CHECK(mask_measure(acc) == 1.0);
  // Rank masks are nested tails: {n >= j} shrinks as j grows.
  for (std::size_t c = 0; c < g.cells(); ++c)
    CHECK(frame.dim[c] == (g.center(c)[0] >= 0.5 ? 2 : 1));
}

TEST_CASE("duplicate generators are rejected by the greedy sweep") {
  FrequencyGrid g(1, 16);
  LatticeWindow w(1, 1);
  std::vector<Eigen::MatrixXcd> mats;
  for (std::size_t c = 0; c < g.cells(); ++c) {
    Eigen::MatrixXcd m(3, 2);
    m.col(0) << cplx(1, 0), cplx(0, 2), cplx(-1, 0.5);
    m.col(1) = m.col(0);  // exact duplicate
    mats.push_back(std::move(m));
  }
  auto gens = std::make_shared<GeneratorSet>(g, w, std::move(mats));
  FiberFrame frame = frame_from_generators(gens);
  for (std::size_t c = 0; c < g.cells(); ++c) {
    CHECK(frame.dim[c] == 1);
    REQUIRE(frame.picked[c].size() == 1);
    CHECK(frame.picked[c][0] == 0);  // the first column wins deterministically
  }
}

TEST_CASE("projection onto the fiber span fixes members and is idempotent") {
  FrequencyGrid g(1, 32);
  LatticeWindow w(1, 2);
  auto gens = random_generators(g, w, 2, 31415926u);
  FiberFrame frame = frame_from_generators(gens);

  std::mt19937_64 rng(404);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Eigen::VectorXcd> inside, outside;
  for (std::size_t c = 0; c < g.cells(); ++c) {
    Eigen::VectorXcd x(2);
    x << cplx(gauss(rng), gauss(rng)), cplx(gauss(rng), gauss(rng));
    inside.push_back(gens->G[c] * x);
    Eigen::VectorXcd y(static_cast<Eigen::Index>(w.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = cplx(gauss(rng), gauss(rng));
    outside.push_back(y);
  }
  FiberField fin(g, w, inside);
  FiberField fproj = project_onto_fiber(frame, fin);
  for (std::size_t c = 0; c < g.cells(); ++c)
    CHECK((fproj.v[c] - fin.v[c]).norm() < 1e-12 * (1.0 + fin.v[c].norm()));

  FiberField fout(g, w, outside);
  FiberField p1 = project_onto_fiber(frame, fout);
  FiberField p2 = project_onto_fiber(frame, p1);
  for (std::size_t c = 0; c < g.cells(); ++c)
    CHECK((p2.v[c] - p1.v[c]).norm() < 1e-12 * (1.0 + p1.v[c].norm()));
}

TEST_CASE("sample-based fiberization checks its inputs") {
  FrequencyGrid g(1, 16), other(1, 32);
  LatticeWindow w(1, 1);
  std::vector<ComplexField> comps(3, ComplexField(g, Eigen::VectorXcd::Zero(16)));
  CHECK_NOTHROW(fiberize_signal(comps, g, w));
  CHECK_THROWS_AS(fiberize_signal(comps, other, w), error);
  comps.pop_back();
  CHECK_THROWS_AS(fiberize_signal(comps, g, w), error);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sdiag/grid.hpp"

using namespace sdiag;

TEST_CASE("grid geometry: cell count, centers, index round trip") {
  FrequencyGrid g(1, 8);
  CHECK(g.cells() == 8);
  CHECK(g.center(0)[0] == 0.5 / 8);
  CHECK(g.center(7)[0] == 7.5 / 8);
  for (std::size_t c = 0; c < g.cells(); ++c)
    CHECK(g.index(g.coords(c)) == c);

  FrequencyGrid g2(2, 4);
  CHECK(g2.cells() == 16);
  for (std::size_t c = 0; c < g2.cells(); ++c)
    CHECK(g2.index(g2.coords(c)) == c);
  // First axis is the major axis of the enumeration.
  CHECK(g2.coords(0)[0] == 0);
  CHECK(g2.coords(0)[1] == 0);
  CHECK(g2.coords(1)[1] == 1);
  auto w = g2.center(5);  // coords (1,1)
  CHECK(w[0] == 1.5 / 4);
  CHECK(w[1] == 1.5 / 4);
}

TEST_CASE("grid rejects unsupported dimensions and sizes") {
  CHECK_THROWS_AS(FrequencyGrid(3, 4), error);
  CHECK_THROWS_AS(FrequencyGrid(0, 4), error);
  CHECK_THROWS_AS(FrequencyGrid(1, 0), error);
}

TEST_CASE("ess-sup of a constant field is that constant") {
  FrequencyGrid g(1, 64);
  RealField f(g, Eigen::VectorXd::Constant(64, 5.0));
  CHECK(ess_sup(f) == 5.0);
}

TEST_CASE("ess-sup of the coordinate field hits the last cell center") {
  const int n = 1000;
  FrequencyGrid g(1, n);
  Eigen::VectorXd v(n);
  for (std::size_t c = 0; c < g.cells(); ++c)
    v[static_cast<Eigen::Index>(c)] = g.center(c)[0];
  RealField f(g, v);
  // Largest center is (n-0.5)/n = 0.9995 exactly.
  CHECK(ess_sup(f) == 999.5 / 1000);
}

TEST_CASE("ess-sup of |sin 2 pi w| approaches 1 on a fine grid") {
  const int n = 1000;
  FrequencyGrid g(1, n);
  Eigen::VectorXd v(n);
  for (std::size_t c = 0; c < g.cells(); ++c)
    v[static_cast<Eigen::Index>(c)] =
        std::abs(std::sin(2.0 * std::numbers::pi * g.center(c)[0]));
  RealField f(g, v);
  double m = ess_sup(f);
  CHECK(m <= 1.0);
  CHECK(m > 1.0 - 1e-4);
}

TEST_CASE("ess-sup over a null set throws") {
  FrequencyGrid g(1, 16);
  RealField f(g, Eigen::VectorXd::Zero(16));
  MeasurableMask empty(g);
  CHECK(empty.empty());
  CHECK_THROWS_AS(ess_sup(f, empty), null_set_error);
}

TEST_CASE("measure of a half-open threshold set is exact") {
  const int n = 1000;
  FrequencyGrid g(1, n);
  std::vector<std::uint8_t> bits(n, 0);
  for (std::size_t c = 0; c < g.cells(); ++c)
    if (g.center(c)[0] < 0.25) bits[c] = 1;
  MeasurableMask A(g, bits);
  CHECK(A.count() == 250);
  CHECK(mask_measure(A) == 0.25);
}

TEST_CASE("measure is additive on unions and intersections") {
  const int n = 256;
  FrequencyGrid g(1, n);
  std::mt19937_64 rng(12345);
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::uint8_t> ba(n), bb(n);
    for (int c = 0; c < n; ++c) {
      ba[static_cast<std::size_t>(c)] = coin(rng) ? 1 : 0;
      bb[static_cast<std::size_t>(c)] = coin(rng) ? 1 : 0;
    }
    MeasurableMask A(g, ba), B(g, bb);
    // Inclusion–exclusion holds exactly because the measure is a cell count.
    CHECK(mask_measure(mask_union(A, B)) + mask_measure(mask_intersect(A, B)) ==
          mask_measure(A) + mask_measure(B));
    CHECK(mask_measure(A) + mask_measure(A.complement()) == 1.0);
    CHECK(mask_measure(mask_difference(A, B)) ==
          mask_measure(A) - mask_measure(mask_intersect(A, B)));
  }
}

TEST_CASE("ess-sup over a union is the max over the parts") {
  const int n = 128;
  FrequencyGrid g(1, n);
  Eigen::VectorXd v(n);
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int c = 0; c < n; ++c) v[c] = u(rng);
  RealField f(g, v);
  std::vector<std::uint8_t> ba(n, 0), bb(n, 0);
  for (int c = 0; c < n / 2; ++c) ba[static_cast<std::size_t>(c)] = 1;
  for (int c = n / 4; c < n; ++c) bb[static_cast<std::size_t>(c)] = 1;
  MeasurableMask A(g, ba), B(g, bb);
  CHECK(ess_sup(f, mask_union(A, B)) ==
        std::max(ess_sup(f, A), ess_sup(f, B)));
}

TEST_CASE("mask set/subset/complement behave like set operations") {
  FrequencyGrid g(1, 10);
  MeasurableMask empty(g);
  MeasurableMask full(g, true);
  CHECK(full.count() == 10);
  CHECK(empty.subset_of(full));
  CHECK(!full.subset_of(empty));
  MeasurableMask one = empty.set(3, true);
  CHECK(one.contains(3));
  CHECK(!empty.contains(3));  // set() copies
  CHECK(one.subset_of(full));
  CHECK(mask_intersect(one, one.complement()).empty());
  CHECK(mask_union(one, one.complement()) == full);
}

TEST_CASE("fields reject size mismatches") {
  FrequencyGrid g(1, 8);
  CHECK_THROWS_AS(RealField(g, Eigen::VectorXd::Zero(7)), error);
  CHECK_THROWS_AS(ComplexField(g, Eigen::VectorXcd::Zero(9)), error);
  CHECK_THROWS_AS(MatrixField(g, std::vector<Eigen::MatrixXcd>(3)), error);
}

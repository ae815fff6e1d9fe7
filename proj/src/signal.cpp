#include "sdiag/signal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <Eigen/QR>

namespace sdiag {

namespace {
constexpr int kConvolutionCap = 64;
}

CoefficientVector::CoefficientVector(std::vector<Sequence> ch)
    : channel(std::move(ch)) {
  if (channel.empty()) throw error("coefficient vector needs at least one channel");
  for (const auto& s : channel)
    if (s.window != channel[0].window)
      throw error("coefficient channels must share one window");
}

double coeff_norm(const CoefficientVector& f) {
  double s = 0.0;
  for (const auto& ch : f.channel) s += ch.a.squaredNorm();
  return std::sqrt(s);
}

Sequence convolve(const Sequence& a, const Sequence& b) {
  if (a.window.dim() != b.window.dim())
    throw error("convolution operands differ in dimension");
  const int d = a.window.dim();
  const int Kout = a.window.radius() + b.window.radius();
  if (Kout > kConvolutionCap)
    throw error("combined convolution support exceeds the cap (radius " +
                std::to_string(kConvolutionCap) + ")");
  LatticeWindow wout(d, Kout);
  Sequence out(wout);
  for (std::size_t m = 0; m < wout.size(); ++m) {
    auto km = wout.point(m);
    cplx s(0.0, 0.0);
    for (std::size_t i = 0; i < a.window.size(); ++i) {
      auto ka = a.window.point(i);
      std::array<int, 2> kb{km[0] - ka[0], d == 2 ? km[1] - ka[1] : 0};
      std::size_t ib = b.window.index(kb);
      if (ib == LatticeWindow::npos) continue;
      s += a.a[static_cast<Eigen::Index>(i)] * b.a[static_cast<Eigen::Index>(ib)];
    }
    out.a[static_cast<Eigen::Index>(m)] = s;
  }
  return out;
}

CoefficientVector apply_lambda(const Sequence& a, const CoefficientVector& f) {
  std::vector<Sequence> out;
  out.reserve(f.channel.size());
  for (const auto& ch : f.channel) out.push_back(convolve(a, ch));
  return CoefficientVector(std::move(out));
}

CoefficientVector shift_coeffs(const CoefficientVector& f,
                               const std::array<int, 2>& k0) {
  std::vector<Sequence> out;
  out.reserve(f.channel.size());
  for (const auto& ch : f.channel) out.push_back(shift_sequence(ch, k0));
  return CoefficientVector(std::move(out));
}

bool frame_full_rank(const FiberFrame& frame, std::size_t* bad_cell) {
  const int l = frame.source ? frame.source->count : frame.space_dim;
  for (std::size_t c = 0; c < frame.grid.cells(); ++c) {
    if (frame.dim[c] != l) {
      if (bad_cell) *bad_cell = c;
      return false;
    }
  }
  return true;
}

Eigen::MatrixXcd coeff_symbols(const CoefficientVector& f, const FrequencyGrid& grid) {
  Eigen::MatrixXcd beta(static_cast<Eigen::Index>(grid.cells()), f.channels());
  for (int i = 0; i < f.channels(); ++i) {
    ComplexField s = eval_symbol(f.channel[static_cast<std::size_t>(i)], grid);
    beta.col(i) = s.v;
  }
  return beta;
}

CoefficientVector apply_operator(const RangeOperatorField& R,
                                 const CoefficientVector& f, int out_radius,
                                 double in_tol) {
  const FiberFrame& frame = *R.frame;
  const FrequencyGrid& grid = frame.grid;
  if (!frame.source) throw error("frame carries no generator set");
  const GeneratorSet& gens = *frame.source;
  if (f.channels() != gens.count)
    throw error("coefficient channels do not match the generator count");
  if (f.dim() != grid.dim()) throw error("coefficient dimension does not match grid");
  if (2 * out_radius + 1 > grid.n_per_dim())
    throw error("output window exceeds the aliasing limit of the grid");
  std::size_t bad = 0;
  if (!frame_full_rank(frame, &bad))
    throw rank_deficient_error(
        "generator matrix is rank deficient at cell " + std::to_string(bad) +
            "; coefficient reconstruction needs full column rank",
        bad);

  Eigen::MatrixXcd beta = coeff_symbols(f, grid);  // cells x l
  Eigen::MatrixXcd beta_out(static_cast<Eigen::Index>(grid.cells()), f.channels());
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    const Eigen::MatrixXcd& G = gens.G[c];
    const Eigen::MatrixXcd& B = frame.basis[c];
    Eigen::VectorXcd v = G * beta.row(static_cast<Eigen::Index>(c)).transpose();
    Eigen::VectorXcd w = B.adjoint() * v;
    double res = (v - B * w).norm();
    if (res > in_tol * std::max(1.0, v.norm())) {
      auto wc = grid.center(c);
      throw not_in_space_error(
          "f not in V: fiber leaves J(omega) at cell " + std::to_string(c) +
              " (omega = " + std::to_string(wc[0]) +
              (grid.dim() == 2 ? ", " + std::to_string(wc[1]) : std::string()) +
              "), residual " + std::to_string(res),
          c, res);
    }
    Eigen::VectorXcd u = B * (R.mat[c] * w);
    // Full column rank: least squares through Householder QR is exact here.
    beta_out.row(static_cast<Eigen::Index>(c)) =
        G.householderQr().solve(u).transpose();
  }
  std::vector<Sequence> out;
  out.reserve(static_cast<std::size_t>(f.channels()));
  for (int i = 0; i < f.channels(); ++i) {
    ComplexField comp(grid, beta_out.col(i));
    out.push_back(sample_to_sequence(comp, out_radius));
  }
  return CoefficientVector(std::move(out));
}

CoefficientVector load_coefficients(std::istream& in, int d, int channels) {
  struct Entry {
    int ch;
    std::array<int, 2> k;
    cplx v;
  };
  std::vector<Entry> entries;
  int radius = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string stripped = line.substr(0, line.find('#'));
    if (stripped.find_first_not_of(" \t\r\n") == std::string::npos)
      continue;  // blank or comment line
    std::istringstream is(stripped);
    int ch;
    if (!(is >> ch)) throw parse_error("coefficient line must start with a channel index", lineno);
    std::array<int, 2> k{0, 0};
    for (int a = 0; a < d; ++a)
      if (!(is >> k[a])) throw parse_error("coefficient line needs " +
                                               std::to_string(d) + " indices",
                                           lineno);
    double re, im;
    if (!(is >> re >> im)) throw parse_error("coefficient line needs re im", lineno);
    if (ch < 1 || ch > channels)
      throw parse_error("channel index out of range", lineno);
    entries.push_back(Entry{ch, k, cplx(re, im)});
    radius = std::max({radius, std::abs(k[0]), d == 2 ? std::abs(k[1]) : 0});
  }
  LatticeWindow w(d, radius);
  std::vector<Sequence> seqs(static_cast<std::size_t>(channels), Sequence(w));
  for (const auto& e : entries)
    seqs[static_cast<std::size_t>(e.ch - 1)]
        .a[static_cast<Eigen::Index>(w.index(e.k))] += e.v;
  return CoefficientVector(std::move(seqs));
}

void save_coefficients(std::ostream& out, const CoefficientVector& f) {
  const int d = f.dim();
  for (int i = 0; i < f.channels(); ++i) {
    const Sequence& s = f.channel[static_cast<std::size_t>(i)];
    for (std::size_t idx = 0; idx < s.window.size(); ++idx) {
      cplx v = s.a[static_cast<Eigen::Index>(idx)];
      if (v == cplx(0.0, 0.0)) continue;
      auto k = s.window.point(idx);
      out << (i + 1);
      for (int a = 0; a < d; ++a) out << ' ' << k[a];
      char buf[64];
      std::snprintf(buf, sizeof buf, " %.17g %.17g", v.real(), v.imag());
      out << buf << '\n';
    }
  }
}

}  // namespace sdiag

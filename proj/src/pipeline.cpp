#include "sdiag/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <Eigen/LU>
#include <Eigen/QR>

namespace sdiag {

CoefficientVector project_to_eigenpair(const RangeOperatorField& R,
                                       const SDiagonalization& dec, int j,
                                       const CoefficientVector& f, int out_radius,
                                       bool oblique) {
  if (j < 1 || j > dec.components()) throw error("no such decomposition pair");
  const FiberFrame& frame = *R.frame;
  const FrequencyGrid& grid = frame.grid;
  if (!frame.source) throw error("frame carries no generator set");
  const GeneratorSet& gens = *frame.source;
  std::size_t bad = 0;
  if (!frame_full_rank(frame, &bad))
    throw rank_deficient_error(
        "generator matrix is rank deficient at cell " + std::to_string(bad) +
            "; coefficient reconstruction needs full column rank",
        bad);
  if (2 * out_radius + 1 > grid.n_per_dim())
    throw error("output window exceeds the aliasing limit of the grid");

  Eigen::MatrixXcd beta = coeff_symbols(f, grid);
  Eigen::MatrixXcd beta_out =
      Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(grid.cells()), f.channels());
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    const Eigen::MatrixXcd& G = gens.G[c];
    const Eigen::MatrixXcd& B = frame.basis[c];
    const int n = static_cast<int>(B.cols());
    if (n == 0) continue;
    Eigen::VectorXcd w = B.adjoint() * (G * beta.row(static_cast<Eigen::Index>(c)).transpose());
    Eigen::VectorXcd wj;
    if (!oblique) {
      const auto& E = dec.pairs[static_cast<std::size_t>(j - 1)].eigenspace.basis[c];
      wj = E.cols() == 0 ? Eigen::VectorXcd::Zero(n).eval()
                         : Eigen::VectorXcd(E * (E.adjoint() * w));
    } else {
      // Oblique projection onto pair j along the other eigenspaces.
      int total = 0, col = 0, jcol = -1, jcols = 0;
      std::vector<const Eigen::MatrixXcd*> blocks;
      for (int q = 0; q < dec.components(); ++q) {
        const auto& E = dec.pairs[static_cast<std::size_t>(q)].eigenspace.basis[c];
        if (E.cols() == 0) continue;
        if (q == j - 1) {
          jcol = total;
          jcols = static_cast<int>(E.cols());
        }
        blocks.push_back(&E);
        total += static_cast<int>(E.cols());
      }
      if (total != n)
        throw error("stacked eigenspace bases are not square at cell " +
                    std::to_string(c));
      if (jcol < 0) {
        wj = Eigen::VectorXcd::Zero(n);
      } else {
        Eigen::MatrixXcd S(n, n);
        for (const auto* E : blocks) {
          S.middleCols(col, E->cols()) = *E;
          col += static_cast<int>(E->cols());
        }
        Eigen::VectorXcd t = S.partialPivLu().solve(w);
        wj = S.middleCols(jcol, jcols) * t.segment(jcol, jcols);
      }
    }
    Eigen::VectorXcd u = B * wj;
    beta_out.row(static_cast<Eigen::Index>(c)) = G.householderQr().solve(u).transpose();
  }
  std::vector<Sequence> out;
  out.reserve(static_cast<std::size_t>(f.channels()));
  for (int i = 0; i < f.channels(); ++i) {
    ComplexField comp(grid, beta_out.col(i));
    out.push_back(sample_to_sequence(comp, out_radius));
  }
  return CoefficientVector(std::move(out));
}

namespace {

std::string yesno(bool b) { return b ? "yes" : "no"; }

struct RunContext {
  ProblemSetting setting;
  Decision decision;
  double resolved_cluster;
};

RunContext run_decision(const ProblemFile& p, const PipelineOptions& o) {
  ProblemSetting s = build_problem(p, o.grid_override);
  if (o.margin) s.opts.angle_margin = *o.margin;
  if (o.rank_tol) s.opts.rank_tol = *o.rank_tol;
  if (o.cluster_tol) s.opts.cluster_tol = *o.cluster_tol;
  double resolved = s.opts.cluster_tol >= 0.0
                        ? s.opts.cluster_tol
                        : 1e-6 * std::max(1.0, s.op->norm_bound);
  Decision d = decide_s_diagonalizable(*s.op, s.opts);
  return RunContext{std::move(s), std::move(d), resolved};
}

void base_report(Report& r, const std::string& command, const ProblemFile& p,
                 const RunContext& ctx) {
  const ProblemSetting& s = ctx.setting;
  const Decision& d = ctx.decision;
  r.add("command", command);
  r.add("problem", p.name);
  r.add("grid", std::to_string(s.grid.dim()) + " " + std::to_string(s.grid.n_per_dim()));
  r.add_int("window", s.window.radius());
  r.add("tol_rank", s.opts.rank_tol);
  r.add("tol_cluster", ctx.resolved_cluster);
  r.add("tol_margin", s.opts.angle_margin);
  r.add("op_norm", s.op->norm_bound);
  r.add("normal", yesno(is_normal(*s.op)));
  r.add("self_adjoint", yesno(is_self_adjoint(*s.op)));
  r.add_int("space_dim", s.frame->space_dim);
  for (std::size_t n = 0; n < s.frame->rank_masks.size(); ++n)
    r.add("an_measure " + std::to_string(n),
          format_double(mask_measure(s.frame->rank_masks[n])));
  r.add("verdict", d.yes ? "YES" : "NO");
  if (!d.yes) r.add("reason", d.reason);
  if (!d.yes && d.reason == "defective fibers")
    r.add("defect_measure", mask_measure(d.defect_mask));
  r.add_int("g", pasted_count(d.spectra));
  if (d.ess_sup_cb >= 0.0) r.add("ess_sup_cb", d.ess_sup_cb);
  if (d.decomposition) {
    const SDiagonalization& dec = *d.decomposition;
    r.add_int("beta", dec.components());
    for (const auto& pr : dec.pairs) {
      int j = static_cast<int>(&pr - dec.pairs.data()) + 1;
      r.add("cj_measure " + std::to_string(j),
            format_double(mask_measure(pr.spectrum)));
    }
    for (const auto& pr : dec.pairs) {
      int j = static_cast<int>(&pr - dec.pairs.data()) + 1;
      r.add("fit_residual " + std::to_string(j), format_double(pr.symbol.residual));
    }
  }
}

void finish_report(Report& r) { r.add("tool_version", kToolVersion); }

void maybe_write_outputs(const PipelineOptions& o, const Report& r,
                         const RunContext& ctx, bool with_artifact) {
  if (o.out_dir.empty()) return;
  std::filesystem::path dir(o.out_dir);
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "report.txt");
    out << r.render();
  }
  write_csv_dumps(dir, ctx.setting, ctx.decision);
  if (with_artifact && ctx.decision.decomposition) {
    std::ofstream out(dir / "decomposition.txt");
    save_decomposition(out, *ctx.decision.decomposition);
  }
}

}  // namespace

PipelineResult cmd_analyze(const ProblemFile& p, const PipelineOptions& o) {
  RunContext ctx = run_decision(p, o);
  Report r;
  base_report(r, "analyze", p, ctx);
  finish_report(r);
  maybe_write_outputs(o, r, ctx, /*with_artifact=*/false);
  int code = ctx.decision.yes ? 0 : 2;
  return PipelineResult{std::move(r), code, std::move(ctx.decision),
                        std::move(ctx.setting)};
}

PipelineResult cmd_diagonalize(const ProblemFile& p, const PipelineOptions& o) {
  RunContext ctx = run_decision(p, o);
  Report r;
  base_report(r, "diagonalize", p, ctx);
  if (ctx.decision.decomposition) {
    const SDiagonalization& dec = *ctx.decision.decomposition;
    VerifyReport vr = verify_decomposition(*ctx.setting.op, dec);
    r.add("structure_ok", yesno(vr.ok));
    r.add("max_eigen_residual", vr.max_eigen_residual);
    r.add("min_stack_sigma", vr.min_stack_sigma);
    ObliqueSynthesis syn = oblique_synthesis(*ctx.setting.op, dec);
    r.add("synthesis_residual_max", ess_sup(syn.residual));
    if (syn.conditioning_warning) r.add("conditioning_warning", syn.warning);
  }
  finish_report(r);
  maybe_write_outputs(o, r, ctx, /*with_artifact=*/true);
  int code = ctx.decision.yes ? 0 : 2;
  return PipelineResult{std::move(r), code, std::move(ctx.decision),
                        std::move(ctx.setting)};
}

PipelineResult cmd_synthesize(const ProblemFile& p, const PipelineOptions& o) {
  RunContext ctx = run_decision(p, o);
  Report r;
  base_report(r, "synthesize", p, ctx);
  if (ctx.decision.decomposition) {
    const SDiagonalization& dec = *ctx.decision.decomposition;
    if (is_normal(*ctx.setting.op)) {
      RealField res = spectral_synthesis(*ctx.setting.op, dec);
      r.add("synthesis_mode", "spectral");
      r.add("synthesis_residual_max", ess_sup(res));
    } else {
      ObliqueSynthesis syn = oblique_synthesis(*ctx.setting.op, dec);
      r.add("synthesis_mode", "oblique");
      r.add("synthesis_residual_max", ess_sup(syn.residual));
      r.add("worst_condition", syn.worst_condition);
      if (syn.conditioning_warning) r.add("conditioning_warning", syn.warning);
    }
  }
  finish_report(r);
  maybe_write_outputs(o, r, ctx, /*with_artifact=*/false);
  int code = ctx.decision.yes ? 0 : 2;
  return PipelineResult{std::move(r), code, std::move(ctx.decision),
                        std::move(ctx.setting)};
}

PipelineResult cmd_verify(const ProblemFile& p, const PipelineOptions& o,
                          const std::string& decomposition_path) {
  RunContext ctx = run_decision(p, o);
  Report r;
  base_report(r, "verify", p, ctx);

  bool ok = true;
  if (!ctx.decision.yes) {
    // Nothing to verify beyond the (negative) verdict.
    finish_report(r);
    maybe_write_outputs(o, r, ctx, false);
    return PipelineResult{std::move(r), 2, std::move(ctx.decision),
                          std::move(ctx.setting)};
  }

  SDiagonalization dec = *ctx.decision.decomposition;
  if (!decomposition_path.empty()) {
    std::ifstream in(decomposition_path);
    if (!in) throw error("cannot open decomposition " + decomposition_path);
    dec = load_decomposition(in, ctx.setting.frame);
    r.add("decomposition_source", decomposition_path);
  } else {
    r.add("decomposition_source", "fresh");
  }

  VerifyReport vr = verify_decomposition(*ctx.setting.op, dec);
  r.add("structure_ok", yesno(vr.ok));
  if (!vr.ok) r.add("structure_error", vr.what);
  r.add("max_eigen_residual", vr.max_eigen_residual);
  r.add("min_stack_sigma", vr.min_stack_sigma);
  ok = ok && vr.ok;

  std::size_t bad_cell = 0;
  bool hk = verify_h_equals_k(dec, ctx.decision.spectra, &bad_cell);
  r.add("h_equals_k", yesno(hk));
  ok = ok && hk;

  if (!frame_full_rank(*ctx.setting.frame)) {
    r.add("signal_check", "skipped frame_rank_deficient");
  } else {
    // Randomized coefficient vectors in each V_{a_j}; the eigen-action must
    // match the convolution action within the symbol fit budget.
    std::mt19937_64 rng(20240817u);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double worst_rel = 0.0;
    bool signal_ok = true;
    const int in_radius = 2;
    for (int j = 1; j <= dec.components(); ++j) {
      const auto& pr = dec.pairs[static_cast<std::size_t>(j - 1)];
      const int fit_radius = pr.symbol.coeffs.window.radius();
      const double budget = std::max(1e-8, 10.0 * pr.symbol.residual);
      for (int t = 0; t < 3; ++t) {
        LatticeWindow w(ctx.setting.grid.dim(), in_radius);
        std::vector<Sequence> ch;
        for (int i = 0; i < ctx.setting.gens->count; ++i) {
          Sequence s(w);
          for (std::size_t q = 0; q < w.size(); ++q)
            s.a[static_cast<Eigen::Index>(q)] = cplx(gauss(rng), gauss(rng));
          ch.push_back(std::move(s));
        }
        CoefficientVector f0(std::move(ch));
        CoefficientVector fj = project_to_eigenpair(
            *ctx.setting.op, dec, j, f0, in_radius + fit_radius);
        double nf = coeff_norm(fj);
        if (nf < 1e-12) continue;
        CoefficientVector lhs = apply_operator(
            *ctx.setting.op, fj, fj.radius() + fit_radius);
        CoefficientVector rhs = apply_lambda(pr.symbol.coeffs, fj);
        double diff = 0.0;
        for (int i = 0; i < lhs.channels(); ++i) {
          Sequence a = lhs.channel[static_cast<std::size_t>(i)];
          Sequence b = rhs.channel[static_cast<std::size_t>(i)];
          for (std::size_t q = 0; q < a.window.size(); ++q) {
            cplx va = a.a[static_cast<Eigen::Index>(q)];
            cplx vb = b.at(a.window.point(q));
            diff += std::norm(va - vb);
          }
        }
        double rel = std::sqrt(diff) / nf;
        worst_rel = std::max(worst_rel, rel);
        if (rel > budget) signal_ok = false;
      }
    }
    r.add("signal_check", signal_ok ? "passed" : "failed");
    r.add("signal_max_rel", worst_rel);
    ok = ok && signal_ok;
  }

  r.add("verified", yesno(ok));
  finish_report(r);
  maybe_write_outputs(o, r, ctx, false);
  return PipelineResult{std::move(r), ok ? 0 : 2, std::move(ctx.decision),
                        std::move(ctx.setting)};
}

void save_decomposition(std::ostream& out, const SDiagonalization& dec) {
  const FrequencyGrid& grid = dec.frame->grid;
  char buf[80];
  auto put_c = [&](cplx v) {
    std::snprintf(buf, sizeof buf, " %.17g %.17g", v.real(), v.imag());
    out << buf;
  };
  out << "sdiag-decomposition 1\n";
  out << "grid " << grid.dim() << ' ' << grid.n_per_dim() << '\n';
  out << "window " << dec.frame->window.radius() << '\n';
  out << "g " << dec.g << '\n';
  std::snprintf(buf, sizeof buf, "%.17g", dec.ess_sup_cb);
  out << "ess_sup_cb " << buf << '\n';
  out << "minimal " << (dec.minimal ? 1 : 0) << '\n';
  out << "kfield";
  for (std::size_t c = 0; c < grid.cells(); ++c) out << ' ' << dec.k_field[c];
  out << '\n';
  out << "pairs " << dec.components() << '\n';
  for (int j = 1; j <= dec.components(); ++j) {
    const SEigenpair& p = dec.pairs[static_cast<std::size_t>(j - 1)];
    out << "pair " << j << '\n';
    out << "support ";
    for (std::size_t c = 0; c < grid.cells(); ++c)
      out << (p.spectrum.contains(c) ? '1' : '0');
    out << '\n';
    out << "fit_radius " << p.symbol.coeffs.window.radius() << '\n';
    std::snprintf(buf, sizeof buf, "%.17g", p.symbol.residual);
    out << "fit_residual " << buf << '\n';
    for (std::size_t q = 0; q < p.symbol.coeffs.window.size(); ++q) {
      cplx v = p.symbol.coeffs.a[static_cast<Eigen::Index>(q)];
      if (v == cplx(0.0, 0.0)) continue;
      auto k = p.symbol.coeffs.window.point(q);
      out << "symbol " << k[0];
      if (grid.dim() == 2) out << ' ' << k[1];
      put_c(v);
      out << '\n';
    }
    for (std::size_t c = 0; c < grid.cells(); ++c) {
      out << "lambda " << c;
      put_c(p.lambda(c));
      out << '\n';
    }
    for (std::size_t c = 0; c < grid.cells(); ++c) {
      const auto& E = p.eigenspace.basis[c];
      if (E.cols() == 0) continue;
      out << "basis " << c << ' ' << E.rows() << ' ' << E.cols();
      for (Eigen::Index col = 0; col < E.cols(); ++col)
        for (Eigen::Index row = 0; row < E.rows(); ++row) put_c(E(row, col));
      out << '\n';
    }
  }
  out << "end\n";
}

SDiagonalization load_decomposition(std::istream& in,
                                    std::shared_ptr<const FiberFrame> frame) {
  const FrequencyGrid& grid = frame->grid;
  const std::size_t N = grid.cells();
  std::string line, key;
  std::size_t lineno = 0;
  SDiagonalization dec{frame, {}, 0, 0.0, true, std::vector<int>(N, 0)};
  int pairs_declared = 0;

  struct PendingPair {
    Eigen::VectorXcd lambda;
    std::vector<std::uint8_t> support;
    int fit_radius = 0;
    double fit_residual = 0.0;
    std::vector<std::pair<std::array<int, 2>, cplx>> symbol;
    std::vector<Eigen::MatrixXcd> basis;
  };
  std::vector<PendingPair> pending;

  auto flush = [&]() {
    for (auto& pp : pending) {
      LatticeWindow w(grid.dim(), pp.fit_radius);
      Sequence coeffs(w);
      for (const auto& [k, v] : pp.symbol) {
        std::size_t idx = w.index(k);
        if (idx == LatticeWindow::npos) throw error("symbol term outside fit window");
        coeffs.a[static_cast<Eigen::Index>(idx)] = v;
      }
      std::vector<int> rank(N, 0);
      for (std::size_t c = 0; c < N; ++c) {
        if (pp.basis[c].size() == 0 && frame->dim[c] > 0)
          pp.basis[c] = Eigen::MatrixXcd::Zero(frame->dim[c], 0);
        rank[c] = frame->dim[c] - static_cast<int>(pp.basis[c].cols());
      }
      std::vector<MeasurableMask> rmasks;
      for (int k = 0; k <= frame->space_dim; ++k) {
        std::vector<std::uint8_t> bits(N, 0);
        for (std::size_t c = 0; c < N; ++c)
          if (rank[c] == k) bits[c] = 1;
        rmasks.emplace_back(grid, std::move(bits));
      }
      ComplexField lf(grid, std::move(pp.lambda));
      dec.pairs.push_back(SEigenpair{
          std::move(lf),
          SymbolFit{std::move(coeffs), pp.fit_residual},
          MeasurableMask(grid, std::move(pp.support)),
          KernelField{frame, std::move(pp.basis), std::move(rank), std::move(rmasks)}});
    }
  };

  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream is(line);
    if (!(is >> key)) continue;
    if (key == "sdiag-decomposition") {
      int v;
      if (!(is >> v) || v != 1) throw parse_error("unsupported decomposition version", lineno);
    } else if (key == "grid") {
      int d, n;
      if (!(is >> d >> n) || d != grid.dim() || n != grid.n_per_dim())
        throw parse_error("decomposition grid does not match the problem", lineno);
    } else if (key == "window") {
      int K;
      if (!(is >> K) || K != frame->window.radius())
        throw parse_error("decomposition window does not match the problem", lineno);
    } else if (key == "g") {
      is >> dec.g;
    } else if (key == "ess_sup_cb") {
      is >> dec.ess_sup_cb;
    } else if (key == "minimal") {
      int m;
      is >> m;
      dec.minimal = m != 0;
    } else if (key == "kfield") {
      for (std::size_t c = 0; c < N; ++c)
        if (!(is >> dec.k_field[c])) throw parse_error("short kfield line", lineno);
    } else if (key == "pairs") {
      is >> pairs_declared;
    } else if (key == "pair") {
      pending.push_back(PendingPair{
          Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(N)),
          std::vector<std::uint8_t>(N, 0), 0, 0.0, {},
          std::vector<Eigen::MatrixXcd>(N)});
      for (std::size_t c = 0; c < N; ++c)
        pending.back().basis[c] = Eigen::MatrixXcd::Zero(frame->dim[c], 0);
    } else if (key == "support") {
      std::string bits;
      is >> bits;
      if (bits.size() != N) throw parse_error("support bit string has wrong length", lineno);
      for (std::size_t c = 0; c < N; ++c)
        pending.back().support[c] = bits[c] == '1' ? 1 : 0;
    } else if (key == "fit_radius") {
      is >> pending.back().fit_radius;
    } else if (key == "fit_residual") {
      is >> pending.back().fit_residual;
    } else if (key == "symbol") {
      std::array<int, 2> k{0, 0};
      for (int a = 0; a < grid.dim(); ++a) is >> k[a];
      double re, im;
      if (!(is >> re >> im)) throw parse_error("bad symbol line", lineno);
      pending.back().symbol.emplace_back(k, cplx(re, im));
    } else if (key == "lambda") {
      std::size_t c;
      double re, im;
      if (!(is >> c >> re >> im) || c >= N) throw parse_error("bad lambda line", lineno);
      pending.back().lambda[static_cast<Eigen::Index>(c)] = cplx(re, im);
    } else if (key == "basis") {
      std::size_t c;
      int rows, cols;
      if (!(is >> c >> rows >> cols) || c >= N)
        throw parse_error("bad basis line", lineno);
      if (rows != frame->dim[c])
        throw parse_error("basis rows do not match the fiber dimension", lineno);
      Eigen::MatrixXcd E(rows, cols);
      for (int col = 0; col < cols; ++col)
        for (int row = 0; row < rows; ++row) {
          double re, im;
          if (!(is >> re >> im)) throw parse_error("short basis line", lineno);
          E(row, col) = cplx(re, im);
        }
      pending.back().basis[c] = std::move(E);
    } else if (key == "end") {
      break;
    } else {
      throw parse_error("unknown decomposition directive '" + key + "'", lineno);
    }
  }
  if (static_cast<int>(pending.size()) != pairs_declared)
    throw error("decomposition pair count mismatch");
  flush();
  return dec;
}

void write_csv_dumps(const std::filesystem::path& dir, const ProblemSetting& s,
                     const Decision& d) {
  const FrequencyGrid& grid = s.grid;
  auto omega_header = [&]() {
    return grid.dim() == 1 ? std::string("omega") : std::string("omega1,omega2");
  };
  auto omega_cols = [&](std::ostream& out, std::size_t c) {
    auto w = grid.center(c);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", w[0]);
    out << buf;
    if (grid.dim() == 2) {
      std::snprintf(buf, sizeof buf, ",%.17g", w[1]);
      out << buf;
    }
  };

  {
    std::ofstream out(dir / "cb.csv");
    out << "cell," << omega_header() << ",value\n";
    for (std::size_t c = 0; c < grid.cells(); ++c) {
      out << c << ',';
      omega_cols(out, c);
      out << ',' << format_double(d.cb(c)) << '\n';
    }
  }
  {
    std::ofstream out(dir / "masks.csv");
    std::vector<int> h;
    if (d.decomposition) h = h_field(*d.decomposition);
    out << "cell," << omega_header() << ",n_dim,k_distinct,h\n";
    for (std::size_t c = 0; c < grid.cells(); ++c) {
      out << c << ',';
      omega_cols(out, c);
      out << ',' << s.frame->dim[c] << ',' << d.spectra.count(c) << ','
          << (h.empty() ? 0 : h[c]) << '\n';
    }
  }
  if (d.decomposition) {
    for (int j = 1; j <= d.decomposition->components(); ++j) {
      const auto& p = d.decomposition->pairs[static_cast<std::size_t>(j - 1)];
      std::ofstream out(dir / ("lambda_" + std::to_string(j) + ".csv"));
      out << "cell," << omega_header() << ",re,im\n";
      for (std::size_t c = 0; c < grid.cells(); ++c) {
        out << c << ',';
        omega_cols(out, c);
        out << ',' << format_double(p.lambda(c).real()) << ','
            << format_double(p.lambda(c).imag()) << '\n';
      }
    }
  }
}

}  // namespace sdiag

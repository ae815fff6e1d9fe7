// Python bindings for the main pipeline operations: analyze / diagonalize /
// verify / synthesize on problem files, plus sequence convolution. Results
// come back as plain dicts so callers need nothing beyond the module itself.

#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "sdiag/pipeline.hpp"

namespace py = pybind11;
using namespace sdiag;

namespace {

PipelineOptions make_options(int grid, const py::object& margin,
                             const py::object& rank_tol,
                             const py::object& cluster_tol,
                             const std::string& out_dir) {
  PipelineOptions o;
  o.grid_override = grid;
  if (!margin.is_none()) o.margin = margin.cast<double>();
  if (!rank_tol.is_none()) o.rank_tol = rank_tol.cast<double>();
  if (!cluster_tol.is_none()) o.cluster_tol = cluster_tol.cast<double>();
  o.out_dir = out_dir;
  return o;
}

py::list field_values(const ComplexField& f) {
  py::list out;
  for (Eigen::Index i = 0; i < f.v.size(); ++i) out.append(f.v[i]);
  return out;
}

py::dict result_dict(const PipelineResult& res, bool with_fields) {
  py::dict d;
  d["report"] = res.report.render(false);
  d["exit_code"] = res.exit_code;
  if (res.decision) {
    const Decision& dec = *res.decision;
    d["verdict"] = dec.yes ? "YES" : "NO";
    if (!dec.yes) d["reason"] = dec.reason;
    d["g"] = pasted_count(dec.spectra);
    if (dec.ess_sup_cb >= 0.0) d["ess_sup_cb"] = dec.ess_sup_cb;
    if (dec.decomposition) {
      const SDiagonalization& sd = *dec.decomposition;
      d["components"] = sd.components();
      d["minimal"] = sd.minimal;
      if (with_fields) {
        py::list lambdas, supports, residuals;
        for (const auto& p : sd.pairs) {
          lambdas.append(field_values(p.lambda));
          py::list sup;
          for (std::size_t c = 0; c < p.spectrum.grid().cells(); ++c)
            sup.append(p.spectrum.contains(c) ? 1 : 0);
          supports.append(sup);
          residuals.append(p.symbol.residual);
        }
        d["lambda"] = lambdas;
        d["support"] = supports;
        d["fit_residual"] = residuals;
        py::list kf;
        for (int k : sd.k_field) kf.append(k);
        d["k_field"] = kf;
      }
    }
  }
  if (with_fields && res.setting) {
    const FrequencyGrid& g = res.setting->grid;
    py::list omegas;
    for (std::size_t c = 0; c < g.cells(); ++c) omegas.append(g.center(c)[0]);
    d["omega"] = omegas;
    if (res.decision) {
      py::list v;
      const RealField& f = res.decision->cb;
      for (Eigen::Index i = 0; i < f.v.size(); ++i) v.append(f.v[i]);
      d["cb"] = v;
    }
  }
  return d;
}

py::dict run_command(const std::string& cmd, const std::string& path, int grid,
                     const py::object& margin, const py::object& rank_tol,
                     const py::object& cluster_tol, const std::string& out_dir,
                     const std::string& dec_path) {
  ProblemFile p = parse_problem_file(path);
  PipelineOptions o = make_options(grid, margin, rank_tol, cluster_tol, out_dir);
  PipelineResult res = cmd == "analyze"      ? cmd_analyze(p, o)
                       : cmd == "diagonalize" ? cmd_diagonalize(p, o)
                       : cmd == "synthesize"  ? cmd_synthesize(p, o)
                                              : cmd_verify(p, o, dec_path);
  return result_dict(res, cmd == "diagonalize");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "s-diagonalization of shift-preserving operators on finitely generated "
      "shift-invariant spaces";

  m.def("version", [] { return std::string(kToolVersion); },
        "Library version string.");

  m.def(
      "analyze",
      [](const std::string& path, int grid, const py::object& margin,
         const py::object& rank_tol, const py::object& cluster_tol) {
        return run_command("analyze", path, grid, margin, rank_tol, cluster_tol,
                           "", "");
      },
      py::arg("path"), py::arg("grid") = 0, py::arg("margin") = py::none(),
      py::arg("rank_tol") = py::none(), py::arg("cluster_tol") = py::none(),
      "Decide s-diagonalizability of the operator in a problem file; returns "
      "the report text plus verdict fields.");

  m.def(
      "diagonalize",
      [](const std::string& path, int grid, const py::object& margin,
         const py::object& rank_tol, const py::object& cluster_tol,
         const std::string& out_dir) {
        return run_command("diagonalize", path, grid, margin, rank_tol,
                           cluster_tol, out_dir, "");
      },
      py::arg("path"), py::arg("grid") = 0, py::arg("margin") = py::none(),
      py::arg("rank_tol") = py::none(), py::arg("cluster_tol") = py::none(),
      py::arg("out_dir") = std::string(),
      "Compute the full decomposition; returns per-cell eigenvalue branches, "
      "supports and the distinct-count field. out_dir, when set, receives the "
      "report, CSV dumps and the decomposition artifact.");

  m.def(
      "verify",
      [](const std::string& path, const std::string& decomposition, int grid,
         const py::object& margin, const py::object& rank_tol,
         const py::object& cluster_tol) {
        return run_command("verify", path, grid, margin, rank_tol, cluster_tol,
                           "", decomposition);
      },
      py::arg("path"), py::arg("decomposition") = std::string(),
      py::arg("grid") = 0, py::arg("margin") = py::none(),
      py::arg("rank_tol") = py::none(), py::arg("cluster_tol") = py::none(),
      "Re-derive or load a decomposition and check its invariants plus the "
      "signal-level eigen-action.");

  m.def(
      "synthesize",
      [](const std::string& path, int grid, const py::object& margin,
         const py::object& rank_tol, const py::object& cluster_tol) {
        return run_command("synthesize", path, grid, margin, rank_tol,
                           cluster_tol, "", "");
      },
      py::arg("path"), py::arg("grid") = 0, py::arg("margin") = py::none(),
      py::arg("rank_tol") = py::none(), py::arg("cluster_tol") = py::none(),
      "Rebuild the operator from its decomposition and report the residual.");

  m.def(
      "convolve",
      [](const std::vector<std::complex<double>>& a,
         const std::vector<std::complex<double>>& b) {
        if (a.empty() || b.empty() || a.size() % 2 == 0 || b.size() % 2 == 0)
          throw py::value_error(
              "sequences must be odd-length lists centered at index 0");
        auto to_seq = [](const std::vector<std::complex<double>>& v) {
          LatticeWindow w(1, (static_cast<int>(v.size()) - 1) / 2);
          Eigen::VectorXcd vals(static_cast<Eigen::Index>(v.size()));
          for (std::size_t i = 0; i < v.size(); ++i)
            vals[static_cast<Eigen::Index>(i)] = v[i];
          return Sequence(w, vals);
        };
        Sequence c = convolve(to_seq(a), to_seq(b));
        std::vector<std::complex<double>> out(static_cast<std::size_t>(c.a.size()));
        for (Eigen::Index i = 0; i < c.a.size(); ++i)
          out[static_cast<std::size_t>(i)] = c.a[i];
        return out;
      },
      py::arg("a"), py::arg("b"),
      "Discrete convolution of two centered odd-length sequences.");

  // Translators are tried newest-first: register the base before the derived
  // class so parse errors surface as ParseError rather than the generic Error.
  py::register_exception<error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<parse_error>(m, "ParseError", PyExc_ValueError);
}

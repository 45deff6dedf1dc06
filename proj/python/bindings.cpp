#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "openqs/channels.hpp"
#include "openqs/cli.hpp"
#include "openqs/errors.hpp"
#include "openqs/lindblad.hpp"
#include "openqs/perturb.hpp"
#include "openqs/quantum.hpp"
#include "openqs/ramsey.hpp"

namespace py = pybind11;
using namespace oqs;

namespace {

using Classes = std::vector<std::vector<int>>;

ProjectorBasis basis_of(const std::optional<CMatrix>& vectors, int dim, const Classes& classes) {
  return vectors ? ProjectorBasis(*vectors, classes) : ProjectorBasis::computational(dim, classes);
}

FdScheme scheme_of(const std::string& s) {
  if (s == "central") return FdScheme::Central;
  if (s == "one-sided") return FdScheme::OneSided;
  if (s == "forward") return FdScheme::Forward;
  if (s == "richardson") return FdScheme::Richardson;
  raise(ErrorKind::InvalidArgument, "unknown scheme '" + s + "'");
}

const char* class_name(ModeClass c) {
  switch (c) {
    case ModeClass::Decaying: return "decaying";
    case ModeClass::Stationary: return "stationary";
    default: return "forbidden";
  }
}

py::dict gaussian_dict(const GaussianResult& g) {
  py::dict d;
  d["value"] = g.value;
  d["closed_form"] = g.closed_form;
  d["quadrature"] = g.quadrature;
  d["quadrature_error"] = g.quadrature_error;
  d["truncated"] = g.truncated;
  d["warnings"] = g.warnings;
  return d;
}

}  // namespace

PYBIND11_MODULE(openqs, m) {
  m.doc() = "Open quantum systems: Lindblad dynamics, channels and Ramsey interferometry";

  static auto* error = new py::object(py::exception<Error>(m, "OpenQSError", PyExc_RuntimeError));
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = (*error)(e.what());
      inst.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(error->ptr(), inst.ptr());
    }
  });

  m.def("expm", [](const CMatrix& a, double t) { return expm(a, t); }, py::arg("a"), py::arg("t") = 1.0);

  // Lindblad dynamics
  m.def(
      "build_superoperator",
      [](const CMatrix& h, const std::vector<CMatrix>& ls) { return build_superoperator({h, ls}); },
      py::arg("hamiltonian"), py::arg("lindblads"));
  m.def(
      "evolve",
      [](const CMatrix& h, const std::vector<CMatrix>& ls, const CMatrix& rho0, double t) {
        return evolve({h, ls}, DensityMatrix(rho0), t).matrix();
      },
      py::arg("hamiltonian"), py::arg("lindblads"), py::arg("rho0"), py::arg("t"));
  m.def(
      "spectrum",
      [](const CMatrix& h, const std::vector<CMatrix>& ls) {
        const auto s = spectrum({h, ls});
        std::vector<std::string> classes;
        for (auto c : s.classes) classes.push_back(class_name(c));
        py::dict d;
        d["mus"] = s.mus;
        d["modes"] = s.modes;
        d["ranks"] = s.ranks;
        d["classes"] = classes;
        d["threshold"] = s.threshold;
        return d;
      },
      py::arg("hamiltonian"), py::arg("lindblads"));
  m.def(
      "balance_residual",
      [](const CMatrix& h, const std::vector<CMatrix>& ls) { return LindbladModel{h, ls}.balance_residual(); },
      py::arg("hamiltonian"), py::arg("lindblads"));

  // States and measurement
  m.def(
      "born_collapse",
      [](const CMatrix& rho, const std::optional<CMatrix>& basis, const Classes& classes) {
        const DensityMatrix r(rho);
        return born_collapse(r, basis_of(basis, r.dim(), classes)).matrix();
      },
      py::arg("rho"), py::arg("basis") = py::none(), py::arg("classes") = Classes{});
  m.def(
      "born_limit_check",
      [](const std::vector<std::vector<Complex>>& l_coeffs, const std::vector<double>& h_coeffs, const CMatrix& rho0,
         double horizon, double tol, const std::optional<CMatrix>& basis, const Classes& classes) {
        const DensityMatrix r(rho0);
        const auto mm = measurement_model(basis_of(basis, r.dim(), classes), l_coeffs, h_coeffs);
        const auto res = born_limit_check(mm, r, horizon, tol);
        py::dict d;
        d["converged"] = res.converged;
        d["residual"] = res.residual;
        d["predicted_bound"] = res.predicted_bound;
        d["gamma_min"] = res.gamma_min;
        d["lambdas"] = decay_matrix(mm).lambdas;
        return d;
      },
      py::arg("l_coeffs"), py::arg("h_coeffs"), py::arg("rho0"), py::arg("horizon"), py::arg("tol") = 1e-6,
      py::arg("basis") = py::none(), py::arg("classes") = Classes{});
  m.def("vn_entropy", [](const CMatrix& rho) { return vn_entropy(DensityMatrix(rho)); }, py::arg("rho"));
  m.def(
      "entropy_rate",
      [](const CMatrix& rho, const std::vector<CMatrix>& ls) { return entropy_rate(DensityMatrix(rho), ls); },
      py::arg("rho"), py::arg("lindblads"));

  // Channels
  m.def(
      "kernel_from_generator",
      [](const CMatrix& gen, double tau) { return kernel_from_generator(gen, tau).matrix; }, py::arg("generator"),
      py::arg("tau"));
  m.def("transpose_kernel", [](int dim) { return transpose_kernel(dim).matrix; }, py::arg("dim"));
  m.def(
      "choi_cp_test",
      [](const CMatrix& kernel, double tau, double tol) {
        const int dim = static_cast<int>(std::lround(std::sqrt(static_cast<double>(kernel.rows()))));
        const auto r = choi_cp_test(Kernel{dim, tau, kernel}, tol);
        py::dict d;
        d["is_cp"] = r.is_cp;
        d["min_lambda"] = r.min_lambda;
        d["lambdas"] = r.spectrum.lambdas;
        return d;
      },
      py::arg("kernel"), py::arg("tau") = 1.0, py::arg("tol") = -1.0);
  m.def(
      "gks_project",
      [](const CMatrix& gen) {
        const auto g = gks_project(gen);
        py::dict d;
        d["hamiltonian"] = g.hamiltonian;
        d["c_matrix"] = g.c_matrix;
        d["c_min_eigenvalue"] = g.c_min_eigenvalue();
        return d;
      },
      py::arg("generator"));
  m.def(
      "bfr_check",
      [](const CMatrix& gen, int trials, std::uint64_t seed) {
        return bfr_derivative_check(gks_project(gen), trials, seed).min_value;
      },
      py::arg("generator"), py::arg("trials") = 200, py::arg("seed") = 0);
  m.def(
      "extract_generator",
      [](const std::vector<std::pair<double, CMatrix>>& samples, const std::string& scheme) {
        std::vector<Kernel> ks;
        for (const auto& [tau, k] : samples) {
          const int dim = static_cast<int>(std::lround(std::sqrt(static_cast<double>(k.rows()))));
          ks.push_back(Kernel{dim, tau, k});
        }
        return extract_generator(ks, scheme_of(scheme)).generator;
      },
      py::arg("samples"), py::arg("scheme") = "central");

  // Perturbation theory
  m.def(
      "first_order",
      [](const CMatrix& a, const CMatrix& da) {
        const auto r = first_order(a, da);
        py::dict d;
        d["base_eigenvalues"] = r.base_eigenvalues;
        d["shifts"] = r.shifts;
        d["rotated_basis"] = r.rotated_basis;
        d["degeneracy_groups"] = r.degeneracy_groups;
        d["block_residual"] = block_offdiag_residual(r, da);
        return d;
      },
      py::arg("a"), py::arg("delta_a"));

  // Ramsey
  py::class_<RamseyConfig>(m, "RamseyConfig")
      .def(py::init<>())
      .def_readwrite("e_g", &RamseyConfig::e_g)
      .def_readwrite("e_e", &RamseyConfig::e_e)
      .def_readwrite("u_eg", &RamseyConfig::u_eg)
      .def_readwrite("omega", &RamseyConfig::omega)
      .def_readwrite("tau", &RamseyConfig::tau)
      .def_readwrite("t_free", &RamseyConfig::t_free)
      .def_readwrite("t0", &RamseyConfig::t0)
      .def_readwrite("sigma", &RamseyConfig::sigma)
      .def_readwrite("lambda_tilde_eg", &RamseyConfig::lambda_tilde_eg)
      .def("validate", &RamseyConfig::validate)
      .def_property_readonly("delta_omega", [](const RamseyConfig& c) { return derive(c).delta_omega; })
      .def_property_readonly("big_omega", [](const RamseyConfig& c) { return derive(c).big_omega; });

  const auto theory = [](const std::string& s) { return theory_from_string(s); };
  m.def(
      "protocol", [=](const RamseyConfig& c, const std::string& th) { return protocol(c, theory(th)); },
      py::arg("config"), py::arg("theory") = "standard");
  m.def(
      "shortcut_fraction",
      [=](const RamseyConfig& c, const std::string& th) { return shortcut_fraction(c, theory(th)); },
      py::arg("config"), py::arg("theory") = "standard");
  m.def(
      "gaussian_fraction",
      [=](const RamseyConfig& c, const std::string& th, bool truncate) {
        GaussianOptions o;
        o.truncate = truncate;
        return gaussian_dict(gaussian_fraction(c, theory(th), o));
      },
      py::arg("config"), py::arg("theory") = "standard", py::arg("truncate") = false);
  m.def(
      "pulse",
      [](const CMatrix& f, const RamseyConfig& c, double t_start) {
        return pulse_closed_form(CoefficientMatrix(f), c.tau, derive(c), c.u_eg, t_start).matrix();
      },
      py::arg("f"), py::arg("config"), py::arg("t_start") = 0.0);
  m.def(
      "scan",
      [=](const RamseyConfig& c, const std::vector<double>& grid, const std::string& th, int threads) {
        ScanOptions o;
        o.threads = threads;
        const auto r = scan(c, grid, theory(th), o);
        std::vector<double> dw, pb, avg, base;
        for (const auto& row : r.rows) {
          dw.push_back(row.delta_omega);
          pb.push_back(row.pb_e);
          avg.push_back(row.pb_e_avg);
          base.push_back(row.baseline);
        }
        py::dict d;
        d["delta_omega"] = RVector(RVector::Map(dw.data(), dw.size()));
        d["pb_e"] = RVector(RVector::Map(pb.data(), pb.size()));
        d["pb_e_avg"] = RVector(RVector::Map(avg.data(), avg.size()));
        d["baseline"] = RVector(RVector::Map(base.data(), base.size()));
        d["warnings"] = r.warnings;
        return d;
      },
      py::arg("config"), py::arg("grid"), py::arg("theory") = "standard", py::arg("threads") = 0);
  m.def("linspace", &linspace, py::arg("lo"), py::arg("hi"), py::arg("n"));

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "openqs");
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        std::ostringstream out, err;
        const int code = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}

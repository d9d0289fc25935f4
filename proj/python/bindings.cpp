#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "concentra/config.hpp"
#include "concentra/diagnostics.hpp"
#include "concentra/fields.hpp"
#include "concentra/limit_profile.hpp"
#include "concentra/penalty.hpp"
#include "concentra/reduction.hpp"
#include "concentra/run.hpp"
#include "concentra/solvers.hpp"

namespace py = pybind11;
using namespace concentra;

namespace {

FieldSpec make_field_spec(const std::string& family,
                          const std::map<std::string, std::vector<double>>& params) {
  FieldSpec s;
  s.family = family;
  s.params = params;
  return s;
}

}  // namespace

PYBIND11_MODULE(_concentra, m) {
  m.doc() = "Concentration analysis for -eps^2 div(J grad u) + V u = u^p";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<DomainError>(m, "DomainError");
  py::register_exception<SolverError>(m, "SolverError");

  py::class_<Box>(m, "Box")
      .def(py::init([](Vec lo, Vec hi) {
             Box b;
             b.lo = std::move(lo);
             b.hi = std::move(hi);
             return b;
           }),
           py::arg("lo"), py::arg("hi"))
      .def_readonly("lo", &Box::lo)
      .def_readonly("hi", &Box::hi)
      .def("contains", &Box::contains);

  py::class_<PotentialField>(m, "PotentialField")
      .def("value", [](const PotentialField& f, const Vec& z) { return f.value(z); })
      .def("grad", [](const PotentialField& f, const Vec& z) { return f.grad(z); })
      .def("hess", [](const PotentialField& f, const Vec& z) { return f.hess(z); })
      .def_readonly("alpha", &PotentialField::alpha);

  py::class_<DiffusionField>(m, "DiffusionField")
      .def("value", [](const DiffusionField& f, const Vec& z) { return f.value(z); })
      .def("deriv", [](const DiffusionField& f, const Vec& z, int i) { return f.deriv(z, i); })
      .def_readonly("nu", &DiffusionField::nu)
      .def_readonly("upper", &DiffusionField::upper);

  m.def("make_potential",
        [](const std::string& family,
           const std::map<std::string, std::vector<double>>& params, int N) {
          return make_potential(make_field_spec(family, params), N);
        },
        py::arg("family"), py::arg("params"), py::arg("N"));
  m.def("make_diffusion",
        [](const std::string& family,
           const std::map<std::string, std::vector<double>>& params, int N,
           std::optional<Box> box) {
          return make_diffusion(make_field_spec(family, params), N, box);
        },
        py::arg("family"), py::arg("params"), py::arg("N"),
        py::arg("box") = std::nullopt);

  py::class_<LandscapeSample>(m, "LandscapeSample")
      .def_readonly("z", &LandscapeSample::z)
      .def_readonly("gamma", &LandscapeSample::gamma)
      .def_readonly("grad", &LandscapeSample::grad)
      .def_property_readonly(
          "kind", [](const LandscapeSample& s) { return to_string(s.kind); });

  m.def("gamma_eval", &gamma_eval, py::arg("z"), py::arg("V"), py::arg("J"),
        py::arg("N"), py::arg("p"));
  m.def("find_gamma_critical_points",
        [](const Box& box, int coarse, double tol, const PotentialField& V,
           const DiffusionField& J, int N, double p) {
          return find_gamma_critical_points(box, coarse, tol, V, J, N, p);
        },
        py::arg("box"), py::arg("coarse_grid"), py::arg("tol"), py::arg("V"),
        py::arg("J"), py::arg("N"), py::arg("p"));

  py::class_<Transform>(m, "Transform")
      .def_readonly("T", &Transform::T)
      .def_readonly("det", &Transform::det);
  m.def("diagonalizing_transform",
        py::overload_cast<const Mat&>(&diagonalizing_transform));

  py::class_<RadialProfile, std::shared_ptr<RadialProfile>>(m, "RadialProfile")
      .def_readonly("N", &RadialProfile::N)
      .def_readonly("p", &RadialProfile::p)
      .def_readonly("U0", &RadialProfile::U0)
      .def_readonly("C0", &RadialProfile::C0)
      .def_readonly("rmax", &RadialProfile::rmax)
      .def_readonly("r", &RadialProfile::r)
      .def_readonly("U", &RadialProfile::U)
      .def("value", &RadialProfile::value)
      .def("deriv", &RadialProfile::deriv);
  m.def("solve_radial_ground_state",
        [](int N, double p, double tol, double rmax) {
          return std::make_shared<RadialProfile>(
              solve_radial_ground_state(N, p, tol, rmax));
        },
        py::arg("N"), py::arg("p"), py::arg("tol") = 1e-8,
        py::arg("rmax") = 20.0);
  m.def("sigma_c1", &sigma_c1);
  m.def("sigma_closed_form",
        [](const Vec& z, const RadialProfile& prof, const PotentialField& V,
           const DiffusionField& J, int N) {
          return sigma_closed_form(z, prof, V, J, N);
        });

  m.def("penalty_threshold",
        py::overload_cast<double, double, double>(&penalty_threshold),
        py::arg("p"), py::arg("alpha"), py::arg("k"));
  py::class_<PenaltyConfig, std::shared_ptr<PenaltyConfig>>(m, "PenaltyConfig")
      .def_readonly("ell", &PenaltyConfig::ell)
      .def_readonly("k", &PenaltyConfig::k)
      .def_readonly("theta", &PenaltyConfig::theta)
      .def_readonly("alpha", &PenaltyConfig::alpha);
  m.def("make_penalty",
        [](const Box& lambda, double p, double alpha, double k, double theta) {
          return std::const_pointer_cast<PenaltyConfig>(
              make_penalty(lambda, p, alpha, k, theta));
        },
        py::arg("lambda_box"), py::arg("p"), py::arg("alpha"),
        py::arg("k") = 0.0, py::arg("theta") = 0.0);
  m.def("penalized_nonlinearity",
        [](const Vec& x, double u, const PenaltyConfig& cfg) {
          PenalizedValue v = penalized_nonlinearity(x, u, cfg);
          return py::make_tuple(v.g, v.G, v.gp);
        });

  py::class_<GridDomain, std::shared_ptr<GridDomain>>(m, "GridDomain")
      .def_readonly("N", &GridDomain::N)
      .def_readonly("L", &GridDomain::L)
      .def_readonly("n", &GridDomain::n)
      .def_readonly("h", &GridDomain::h)
      .def_readonly("interior", &GridDomain::interior);
  m.def("build_grid",
        [](int N, double L, int n, double cap) {
          return std::const_pointer_cast<GridDomain>(build_grid(N, L, n, cap));
        },
        py::arg("N"), py::arg("L"), py::arg("n"),
        py::arg("memory_cap_bytes") = 6e9);

  py::class_<GridFunction>(m, "GridFunction")
      .def_property_readonly(
          "dom",
          [](const GridFunction& u) {
            return std::const_pointer_cast<GridDomain>(u.dom);
          })
      .def_property_readonly(
          "values",
          [](const GridFunction& u) {
            return py::array_t<double>(
                static_cast<py::ssize_t>(u.v.size()), u.v.data());
          })
      .def("max_abs", &GridFunction::max_abs);

  m.def("run_subcommand",
        [](const std::string& name, const std::string& config_path,
           const std::vector<std::string>& overrides, const std::string& out) {
          ExperimentConfig cfg =
              ExperimentConfig::load(config_path, overrides, out);
          run_subcommand(name, cfg);
        },
        py::arg("name"), py::arg("config_path"),
        py::arg("overrides") = std::vector<std::string>{},
        py::arg("out") = "");
}

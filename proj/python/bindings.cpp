#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nechannel/channel_engine.hpp"
#include "nechannel/classical_dynamics.hpp"
#include "nechannel/errors.hpp"
#include "nechannel/scenario.hpp"

namespace py = pybind11;
using namespace nechannel;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Channel analysis of two-packet hard-core collisions";

  static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
  static py::exception<MixedPhaseError> mixed_phase_error(m, "MixedPhaseError", PyExc_RuntimeError);
  static py::exception<InstabilityError> instability_error(m, "InstabilityError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      config_error(e.what());
    } catch (const MixedPhaseError& e) {
      py::object err = mixed_phase_error;
      PyErr_SetObject(err.ptr(), py::make_tuple(e.what(), e.safe_before(), e.safe_after()).ptr());
    } catch (const InstabilityError& e) {
      instability_error(e.what());
    }
  });

  py::class_<MassPair>(m, "MassPair")
      .def(py::init<double, double>(), py::arg("m_x"), py::arg("m_y"))
      .def_static("from_epsilon", &MassPair::from_epsilon, py::arg("m_x"), py::arg("eps"))
      .def_readwrite("m_x", &MassPair::m_x)
      .def_readwrite("m_y", &MassPair::m_y)
      .def_property_readonly("epsilon", &MassPair::epsilon);

  py::class_<ScenarioParams>(m, "ScenarioParams")
      .def(py::init([](double x_M0, double y_M0, double sigma0x, double sigma0y, double p_x0, const MassPair& masses,
                       double narrow_ratio_limit) {
             ScenarioParams p;
             p.x_M0 = x_M0;
             p.y_M0 = y_M0;
             p.sigma0x = sigma0x;
             p.sigma0y = sigma0y;
             p.p_x0 = p_x0;
             p.masses = masses;
             p.narrow_ratio_limit = narrow_ratio_limit;
             return p;
           }),
           py::arg("x_M0"), py::arg("y_M0"), py::arg("sigma0x"), py::arg("sigma0y"), py::arg("p_x0"),
           py::arg("masses"), py::arg("narrow_ratio_limit") = 0.05)
      .def_readwrite("x_M0", &ScenarioParams::x_M0)
      .def_readwrite("y_M0", &ScenarioParams::y_M0)
      .def_readwrite("sigma0x", &ScenarioParams::sigma0x)
      .def_readwrite("sigma0y", &ScenarioParams::sigma0y)
      .def_readwrite("p_x0", &ScenarioParams::p_x0)
      .def_readwrite("masses", &ScenarioParams::masses)
      .def_readwrite("narrow_ratio_limit", &ScenarioParams::narrow_ratio_limit)
      .def("validate", &ScenarioParams::validate)
      .def_property_readonly("epsilon", &ScenarioParams::epsilon)
      .def_property_readonly("validity_figure", &ScenarioParams::validity_figure);

  py::class_<ChannelEnsemble>(m, "ChannelEnsemble")
      .def_readonly("n", &ChannelEnsemble::n)
      .def_readonly("t", &ChannelEnsemble::t)
      .def_readonly("x_center", &ChannelEnsemble::x_center)
      .def_readonly("y_center", &ChannelEnsemble::y_center)
      .def_readonly("dsigma_y0", &ChannelEnsemble::dsigma_y0)
      .def_readonly("dsigma_y_n", &ChannelEnsemble::dsigma_y_n)
      .def_readonly("p_xn", &ChannelEnsemble::p_xn)
      .def_readonly("p_yn", &ChannelEnsemble::p_yn)
      .def_readonly("walls", &ChannelEnsemble::walls);

  py::class_<QuadraticFormState>(m, "QuadraticFormState")
      .def_readonly("a_xx", &QuadraticFormState::a_xx)
      .def_readonly("a_yy", &QuadraticFormState::a_yy)
      .def_readonly("a_xy", &QuadraticFormState::a_xy)
      .def_readonly("b_x", &QuadraticFormState::b_x)
      .def_readonly("b_y", &QuadraticFormState::b_y)
      .def_readonly("log_norm", &QuadraticFormState::log_norm)
      .def("__call__", [](const QuadraticFormState& s, double x, double y) { return evaluate(s, x, y); });

  py::class_<EntanglementReport>(m, "EntanglementReport")
      .def_readonly("a_xy", &EntanglementReport::a_xy)
      .def_readonly("purity", &EntanglementReport::purity)
      .def_readonly("schmidt_entropy", &EntanglementReport::schmidt_entropy);

  py::class_<ClassicalState>(m, "ClassicalState")
      .def_readonly("x", &ClassicalState::x)
      .def_readonly("y", &ClassicalState::y)
      .def_readonly("v_x", &ClassicalState::v_x)
      .def_readonly("v_y", &ClassicalState::v_y)
      .def_readonly("t", &ClassicalState::t)
      .def_readonly("n", &ClassicalState::n)
      .def_readonly("walls", &ClassicalState::walls);

  py::class_<ClassicalTrajectory>(m, "ClassicalTrajectory")
      .def_readonly("finished", &ClassicalTrajectory::finished)
      .def("state_at", &ClassicalTrajectory::state_at, py::arg("t"))
      .def("pair_times", &ClassicalTrajectory::pair_times)
      .def("pair_positions", &ClassicalTrajectory::pair_positions)
      .def_property_readonly("pair_count", &ClassicalTrajectory::pair_count);

  m.def("max_collisions", &max_collisions, py::arg("eps"));
  m.def("critical_collision_index", &critical_collision_index, py::arg("eps"));
  m.def("collision_angle", &collision_angle, py::arg("eps"));
  m.def("closed_form_velocities", &closed_form_velocities, py::arg("n"), py::arg("eps"), py::arg("v_x0"));
  m.def("event_driven_trajectory", &event_driven_trajectory, py::arg("x0"), py::arg("y0"), py::arg("v_x0"),
        py::arg("masses"), py::arg("t_end"));
  m.def("recursion_trajectory", &recursion_trajectory, py::arg("x0"), py::arg("y0"), py::arg("v_x0"),
        py::arg("masses"));

  m.def("initial_ensemble", &initial_ensemble, py::arg("params"));
  m.def("propagate_ensemble", &propagate_ensemble, py::arg("ensemble"), py::arg("params"), py::arg("t"));
  m.def("critical_ensemble", &critical_ensemble, py::arg("params"), py::arg("t"));
  m.def("mixed_phase_gate", &mixed_phase_gate, py::arg("ensemble"), py::arg("params"), py::arg("t"));
  m.def("channel_superposition", &channel_superposition, py::arg("ensemble"), py::arg("params"));
  m.def("entanglement_report", &entanglement_report, py::arg("state"));
  m.def("reduced_purity", &reduced_purity, py::arg("state"));

  m.def(
      "run_config",
      [](const std::string& text) {
        const ScenarioConfig cfg = parse_config(text);
        const RunResult res = run_scenario(cfg);
        py::dict out;
        out["columns"] = res.columns;
        out["rows"] = res.rows;
        out["n_max"] = res.n_max;
        out["validity_figure"] = res.validity_figure;
        return out;
      },
      py::arg("text"), "Parses a key=value config and returns the time series.");
}

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "boolattn/attention.hpp"
#include "boolattn/hardness.hpp"
#include "boolattn/taskgen.hpp"
#include "boolattn/trainer.hpp"
#include "boolattn/verify.hpp"

namespace py = pybind11;
using namespace boolattn;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
  const auto r = static_cast<std::size_t>(a.shape(0)), c = static_cast<std::size_t>(a.shape(1));
  return Matrix(r, c, std::vector<double>(a.data(), a.data() + r * c));
}

// No base handle, so pybind11 copies the buffer.
Array to_array(const Matrix& m) {
  return Array({static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())}, m.data().data());
}

Array to_array(const std::vector<double>& v) {
  return Array(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())},
               std::vector<py::ssize_t>{static_cast<py::ssize_t>(sizeof(double))}, v.data());
}

GradientOracleSpec oracle_from(std::optional<double> rho, std::uint64_t seed) {
  return rho ? GradientOracleSpec::perturbed(*rho, seed) : GradientOracleSpec::exact();
}

TrainConfig train_config(double eps, double eta_const, const std::string& decode, const std::string& eta_rule) {
  TrainConfig c;
  c.eps = eps;
  c.eta_const = eta_const;
  c.decode_mode = parse_decode_mode(decode);
  c.eta_rule = parse_eta_rule(eta_rule);
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "One-step softmax-attention learner for sparse Boolean functions";

  py::register_exception<std::invalid_argument>(m, "InvalidArgument", PyExc_ValueError);

  py::class_<TaskSpec>(m, "TaskSpec")
      .def_readonly("d", &TaskSpec::d)
      .def_readonly("k", &TaskSpec::k)
      .def_property_readonly("mode", [](const TaskSpec& t) { return std::string(to_string(t.mode)); })
      .def_readonly("noise_p", &TaskSpec::noise_p)
      .def_readonly("subset", &TaskSpec::subset)
      .def_readonly("seed", &TaskSpec::seed)
      .def_property_readonly("t", &TaskSpec::t);

  py::class_<Batch>(m, "Batch")
      .def_property_readonly("x", [](const Batch& b) { return to_array(b.x); })
      .def_property_readonly("y", [](const Batch& b) { return to_array(b.y); })
      .def_property_readonly("e", [](const Batch& b) { return to_array(b.e); })
      .def_property_readonly("c1", [](const Batch& b) { return b.pairing.c1; })
      .def_property_readonly("c2", [](const Batch& b) { return b.pairing.c2; })
      .def_readonly("task", &Batch::task);

  py::class_<RecoveryReport>(m, "RecoveryReport")
      .def_readonly("inf_error", &RecoveryReport::inf_error)
      .def_readonly("decoded_subset", &RecoveryReport::decoded_subset)
      .def_readonly("exact_match", &RecoveryReport::exact_match)
      .def_property_readonly("soft_prediction", [](const RecoveryReport& r) { return to_array(r.soft_prediction); })
      .def_property_readonly("w_after", [](const RecoveryReport& r) { return to_array(r.w_after.values); })
      .def("csv_row", [](const RecoveryReport& r) { return to_csv_row(r); });

  py::class_<ConcentrationReport>(m, "ConcentrationReport")
      .def_readonly("kappa", &ConcentrationReport::kappa)
      .def_readonly("max_deviation", &ConcentrationReport::max_deviation)
      .def_readonly("n_terms_checked", &ConcentrationReport::n_terms_checked)
      .def_readonly("argmax_tuple", &ConcentrationReport::argmax_tuple)
      .def_readonly("passed", &ConcentrationReport::pass);

  py::class_<HardnessReport>(m, "HardnessReport")
      .def_readonly("frac_all_zero_batches", &HardnessReport::frac_all_zero_batches)
      .def_readonly("floor", &HardnessReport::floor)
      .def_readonly("estimator_loss", &HardnessReport::estimator_loss);

  m.def("make_task",
        [](std::size_t d, std::size_t k, const std::string& mode, double p, std::uint64_t seed) {
          return make_task(d, k, parse_mode(mode), p, seed);
        },
        py::arg("d"), py::arg("k"), py::arg("mode") = "AND", py::arg("noise_p") = 0.0, py::arg("seed") = 0);
  m.def("sample_batch",
        [](const TaskSpec& t, std::size_t n, std::uint64_t seed) { return sample_batch(t, n, seed); },
        py::arg("task"), py::arg("n"), py::arg("seed") = 0);
  m.def("softmax_columns", [](const Array& w) { return to_array(softmax_columns(to_matrix(w))); });
  m.def("forward", [](const Array& w, const Array& x) { return to_array(forward({to_matrix(w)}, to_matrix(x))); });
  m.def("surrogate_loss", [](const Array& w, const Array& x, const Array& e) {
    return surrogate_loss({to_matrix(w)}, to_matrix(x), to_matrix(e));
  });
  m.def("analytic_gradient", [](const Array& w, const Array& x, const Array& e) {
    return to_array(analytic_gradient({to_matrix(w)}, to_matrix(x), to_matrix(e)));
  });
  m.def("fd_gradient",
        [](const Array& w, const Array& x, const Array& e, double h) {
          return to_array(fd_gradient({to_matrix(w)}, to_matrix(x), to_matrix(e), h));
        },
        py::arg("w"), py::arg("x"), py::arg("e"), py::arg("h") = 1e-5);
  m.def("learning_rate",
        [](std::size_t d, double eps, double eta_const, const std::string& rule) {
          return learning_rate(d, train_config(eps, eta_const, "GAP_SPLIT", rule));
        },
        py::arg("d"), py::arg("eps") = 8.0, py::arg("eta_const") = 8.0, py::arg("eta_rule") = "theorem");
  m.def("run_teacher_forced",
        [](const Batch& b, double eps, double eta_const, const std::string& decode, std::optional<double> rho,
           std::uint64_t seed) {
          return run_teacher_forced(b, train_config(eps, eta_const, decode, "theorem"), oracle_from(rho, seed), seed);
        },
        py::arg("batch"), py::arg("eps") = 8.0, py::arg("eta_const") = 8.0, py::arg("decode") = "GAP_SPLIT",
        py::arg("rho") = py::none(), py::arg("seed") = 0);
  m.def("run_majority",
        [](const Batch& b, double eta_const, const std::string& eta_rule, std::uint64_t seed) {
          return run_majority(b, train_config(8.0, eta_const, "GAP_SPLIT", eta_rule), GradientOracleSpec::exact(),
                              seed);
        },
        py::arg("batch"), py::arg("eta_const") = 1.0, py::arg("eta_rule") = "linear", py::arg("seed") = 0);
  m.def("kappa", &kappa, py::arg("d"), py::arg("p"), py::arg("n"));
  m.def("check_interaction_concentration",
        [](const Array& x, double p, bool triples) { return check_interaction_concentration(to_matrix(x), p, triples); },
        py::arg("x"), py::arg("p"), py::arg("include_triples") = false);
  m.def("hardness_floor", &hardness_floor, py::arg("d"), py::arg("k"));
  m.def("label_degeneracy", &label_degeneracy, py::arg("d"), py::arg("k"), py::arg("n"), py::arg("trials"),
        py::arg("seed") = 0);
  m.def("support_loss",
        [](const std::vector<double>& f, std::size_t k, std::size_t n_subsets, std::uint64_t seed) {
          return support_loss(f, k, n_subsets, seed);
        },
        py::arg("f"), py::arg("k"), py::arg("n_subsets"), py::arg("seed") = 0);
}

/* Copyright 2026 The SparsestMax Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>
#include <string>

#include "sparsestmax/error.hpp"
#include "sparsestmax/simplex.hpp"
#include "sparsestmax/ssn_layer.hpp"
#include "sparsestmax/toy_trainer.hpp"
#include "sparsestmax/verify.hpp"

namespace py = pybind11;
using namespace ssn;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Vector to_vector(const Array& a) {
  if (a.ndim() != 1) throw InvalidInput("expected a 1-D array");
  return Vector(a.data(), a.data() + a.size());
}

Array to_array(const Vector& v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::dict projection_dict(const ProjectionResult& res) {
  py::dict d;
  d["p"] = to_array(res.p);
  d["stage"] = std::string(stage_name(res.stage));
  d["support"] = res.support;
  d["depth"] = res.depth();
  return d;
}

Omega parse_omega(const std::vector<std::string>& names) {
  Omega omega;
  for (const auto& n : names) omega.push_back(parse_normalizer(n));
  return omega;
}

Array ssn_forward_py(const Array& x, const Array& p, const Array& pp,
                     const std::vector<std::string>& omega, double eps, std::size_t gn_groups) {
  if (x.ndim() != 4) throw InvalidInput("x must be a 4-D NCHW array");
  const Shape4 shape{static_cast<std::size_t>(x.shape(0)), static_cast<std::size_t>(x.shape(1)),
                     static_cast<std::size_t>(x.shape(2)), static_cast<std::size_t>(x.shape(3))};
  LayerConfig cfg;
  cfg.omega = parse_omega(omega);
  cfg.eps = eps;
  cfg.gn_groups = gn_groups;
  const SsnParams params = SsnParams::init(shape.c, cfg.omega.size(), 1.0, eps);
  const Tensor4 t(shape, Vector(x.data(), x.data() + x.size()));
  const SsnForward out = ssn_forward_with_ratios(t, params, to_vector(p), to_vector(pp), cfg);
  Array y({x.shape(0), x.shape(1), x.shape(2), x.shape(3)});
  std::copy(out.y.data().begin(), out.y.data().end(), y.mutable_data());
  return y;
}

py::dict train_py(std::optional<std::string> config_json, std::optional<std::uint64_t> seed) {
  ToyConfig cfg = config_json ? toy_config_from_json(*config_json) : ToyConfig{};
  if (seed) cfg.model.seed = *seed;
  const TrainResult res = train(cfg.model, cfg.optimizer, make_dataset(cfg));
  bool one_hot = true;
  py::list layers;
  for (const GateRecord& g : res.log.rows.back().layers) {
    one_hot = one_hot && is_one_hot(g.p) && is_one_hot(g.pp);
    layers.append(py::make_tuple(to_array(g.p), to_array(g.pp)));
  }
  std::ostringstream csv;
  write_trajectory_csv(csv, res.log);
  py::dict d;
  d["final_accuracy"] = res.final_accuracy;
  d["final_radius"] = res.final_radius;
  d["initial_loss"] = res.log.rows.front().loss;
  d["final_loss"] = res.log.rows.back().loss;
  d["all_one_hot"] = one_hot;
  d["final_ratios"] = layers;
  d["log_csv"] = csv.str();
  return d;
}

}  // namespace

PYBIND11_MODULE(_sparsestmax, m) {
  m.doc() = "SparsestMax projections and sparse switchable normalization";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<InvalidState>(m, "InvalidState", PyExc_RuntimeError);
  py::register_exception<NotConverged>(m, "NotConverged", PyExc_RuntimeError);
  py::register_exception<TrainingFailed>(m, "TrainingFailed", PyExc_RuntimeError);

  m.def("softmax", [](const Array& z) { return to_array(softmax(to_vector(z))); }, py::arg("z"));
  m.def("sparsemax", [](const Array& z) { return to_array(sparsemax(to_vector(z))); }, py::arg("z"));
  m.def("sparsemax_jacobian", [](const Array& z) {
    const Matrix j = sparsemax_jacobian(to_vector(z));
    Array out({static_cast<py::ssize_t>(j.rows), static_cast<py::ssize_t>(j.cols)});
    std::copy(j.data.begin(), j.data.end(), out.mutable_data());
    return out;
  }, py::arg("z"));
  m.def("sparsestmax", [](const Array& z, double r) {
    return projection_dict(sparsestmax(to_vector(z), r));
  }, py::arg("z"), py::arg("r"));
  m.def("sparsestmax_vjp", [](const Array& z, double r, const Array& upstream) {
    return to_array(sparsestmax_vjp(sparsestmax(to_vector(z), r), to_vector(upstream)));
  }, py::arg("z"), py::arg("r"), py::arg("upstream"));
  m.def("geometry", [](std::size_t k) {
    const SimplexGeometry g = SimplexGeometry::of(k);
    py::dict d;
    d["k"] = g.k;
    d["center"] = to_array(g.center);
    d["r_circum"] = g.r_circum;
    d["r_inscribed"] = g.r_inscribed;
    return d;
  }, py::arg("k"));
  m.def("schedule_radius", [](std::size_t total_steps, std::size_t k, std::size_t step,
                              double r_start, double r_end) {
    return schedule_radius(RadiusSchedule::linear(total_steps, SimplexGeometry::of(k), r_start, r_end),
                           step);
  }, py::arg("total_steps"), py::arg("k"), py::arg("step"), py::arg("r_start") = 0.0,
     py::arg("r_end") = 1.0);
  m.def("argmax_onehot", [](const Array& p) { return to_array(argmax_onehot(to_vector(p))); },
        py::arg("p"));
  m.def("gradcheck", [](std::uint64_t seed, std::size_t trials, std::size_t k) {
    const verify::GradcheckReport r = verify::gradcheck(seed, trials, k);
    py::dict d;
    d["max_relative_error"] = r.max_relative_error;
    d["failures"] = r.failures;
    d["passed"] = r.passed();
    return d;
  }, py::arg("seed") = 0, py::arg("trials") = 200, py::arg("k") = 3);
  m.def("ssn_forward", &ssn_forward_py, py::arg("x"), py::arg("p"), py::arg("pp"),
        py::arg("omega") = std::vector<std::string>{"IN", "BN", "LN"}, py::arg("eps") = 1e-5,
        py::arg("gn_groups") = 32,
        "Train-mode SSN forward with explicit ratios, gamma = 1 and beta = 0.");
  m.def("train", &train_py, py::arg("config_json") = py::none(), py::arg("seed") = py::none());
}

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ratelink/config.hpp"
#include "ratelink/experiments.hpp"

namespace py = pybind11;
using namespace ratelink;
using Index = Eigen::Index;

namespace {

ScenarioConfig scenario_from_text(const std::string& text) {
  ScenarioConfig cfg = scenario_from_json(nlohmann::json::parse(text));
  cfg.validate();
  return cfg;
}

py::dict stat_dict(const Stat& s) {
  py::dict d;
  d["mean"] = s.mean;
  d["stderr"] = s.se;
  return d;
}

py::dict metrics_dict(const MetricsSummary& m) {
  py::dict d;
  py::list l1;
  for (const auto& s : m.l1_per_sensor) l1.append(stat_dict(s));
  d["l1"] = l1;
  d["l2"] = stat_dict(m.l2);
  d["l3_total"] = stat_dict(m.l3_total);
  d["l3_per_step"] = stat_dict(m.l3_per_step);
  d["rounds"] = m.rounds;
  d["diverged"] = m.diverged_rounds;
  return d;
}

}  // namespace

PYBIND11_MODULE(_ratelink, m) {
  m.doc() = "rate-limited closed-loop sensing and control";

  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);
  py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_RuntimeError);

  // linear algebra
  m.def("cholesky", &cholesky, py::arg("spd"));
  m.def("sym_eig", [](const Matrix& s) {
    const SymEig e = sym_eig(s);
    return py::make_tuple(e.values, e.vectors);
  }, py::arg("s"), "Eigenvalues (descending) and eigenvectors of a symmetric matrix.");
  m.def("solve_spd", &solve_spd, py::arg("spd"), py::arg("rhs"));

  // plant / control / estimation
  py::class_<PlantModel>(m, "PlantModel")
      .def_readonly("a", &PlantModel::a)
      .def_readonly("b", &PlantModel::b)
      .def_readonly("q", &PlantModel::q)
      .def_readonly("dt", &PlantModel::dt);
  m.def("make_plant", &make_plant, py::arg("a"), py::arg("b"), py::arg("q"), py::arg("dt"));
  m.def("make_double_integrator", &make_double_integrator, py::arg("dt") = 0.1);

  py::class_<LqrSolution>(m, "LqrSolution")
      .def_readonly("p", &LqrSolution::p)
      .def_readonly("k", &LqrSolution::k)
      .def_readonly("iterations", &LqrSolution::iterations)
      .def_readonly("residual", &LqrSolution::residual);
  m.def("solve_dare", &solve_dare, py::arg("a"), py::arg("b"), py::arg("q_goal"), py::arg("r_goal"),
        py::arg("tol") = 1e-12, py::arg("max_iterations") = 1000000);
  m.def("steady_state_covariance", &steady_state_covariance, py::arg("plant"), py::arg("c"),
        py::arg("r"), py::arg("tol") = 1e-12, py::arg("max_iterations") = 1000000);

  // codecs
  py::class_<Codec>(m, "Codec")
      .def_property_readonly("kind", [](const Codec& c) { return to_string(c.kind()); })
      .def_property_readonly("input_dim", &Codec::input_dim)
      .def_property_readonly("latent_dim", &Codec::latent_dim)
      .def("encode", &Codec::encode, py::arg("y"))
      .def("decode", &Codec::decode, py::arg("z"))
      .def("roundtrip", [](const Codec& c, const Matrix& rows) {
        return Matrix(c.roundtrip_columns(rows.transpose()).transpose());
      }, py::arg("samples"), "Reconstruct each row of `samples`.")
      .def("offline_mse", [](const Codec& c, const Matrix& rows) { return offline_mse(c, rows); },
           py::arg("samples"))
      .def("save", [](const Codec& c, const std::filesystem::path& p) { save_codec(c, p); })
      .def("__repr__", [](const Codec& c) {
        return "<Codec " + to_string(c.kind()) + " " + std::to_string(c.input_dim()) + "->" +
               std::to_string(c.latent_dim()) + ">";
      });
  m.def("identity_codec", &Codec::identity, py::arg("dim"));
  m.def("pca_fit", [](const Matrix& rows, Index d) { return Codec(pca_fit(rows, d)); },
        py::arg("samples"), py::arg("d"));
  m.def("load_codec", &load_codec, py::arg("path"));
  m.def("ae_train", [](const Matrix& rows, Index d, const std::string& training_json) {
    const TrainConfig cfg = train_config_from_json(nlohmann::json::parse(training_json));
    TrainResult tr;
    {
      py::gil_scoped_release release;
      tr = ae_train({CodecKind::ae, rows.cols(), d}, rows, cfg);
    }
    py::dict curve;
    curve["train_mse"] = tr.curve.train_mse;
    curve["validation_mse"] = tr.curve.validation_mse;
    curve["initial_validation_mse"] = tr.curve.initial_validation_mse;
    curve["best_epoch"] = tr.curve.best_epoch;
    return py::make_tuple(Codec(std::move(tr.codec)), curve);
  }, py::arg("samples"), py::arg("latent_dim"), py::arg("training_json") = "{}");

  // scenarios
  m.def("normalize_scenario", [](const std::string& text) {
    return scenario_to_json(scenario_from_text(text)).dump();
  }, py::arg("scenario_json"), "Parse strictly and return the scenario with defaults filled in.");
  m.def("collect_dataset", [](const std::string& text, int rounds, bool test) {
    const ScenarioConfig cfg = scenario_from_text(text);
    Dataset ds;
    {
      py::gil_scoped_release release;
      const System sys = build_system(cfg);
      ds = collect_dataset(sys, cfg, test ? kTestStreamBase : kTrainStreamBase,
                           rounds > 0 ? rounds : cfg.train_rounds);
    }
    return ds.per_sensor;
  }, py::arg("scenario_json"), py::arg("rounds") = 0, py::arg("test") = false);
  m.def("evaluate_online", [](const std::string& text, const std::vector<Codec>& codecs) {
    const ScenarioConfig cfg = scenario_from_text(text);
    MetricsSummary ms;
    {
      py::gil_scoped_release release;
      ScenarioConfig plain = cfg;
      plain.codecs.clear();
      plain.budget.reset();
      ms = evaluate_online(build_system(plain), cfg, codecs);
    }
    return metrics_dict(ms);
  }, py::arg("scenario_json"), py::arg("codecs") = std::vector<Codec>{});
  m.def("run_sweep", [](const std::string& text, const std::string& cache_dir, int jobs,
                        const std::string& out_dir) {
    const SweepSpec spec = sweep_from_json(nlohmann::json::parse(text));
    SweepResult result;
    {
      py::gil_scoped_release release;
      CodecCache cache(cache_dir);
      result = run_sweep(spec, cache, {jobs});
      if (!out_dir.empty()) emit_report(result, out_dir);
    }
    py::list rows;
    for (const auto& r : metrics_rows(result)) {
      py::dict d;
      d["sweep_id"] = r.sweep_id;
      d["axis_value"] = r.axis_value;
      d["method"] = r.method;
      d["sensor_id"] = r.sensor_id;
      d["metric"] = r.metric;
      d["mean"] = r.mean;
      d["stderr"] = r.se;
      d["rounds"] = r.rounds;
      d["diverged"] = r.diverged;
      rows.append(d);
    }
    return rows;
  }, py::arg("sweep_json"), py::arg("cache_dir") = "", py::arg("jobs") = 1, py::arg("out_dir") = "");
}

#include <algorithm>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fedboost/boosting.hpp"
#include "fedboost/metrics.hpp"
#include "fedboost/orchestrator/dataset.hpp"
#include "fedboost/orchestrator/plan.hpp"
#include "fedboost/orchestrator/simulate.hpp"

namespace py = pybind11;
using namespace fedboost;

namespace {

using Matrix = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Labels = py::array_t<std::uint32_t, py::array::c_style | py::array::forcecast>;

FeatureMatrix to_matrix(const Matrix& x) {
  if (x.ndim() != 2) throw py::value_error("X must be 2-D");
  const auto rows = static_cast<std::size_t>(x.shape(0));
  const auto cols = static_cast<std::size_t>(x.shape(1));
  return FeatureMatrix(rows, cols, std::vector<double>(x.data(), x.data() + rows * cols));
}

DatasetShard to_shard(const Matrix& x, const Labels& y, std::uint32_t num_classes) {
  DatasetShard s;
  s.features = to_matrix(x);
  if (y.ndim() != 1) throw py::value_error("y must be 1-D");
  s.labels.assign(y.data(), y.data() + y.size());
  s.num_classes = num_classes;
  validate_shard(s);
  return s;
}

py::array_t<double> to_numpy(const FeatureMatrix& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

py::array_t<std::uint32_t> to_numpy(const std::vector<ClassId>& v) {
  return py::array_t<std::uint32_t>(static_cast<py::ssize_t>(v.size()), v.data());
}

// pybind11 holders cannot be pointers to const.
std::shared_ptr<WeakModel> unconst(WeakModelPtr p) { return std::const_pointer_cast<WeakModel>(p); }

LearnerSpec make_spec(const std::string& family, const std::map<std::string, double>& hyper) {
  LearnerSpec spec{family, hyper};
  validate_learner_spec(spec);
  return spec;
}

}  // namespace

PYBIND11_MODULE(_fedboost, m) {
  m.doc() = "Federated AdaBoost: weak learners, boosting steps, plans and local simulation.";

  py::register_exception<Error>(m, "FedBoostError");

  py::class_<Plan>(m, "Plan")
      .def_property(
          "collaborators", [](const Plan& p) { return p.federation.num_collaborators; },
          [](Plan& p, std::uint32_t n) { p.federation.num_collaborators = n; })
      .def_property(
          "rounds", [](const Plan& p) { return p.federation.rounds; },
          [](Plan& p, std::uint32_t t) { p.federation.rounds = t; })
      .def_property(
          "seed", [](const Plan& p) { return p.federation.seed; },
          [](Plan& p, std::uint64_t s) { p.federation.seed = s; })
      .def_property_readonly("family", [](const Plan& p) { return p.federation.learner.family_id; })
      .def_property_readonly("hyperparameters",
                             [](const Plan& p) { return p.federation.learner.hyperparameters; })
      .def_property_readonly("mode",
                             [](const Plan& p) { return std::string(to_string(p.federation.mode)); })
      .def_readonly("tasks", &Plan::tasks)
      .def_property(
          "poll_interval", [](const Plan& p) { return p.protocol.poll_interval; },
          [](Plan& p, double v) { p.protocol.poll_interval = v; })
      .def_property_readonly("retention",
                             [](const Plan& p) { return p.store.window; })
      .def_property_readonly("test_fraction", [](const Plan& p) { return p.data.test_fraction; })
      .def("render", &render_plan)
      .def("__eq__", [](const Plan& a, const Plan& b) { return a == b; });

  m.def("parse_plan", &parse_plan, py::arg("text"));
  m.def("load_plan", [](const std::filesystem::path& p) { return load_plan(p); }, py::arg("path"));

  m.def(
      "read_csv",
      [](const std::filesystem::path& path) {
        auto d = ingest_csv(path);
        return py::make_tuple(to_numpy(d.shard.features), to_numpy(d.shard.labels), d.label_names);
      },
      py::arg("path"), "Returns (X, y, label_names).");

  m.def(
      "split_iid",
      [](const Matrix& x, const Labels& y, std::uint32_t n, std::uint64_t seed) {
        auto shard = to_shard(x, y, *std::max_element(y.data(), y.data() + y.size()) + 1);
        py::list parts;
        for (const auto& p : split_iid(shard, n, seed)) {
          parts.append(py::make_tuple(to_numpy(p.features), to_numpy(p.labels)));
        }
        return parts;
      },
      py::arg("X"), py::arg("y"), py::arg("n"), py::arg("seed") = 0);

  m.def(
      "f1_macro",
      [](const Labels& pred, const Labels& y, std::uint32_t k) {
        return f1_macro({pred.data(), static_cast<std::size_t>(pred.size())},
                        {y.data(), static_cast<std::size_t>(y.size())}, k);
      },
      py::arg("predictions"), py::arg("labels"), py::arg("num_classes"));

  m.def("families", &registered_families);

  py::class_<WeakModel, std::shared_ptr<WeakModel>>(m, "WeakModel")
      .def_property_readonly("family", [](const WeakModel& w) { return std::string(w.family_id()); })
      .def_property_readonly("num_features", &WeakModel::num_features)
      .def("predict",
           [](const WeakModel& w, const Matrix& x) {
             auto fm = to_matrix(x);
             std::vector<ClassId> out(fm.rows());
             for (std::size_t i = 0; i < fm.rows(); ++i) out[i] = w.predict(fm.row(i));
             return to_numpy(out);
           })
      .def("encode", [](const WeakModel& w) {
        auto b = w.encode();
        return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
      });

  m.def(
      "fit",
      [](const std::string& family, const Matrix& x, const Labels& y, std::uint32_t k,
         std::optional<std::vector<double>> weights, std::uint64_t seed,
         std::map<std::string, double> hyper) {
        auto shard = to_shard(x, y, k);
        auto w = weights ? WeightVector(*weights) : WeightVector::uniform(shard.size());
        return unconst(fit_model(make_spec(family, hyper), shard, w, seed));
      },
      py::arg("family"), py::arg("X"), py::arg("y"), py::arg("num_classes"),
      py::arg("weights") = py::none(), py::arg("seed") = 0,
      py::arg("hyperparameters") = std::map<std::string, double>{});

  m.def("decode_model", [](const std::string& family, std::uint32_t version, py::bytes payload) {
    std::string s = payload;
    return unconst(decode_model(family, version,
                                {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()}));
  });

  py::class_<StrongHypothesis>(m, "Ensemble")
      .def("__len__", &StrongHypothesis::size)
      .def_property_readonly("alphas",
                             [](const StrongHypothesis& h) {
                               std::vector<double> a;
                               for (const auto& t : h.terms()) a.push_back(t.alpha);
                               return a;
                             })
      .def("predict",
           [](const StrongHypothesis& h, const Matrix& x) {
             return to_numpy(predict_strong(h, to_matrix(x)));
           })
      .def("save", [](const StrongHypothesis& h, const std::filesystem::path& p) {
        save_ensemble(h, p);
      });

  m.def("load_ensemble", [](const std::filesystem::path& p) { return load_ensemble(p); });

  m.def(
      "sequential_adaboost",
      [](const std::string& family, const Matrix& x, const Labels& y, std::uint32_t k,
         std::uint32_t rounds, std::uint64_t seed, std::map<std::string, double> hyper) {
        return sequential_adaboost(make_spec(family, hyper), to_shard(x, y, k), rounds, seed)
            .ensemble;
      },
      py::arg("family"), py::arg("X"), py::arg("y"), py::arg("num_classes"), py::arg("rounds"),
      py::arg("seed") = 0, py::arg("hyperparameters") = std::map<std::string, double>{});

  m.def(
      "simulate",
      [](const Plan& plan, const Matrix& x, const Labels& y, std::uint32_t k,
         const std::string& transport) {
        auto shard = to_shard(x, y, k);
        SimulateOptions opts;
        if (transport == "tcp") {
          opts.transport = Transport::kTcp;
        } else if (transport != "inproc") {
          throw py::value_error("transport must be 'inproc' or 'tcp'");
        }
        RunReport r;
        {
          py::gil_scoped_release release;
          r = simulate(plan, shard, opts);
        }
        py::dict out;
        out["f1_curve"] = r.f1_curve();
        out["final_f1"] = r.f1_curve().empty() ? py::none() : py::cast(r.final_f1());
        out["wall_seconds"] = r.wall_seconds;
        std::vector<py::tuple> decisions;
        for (const auto& d : r.federation.decisions) {
          decisions.push_back(py::make_tuple(d.round, d.best_index, d.alpha, d.global_error));
        }
        out["decisions"] = decisions;
        out["ensemble"] = r.federation.ensemble;
        out["report"] = report_jsonl(r);
        return out;
      },
      py::arg("plan"), py::arg("X"), py::arg("y"), py::arg("num_classes"),
      py::arg("transport") = "inproc");
}

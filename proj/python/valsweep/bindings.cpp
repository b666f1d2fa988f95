#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "valsweep/classifiers.hpp"
#include "valsweep/config.hpp"
#include "valsweep/error.hpp"
#include "valsweep/evaluator.hpp"
#include "valsweep/metrics.hpp"
#include "valsweep/partition.hpp"
#include "valsweep/report.hpp"
#include "valsweep/tabular.hpp"

namespace py = pybind11;
using namespace valsweep;

namespace {

std::vector<std::uint8_t> as_labels(const std::vector<int>& y) {
  std::vector<std::uint8_t> out;
  out.reserve(y.size());
  for (int v : y) {
    if (v != 0 && v != 1) throw Error(ErrorKind::kNonBinaryTarget, "labels must be 0 or 1");
    out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

Matrix as_matrix(const std::vector<std::vector<double>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  Matrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw Error(ErrorKind::kLengthMismatch, "ragged feature rows");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = rows[r][c];
  }
  return m;
}

py::dict metric_dict(const MetricSet& m) {
  py::dict d;
  for (auto metric : kAllMetrics) d[py::str(std::string(metric_name(metric)))] = m.get(metric);
  return d;
}

HyperParams params_from_dict(const py::dict& d) {
  std::vector<std::pair<std::string, ParamValue>> items;
  for (auto [k, v] : d) {
    ParamValue value;
    if (v.is_none()) value = std::monostate{};
    else if (py::isinstance<py::bool_>(v)) throw Error(ErrorKind::kInvalidArgument, "boolean hyperparameters are not supported");
    else if (py::isinstance<py::int_>(v)) value = v.cast<std::int64_t>();
    else if (py::isinstance<py::float_>(v)) value = v.cast<double>();
    else value = v.cast<std::string>();
    items.emplace_back(k.cast<std::string>(), std::move(value));
  }
  return HyperParams(std::move(items));
}

ModelFamily family_or_throw(const std::string& name) {
  auto f = parse_family(name);
  if (!f) throw Error(ErrorKind::kInvalidArgument, "unknown model '" + name + "'");
  return *f;
}

// Runs the configured sweep and returns the rendered summary CSV plus the
// best view as JSON text.
py::dict run_config(const std::string& ini, std::size_t jobs) {
  auto config = parse_config(ini);
  validate(config);
  const auto data = load_csv(config.dataset, config.target);
  std::vector<ModelOutcome> outcomes;
  ReportTable table;
  {
    py::gil_scoped_release release;
    const Evaluator evaluator(data, config.experiment, jobs);
    outcomes = evaluator.run(resolve_models(config));
    RunMetadata meta{std::filesystem::path(config.dataset).filename().string(),
                     data.row_count(),
                     data.feature_count(),
                     prevalence(data),
                     config.experiment.seed,
                     config_digest(config),
                     std::string(scorer_name(evaluator.scorer())),
                     std::string(grid_mode_name(config.experiment.grid))};
    table = build_report(meta, outcomes);
    if (!config.output_dir.empty()) write_report_files(config.output_dir, table, outcomes);
  }
  py::dict out;
  out["summary_csv"] = render_summary(table, ReportFormat::kCsv);
  out["best_json"] = render_best_view(table, ReportFormat::kJson);
  out["best_markdown"] = render_best_view(table, ReportFormat::kMarkdown);
  return out;
}

}  // namespace

PYBIND11_MODULE(_valsweep, m) {
  m.doc() = "Validation-strategy sweeps for binary classifiers";

  py::register_exception<Error>(m, "ValsweepError", PyExc_ValueError);

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("row_count", &Dataset::row_count)
      .def_property_readonly("feature_count", &Dataset::feature_count)
      .def_property_readonly("target_name", &Dataset::target_name)
      .def_property_readonly("feature_names", &Dataset::feature_names)
      .def_property_readonly("target", [](const Dataset& d) {
        return std::vector<int>(d.target().begin(), d.target().end());
      })
      .def("prevalence", [](const Dataset& d) { return prevalence(d); });

  m.def("load_csv", [](const std::filesystem::path& path, const std::string& target) {
    return load_csv(path, target);
  }, py::arg("path"), py::arg("target") = "target");

  m.def("stratified_holdout", [](const std::vector<int>& y, double test_fraction, std::uint64_t seed) {
    const auto s = stratified_holdout(as_labels(y), test_fraction, seed);
    return py::make_tuple(s.train, s.test);
  }, py::arg("labels"), py::arg("test_fraction"), py::arg("seed"));

  m.def("stratified_kfold", [](const std::vector<int>& y, std::size_t k, std::uint64_t seed,
                               std::size_t repeats) {
    const auto labels = as_labels(y);
    const auto plan = repeats == 1 ? stratified_kfold(labels, k, seed)
                                   : repeated_stratified_kfold(labels, k, repeats, seed);
    py::list out;
    for (const auto& s : plan.splits) out.append(py::make_tuple(s.train, s.test));
    return out;
  }, py::arg("labels"), py::arg("k"), py::arg("seed"), py::arg("repeats") = 1);

  m.def("roc_auc", [](const std::vector<int>& y, const std::vector<double>& s) {
    return roc_auc(as_labels(y), s);
  });
  m.def("average_precision", [](const std::vector<int>& y, const std::vector<double>& s) {
    return average_precision(as_labels(y), s);
  });
  m.def("mcc", [](const std::vector<int>& y, const std::vector<int>& p) {
    return mcc(as_labels(y), as_labels(p));
  });
  m.def("f1_weighted", [](const std::vector<int>& y, const std::vector<int>& p) {
    return f1_weighted(as_labels(y), as_labels(p));
  });
  m.def("brier", [](const std::vector<int>& y, const std::vector<double>& p) {
    return brier(as_labels(y), p);
  });
  m.def("compute_all", [](const std::vector<int>& y, const std::vector<double>& p, double threshold) {
    const auto labels = as_labels(y);
    return metric_dict(compute_all(labels, labels_from_proba(p, threshold), p));
  }, py::arg("labels"), py::arg("proba"), py::arg("threshold") = 0.5);

  m.def("choose_scorer", [](double prevalence) { return std::string(scorer_name(choose_scorer(prevalence))); });

  m.def("models", [] {
    std::vector<std::string> names;
    for (const auto& s : registry()) names.emplace_back(s.name());
    return names;
  });
  m.def("grid", [](const std::string& name) {
    std::vector<std::string> out;
    for (const auto& hp : spec_for(family_or_throw(name)).enumerate()) out.push_back(hp.to_string());
    return out;
  });

  m.def("fit_predict", [](const std::string& name, const std::vector<std::vector<double>>& X,
                          const std::vector<int>& y, const std::vector<std::vector<double>>& X_new,
                          const py::dict& params, std::uint64_t seed) {
    const auto model = fit(family_or_throw(name), params_from_dict(params), as_matrix(X), as_labels(y), seed);
    return model->predict_proba(as_matrix(X_new));
  }, py::arg("model"), py::arg("X"), py::arg("y"), py::arg("X_new"), py::arg("params") = py::dict(),
     py::arg("seed") = 0);

  m.def("dump_model", [](const std::string& name, const std::vector<std::vector<double>>& X,
                         const std::vector<int>& y, const py::dict& params, std::uint64_t seed) {
    return fit(family_or_throw(name), params_from_dict(params), as_matrix(X), as_labels(y), seed)
        ->to_json()
        .dump();
  }, py::arg("model"), py::arg("X"), py::arg("y"), py::arg("params") = py::dict(), py::arg("seed") = 0);

  m.def("load_model_predict", [](const std::string& dump, const std::vector<std::vector<double>>& X) {
    return model_from_json(nlohmann::json::parse(dump))->predict_proba(as_matrix(X));
  });

  m.def("default_config", [] { return dump_config(RunConfig{}); });
  m.def("run", &run_config, py::arg("config"), py::arg("jobs") = 1,
        "Run the sweep described by an INI config string.");
}

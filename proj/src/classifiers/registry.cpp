#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "valsweep/classifiers.hpp"
#include "valsweep/error.hpp"
#include "valsweep/models.hpp"
#include "valsweep/tabular.hpp"

namespace valsweep {

namespace {

constexpr std::string_view kModelFormat = "valsweep-model";
constexpr int kModelFormatVersion = 1;

ParamValue none() { return std::monostate{}; }
ParamValue integer(std::int64_t v) { return v; }
ParamValue real(double v) { return v; }
ParamValue token(std::string v) { return v; }

nlohmann::json param_to_json(const ParamValue& v) {
  return std::visit(
      [](const auto& x) -> nlohmann::json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else {
          return x;
        }
      },
      v);
}

ParamValue param_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::monostate{};
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw Error(ErrorKind::kInvalidArgument, "unsupported hyperparameter value " + j.dump());
}

void check_training_inputs(const Matrix& X, std::span<const std::uint8_t> y) {
  if (X.rows() != y.size()) {
    throw Error(ErrorKind::kLengthMismatch,
                fmt::format("{} feature rows vs {} labels", X.rows(), y.size()));
  }
  const auto [neg, pos] = class_counts(y);
  if (neg == 0 || pos == 0) {
    throw Error(ErrorKind::kSingleClassTraining, "training labels contain a single class");
  }
  for (double v : X.data()) {
    if (!std::isfinite(v)) throw Error(ErrorKind::kNonFiniteFeature, "training matrix has a non-finite value");
  }
}

}  // namespace

std::string_view family_name(ModelFamily family) {
  switch (family) {
    case ModelFamily::kDecisionTree: return "DecisionTree";
    case ModelFamily::kKnn: return "KNN";
    case ModelFamily::kGaussianNb: return "GaussianNB";
    case ModelFamily::kBernoulliNb: return "BernoulliNB";
    case ModelFamily::kLogReg: return "LogReg";
    case ModelFamily::kLinearSvmCalibrated: return "LinearSVM_Calibrated";
    case ModelFamily::kHistGb: return "HistGB";
  }
  return "?";
}

std::optional<ModelFamily> parse_family(std::string_view name) {
  for (const auto& spec : registry()) {
    if (spec.name() == name) return spec.family;
  }
  return std::nullopt;
}

std::string format_param(const ParamValue& value) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "None";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(x);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(x);
        } else {
          return x;
        }
      },
      value);
}

const ParamValue* HyperParams::find(std::string_view name) const {
  for (const auto& [key, value] : items_) {
    if (key == name) return &value;
  }
  return nullptr;
}

std::optional<std::int64_t> HyperParams::integer_or_none(
    std::string_view name, std::optional<std::int64_t> fallback) const {
  const auto* v = find(name);
  if (!v) return fallback;
  if (std::holds_alternative<std::monostate>(*v)) return std::nullopt;
  if (const auto* i = std::get_if<std::int64_t>(v)) return *i;
  throw Error(ErrorKind::kInvalidArgument, fmt::format("'{}' must be an integer or None", name));
}

double HyperParams::real(std::string_view name, double fallback) const {
  const auto* v = find(name);
  if (!v) return fallback;
  if (const auto* d = std::get_if<double>(v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(v)) return static_cast<double>(*i);
  throw Error(ErrorKind::kInvalidArgument, fmt::format("'{}' must be a number", name));
}

std::optional<double> HyperParams::real_or_none(std::string_view name,
                                                std::optional<double> fallback) const {
  const auto* v = find(name);
  if (!v) return fallback;
  if (std::holds_alternative<std::monostate>(*v)) return std::nullopt;
  return real(name, 0.0);
}

std::string HyperParams::token(std::string_view name, std::string fallback) const {
  const auto* v = find(name);
  if (!v) return fallback;
  if (std::holds_alternative<std::monostate>(*v)) return "None";
  if (const auto* s = std::get_if<std::string>(v)) return *s;
  throw Error(ErrorKind::kInvalidArgument, fmt::format("'{}' must be a token", name));
}

std::string HyperParams::to_string() const {
  std::string out;
  for (const auto& [key, value] : items_) {
    if (!out.empty()) out += ';';
    out += key + '=' + format_param(value);
  }
  return out;
}

std::vector<HyperParams> ModelSpec::enumerate() const {
  std::vector<HyperParams> points;
  const std::size_t total = grid_size();
  points.reserve(total);
  std::vector<std::size_t> idx(grid.size(), 0);
  for (std::size_t n = 0; n < total; ++n) {
    std::vector<std::pair<std::string, ParamValue>> items;
    for (std::size_t a = 0; a < grid.size(); ++a) items.emplace_back(grid[a].name, grid[a].values[idx[a]]);
    points.emplace_back(std::move(items));
    // Odometer increment, last axis fastest.
    for (std::size_t a = grid.size(); a-- > 0;) {
      if (++idx[a] < grid[a].values.size()) break;
      idx[a] = 0;
    }
  }
  return points;
}

std::size_t ModelSpec::grid_size() const {
  std::size_t n = 1;
  for (const auto& axis : grid) n *= axis.values.size();
  return n;
}

ModelSpec ModelSpec::reduced() const {
  ModelSpec out = *this;
  for (auto& axis : out.grid) axis.values.resize(1);
  return out;
}

std::vector<ModelSpec> registry() {
  return {
      {ModelFamily::kDecisionTree,
       {{"max_depth", {none(), integer(3), integer(5), integer(10), integer(15)}},
        {"min_samples_leaf", {integer(1), integer(2), integer(5), integer(10)}},
        {"class_weight", {none(), token("balanced")}}}},
      {ModelFamily::kKnn,
       {{"n_neighbors", {integer(3), integer(5), integer(7), integer(11), integer(15)}},
        {"weights", {token("uniform"), token("distance")}},
        {"p", {integer(1), integer(2)}}}},
      {ModelFamily::kGaussianNb, {{"var_smoothing", {real(1e-9), real(1e-8), real(1e-7), real(1e-6)}}}},
      {ModelFamily::kBernoulliNb,
       {{"alpha", {real(0.5), real(1.0), real(2.0)}}, {"binarize", {none(), real(0.0)}}}},
      {ModelFamily::kLogReg,
       {{"C", {real(0.01), real(0.1), real(1.0), real(10.0)}},
        {"penalty", {token("l1"), token("l2")}}}},
      {ModelFamily::kLinearSvmCalibrated, {{"C", {real(0.01), real(0.1), real(1.0), real(10.0)}}}},
      {ModelFamily::kHistGb,
       {{"learning_rate", {real(0.05), real(0.1), real(0.2)}},
        {"max_depth", {none(), integer(3), integer(5)}},
        {"max_leaf_nodes", {none(), integer(31), integer(63)}}}},
  };
}

ModelSpec spec_for(ModelFamily family) {
  for (auto& spec : registry()) {
    if (spec.family == family) return spec;
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown model family");
}

std::vector<double> FittedModel::predict_proba(const Matrix& X) const {
  if (X.cols() != width_) {
    throw Error(ErrorKind::kWidthMismatch,
                fmt::format("model trained on {} features, got {}", width_, X.cols()));
  }
  for (double v : X.data()) {
    if (!std::isfinite(v)) throw Error(ErrorKind::kNonFiniteFeature, "prediction matrix has a non-finite value");
  }
  auto p = predict_rows(X);
  for (double& v : p) {
    if (std::isnan(v)) throw Error(ErrorKind::kNumericalFailure, "model produced a NaN probability");
    v = std::clamp(v, 0.0, 1.0);
  }
  return p;
}

nlohmann::json FittedModel::to_json() const {
  nlohmann::json params = nlohmann::json::object();
  nlohmann::json order = nlohmann::json::array();
  for (const auto& [key, value] : params_.items()) {
    params[key] = param_to_json(value);
    order.push_back(key);
  }
  return {{"format", kModelFormat},
          {"version", kModelFormatVersion},
          {"family", family_name(family_)},
          {"params", params},
          {"param_order", order},
          {"width", width_},
          {"state", state()}};
}

ModelPtr model_from_json(const nlohmann::json& dump) {
  if (dump.value("format", "") != kModelFormat || dump.value("version", 0) != kModelFormatVersion) {
    throw Error(ErrorKind::kInvalidArgument, "not a valsweep model dump (format/version mismatch)");
  }
  const auto family = parse_family(dump.at("family").get<std::string>());
  if (!family) throw Error(ErrorKind::kInvalidArgument, "unknown model family in dump");
  std::vector<std::pair<std::string, ParamValue>> items;
  for (const auto& key : dump.at("param_order")) {
    const auto name = key.get<std::string>();
    items.emplace_back(name, param_from_json(dump.at("params").at(name)));
  }
  const HyperParams hp(std::move(items));
  const auto width = dump.at("width").get<std::size_t>();
  const auto& s = dump.at("state");
  switch (*family) {
    case ModelFamily::kDecisionTree: return models::DecisionTree::from_state(hp, width, s);
    case ModelFamily::kKnn: return models::Knn::from_state(hp, width, s);
    case ModelFamily::kGaussianNb: return models::GaussianNb::from_state(hp, width, s);
    case ModelFamily::kBernoulliNb: return models::BernoulliNb::from_state(hp, width, s);
    case ModelFamily::kLogReg: return models::LogisticRegression::from_state(hp, width, s);
    case ModelFamily::kLinearSvmCalibrated: return models::CalibratedLinearSvm::from_state(hp, width, s);
    case ModelFamily::kHistGb: return models::HistGradientBoosting::from_state(hp, width, s);
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown model family in dump");
}

ModelPtr fit(ModelFamily family, const HyperParams& params, const Matrix& X,
             std::span<const std::uint8_t> y, std::uint64_t seed) {
  check_training_inputs(X, y);
  switch (family) {
    case ModelFamily::kDecisionTree: return models::DecisionTree::train(params, X, y);
    case ModelFamily::kKnn: return models::Knn::train(params, X, y);
    case ModelFamily::kGaussianNb: return models::GaussianNb::train(params, X, y);
    case ModelFamily::kBernoulliNb: return models::BernoulliNb::train(params, X, y);
    case ModelFamily::kLogReg: return models::LogisticRegression::train(params, X, y);
    case ModelFamily::kLinearSvmCalibrated: return models::CalibratedLinearSvm::train(params, X, y, seed);
    case ModelFamily::kHistGb: return models::HistGradientBoosting::train(params, X, y);
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown model family");
}

ModelPtr fit(const ModelSpec& spec, const HyperParams& params, const Matrix& X,
             std::span<const std::uint8_t> y, std::uint64_t seed) {
  return fit(spec.family, params, X, y, seed);
}

std::vector<std::uint8_t> labels_from_proba(std::span<const double> proba, double threshold) {
  std::vector<std::uint8_t> out(proba.size());
  for (std::size_t i = 0; i < proba.size(); ++i) out[i] = proba[i] >= threshold ? 1 : 0;
  return out;
}

std::pair<double, double> balanced_class_weights(std::span<const std::uint8_t> y) {
  const auto [neg, pos] = class_counts(y);
  const double n = static_cast<double>(y.size());
  return {n / (2.0 * static_cast<double>(neg)), n / (2.0 * static_cast<double>(pos))};
}

namespace models {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace models

}  // namespace valsweep

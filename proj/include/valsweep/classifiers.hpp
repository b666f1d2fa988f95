#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "valsweep/matrix.hpp"

namespace valsweep {

enum class ModelFamily {
  kDecisionTree,
  kKnn,
  kGaussianNb,
  kBernoulliNb,
  kLogReg,
  kLinearSvmCalibrated,
  kHistGb,
};

// Registry names: DecisionTree, KNN, GaussianNB, BernoulliNB, LogReg,
// LinearSVM_Calibrated, HistGB.
std::string_view family_name(ModelFamily family);
std::optional<ModelFamily> parse_family(std::string_view name);

// A hyperparameter value: None, integer, real or token.
using ParamValue = std::variant<std::monostate, std::int64_t, double, std::string>;

std::string format_param(const ParamValue& value);

struct ParamAxis {
  std::string name;
  std::vector<ParamValue> values;
};

// One point of a hyperparameter grid, in declaration order.
class HyperParams {
 public:
  HyperParams() = default;
  explicit HyperParams(std::vector<std::pair<std::string, ParamValue>> items)
      : items_(std::move(items)) {}

  const std::vector<std::pair<std::string, ParamValue>>& items() const noexcept { return items_; }
  const ParamValue* find(std::string_view name) const;

  // Typed accessors; a missing name yields the fallback.
  std::optional<std::int64_t> integer_or_none(std::string_view name,
                                              std::optional<std::int64_t> fallback) const;
  double real(std::string_view name, double fallback) const;
  std::optional<double> real_or_none(std::string_view name, std::optional<double> fallback) const;
  std::string token(std::string_view name, std::string fallback) const;

  // "name=value;name=value"
  std::string to_string() const;

  friend bool operator==(const HyperParams&, const HyperParams&) = default;

 private:
  std::vector<std::pair<std::string, ParamValue>> items_;
};

struct ModelSpec {
  ModelFamily family = ModelFamily::kDecisionTree;
  std::vector<ParamAxis> grid;

  std::string_view name() const { return family_name(family); }

  // Cartesian product; the first axis varies slowest.
  std::vector<HyperParams> enumerate() const;
  std::size_t grid_size() const;

  // First value of every axis.
  ModelSpec reduced() const;
};

// The seven reference families with their grids.
std::vector<ModelSpec> registry();
ModelSpec spec_for(ModelFamily family);

struct FitDiagnostics {
  bool converged = true;
  std::size_t iterations = 0;
  std::vector<std::string> warnings;
};

// A trained classifier; immutable after fit and safe to share across threads.
class FittedModel {
 public:
  virtual ~FittedModel() = default;

  ModelFamily family() const noexcept { return family_; }
  const HyperParams& params() const noexcept { return params_; }
  std::size_t width() const noexcept { return width_; }
  const FitDiagnostics& diagnostics() const noexcept { return diagnostics_; }

  // Positive-class probabilities, one per row of X, each in [0, 1].
  std::vector<double> predict_proba(const Matrix& X) const;

  // Self-describing dump: {"format", "version", "family", "params", "width", "state"}.
  nlohmann::json to_json() const;

 protected:
  FittedModel(ModelFamily family, HyperParams params, std::size_t width)
      : family_(family), params_(std::move(params)), width_(width) {}

  virtual std::vector<double> predict_rows(const Matrix& X) const = 0;
  virtual nlohmann::json state() const = 0;

  FitDiagnostics diagnostics_;

 private:
  ModelFamily family_;
  HyperParams params_;
  std::size_t width_;
};

using ModelPtr = std::shared_ptr<const FittedModel>;

// Trains one grid point. Throws kSingleClassTraining, kNonFiniteFeature,
// kInvalidArgument (e.g. more neighbours than rows) or kNumericalFailure.
// Iteration caps do not throw; they clear diagnostics().converged.
ModelPtr fit(const ModelSpec& spec, const HyperParams& params, const Matrix& X,
             std::span<const std::uint8_t> y, std::uint64_t seed);
ModelPtr fit(ModelFamily family, const HyperParams& params, const Matrix& X,
             std::span<const std::uint8_t> y, std::uint64_t seed);

ModelPtr model_from_json(const nlohmann::json& dump);

// 1 iff p >= threshold.
std::vector<std::uint8_t> labels_from_proba(std::span<const double> proba, double threshold = 0.5);

// Balanced class weights n / (2 n_c), indexed by class.
std::pair<double, double> balanced_class_weights(std::span<const std::uint8_t> y);

}  // namespace valsweep

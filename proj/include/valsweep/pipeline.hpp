#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "valsweep/matrix.hpp"
#include "valsweep/tabular.hpp"

namespace valsweep {

enum class Scaler { kStandard, kQuantileNormal };

std::string_view scaler_name(Scaler s);

struct PreprocessSpec {
  Scaler scaler = Scaler::kStandard;
  // Number of features kept by mutual-information ranking; nullopt keeps all.
  std::optional<std::size_t> select_k;

  friend bool operator==(const PreprocessSpec&, const PreprocessSpec&) = default;
};

// Constant fill for missing categorical cells.
inline constexpr std::string_view kMissingToken = "__missing__";

// Lower/upper empirical-CDF clip before the inverse normal CDF.
inline constexpr double kQuantileClip = 1e-7;
inline constexpr std::size_t kMaxQuantiles = 1000;

struct NumericStats {
  double mean = 0.0;
  double stddev = 0.0;             // population (1/n)
  std::vector<double> quantiles;   // quantile_normal only; non-decreasing

  friend bool operator==(const NumericStats&, const NumericStats&) = default;
};

// Preprocessing fitted on a training partition: constant-0 imputation then
// scaling for numeric columns, "__missing__" imputation then one-hot encoding
// for categorical columns, then top-k mutual-information selection. Encoded
// column order is numeric columns first, then one-hot blocks, each in dataset
// order. Immutable; transform never reads statistics from its input rows.
class FittedPreprocessor {
 public:
  const PreprocessSpec& spec() const noexcept { return spec_; }
  std::size_t encoded_width() const noexcept { return mutual_info_.size(); }
  std::size_t output_width() const noexcept { return selected_.size(); }
  std::span<const std::size_t> selected() const noexcept { return selected_; }
  std::span<const double> mutual_information() const noexcept { return mutual_info_; }
  std::span<const NumericStats> numeric_stats() const noexcept { return numeric_; }
  const std::vector<std::vector<std::string>>& vocabularies() const noexcept { return vocab_; }
  std::vector<std::string> encoded_names() const;
  std::vector<std::string> output_names() const;

  // Matrix of shape (rows.size(), output_width()).
  Matrix transform(const Dataset& data, std::span<const std::size_t> rows) const;
  Matrix transform(const Dataset& data) const;

  // Same fitted statistics, different top-k choice. Equivalent to refitting
  // with the new select_k.
  FittedPreprocessor with_selection(std::optional<std::size_t> select_k) const;

  friend bool operator==(const FittedPreprocessor&, const FittedPreprocessor&) = default;

 private:
  friend FittedPreprocessor fit_preprocessor(const Dataset&, std::span<const std::size_t>,
                                             const PreprocessSpec&);

  Matrix encode(const Dataset& data, std::span<const std::size_t> rows) const;
  void check_schema(const Dataset& data) const;

  PreprocessSpec spec_;
  std::vector<std::string> column_names_;
  std::vector<ColumnKind> column_kinds_;
  std::vector<NumericStats> numeric_;                // one per numeric column
  std::vector<std::vector<std::string>> vocab_;      // one per categorical column, sorted
  std::vector<double> mutual_info_;                  // one per encoded feature
  std::vector<std::size_t> selected_;                // ascending encoded indices
};

FittedPreprocessor fit_preprocessor(const Dataset& data, std::span<const std::size_t> train_rows,
                                    const PreprocessSpec& spec);

// Plug-in mutual information (nats) after equal-width binning of the feature
// into min(ceil(sqrt(n)), 32) bins.
double mutual_information(std::span<const double> feature, std::span<const std::uint8_t> labels);

// Indices of the k highest scores (ties to the lower index), returned in
// ascending order. k is clamped to the number of scores.
std::vector<std::size_t> top_k_features(std::span<const double> scores,
                                        std::optional<std::size_t> k);

// Two-sided interpolated empirical CDF over a quantile table.
double quantile_cdf(std::span<const double> quantiles, double x);
std::vector<double> quantile_table(std::vector<double> values, std::size_t n_quantiles);
double inverse_normal_cdf(double p);

}  // namespace valsweep

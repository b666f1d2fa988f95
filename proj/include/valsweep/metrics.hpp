#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace valsweep {

enum class Metric : std::uint8_t { kAccuracy, kRocAuc, kPrAuc, kF1, kMcc, kBrier };

inline constexpr std::array<Metric, 6> kAllMetrics{Metric::kAccuracy, Metric::kRocAuc,
                                                   Metric::kPrAuc,    Metric::kF1,
                                                   Metric::kMcc,      Metric::kBrier};

// Metrics that take part in the best-strategy view; Brier is reported only.
inline constexpr std::array<Metric, 5> kRankedMetrics{Metric::kAccuracy, Metric::kRocAuc,
                                                      Metric::kPrAuc, Metric::kF1, Metric::kMcc};

// Machine name used in files: accuracy, roc_auc, pr_auc, f1, mcc, brier.
std::string_view metric_name(Metric m);
bool parse_metric(std::string_view name, Metric& out);

// Six evaluation metrics; undefined values are NaN.
struct MetricSet {
  double accuracy;
  double roc_auc;
  double pr_auc;
  double f1;
  double mcc;
  double brier;

  double get(Metric m) const;
  void set(Metric m, double value);
};

double accuracy(std::span<const std::uint8_t> y_true, std::span<const std::uint8_t> y_pred);

// Mann-Whitney estimate with ties counted one half, via mid-ranks. NaN when
// y_true holds a single class.
double roc_auc(std::span<const std::uint8_t> y_true, std::span<const double> scores);

// Step-interpolated average precision, sum_k (R_k - R_{k-1}) P_k over
// descending distinct thresholds. NaN when y_true holds a single class.
double average_precision(std::span<const std::uint8_t> y_true, std::span<const double> scores);

// Support-weighted mean of the per-class F1 scores.
double f1_weighted(std::span<const std::uint8_t> y_true, std::span<const std::uint8_t> y_pred);

// Matthews correlation; 0 when any confusion-matrix margin is empty.
double mcc(std::span<const std::uint8_t> y_true, std::span<const std::uint8_t> y_pred);

double brier(std::span<const std::uint8_t> y_true, std::span<const double> prob_positive);

// accuracy and mcc always; roc_auc, pr_auc, f1 and brier are NaN when y_true
// holds a single class.
MetricSet compute_all(std::span<const std::uint8_t> y_true, std::span<const std::uint8_t> y_pred,
                      std::span<const double> prob_positive);

}  // namespace valsweep

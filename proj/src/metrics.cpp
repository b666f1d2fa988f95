#include "valsweep/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "valsweep/error.hpp"

namespace valsweep {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <typename A, typename B>
void check_lengths(std::span<A> a, std::span<B> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::kLengthMismatch, std::to_string(a.size()) + " labels vs " +
                                                std::to_string(b.size()) + " predictions");
  }
  if (a.empty()) throw Error(ErrorKind::kEmptyInput, "no samples");
}

struct Confusion {
  double tp = 0, fp = 0, tn = 0, fn = 0;
};

Confusion confusion(std::span<const std::uint8_t> y_true, std::span<const std::uint8_t> y_pred) {
  Confusion c;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const bool t = y_true[i] != 0;
    const bool p = y_pred[i] != 0;
    if (t && p) c.tp += 1;
    else if (!t && p) c.fp += 1;
    else if (!t && !p) c.tn += 1;
    else c.fn += 1;
  }
  return c;
}

bool single_class(std::span<const std::uint8_t> y) {
  return std::all_of(y.begin(), y.end(), [&](auto v) { return v == y.front(); });
}

// Indices sorted by score; ties keep index order.
std::vector<std::size_t> order_by_score(std::span<const double> scores, bool descending) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return descending ? scores[a] > scores[b] : scores[a] < scores[b];
  });
  return order;
}

}  // namespace

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::kAccuracy: return "accuracy";
    case Metric::kRocAuc: return "roc_auc";
    case Metric::kPrAuc: return "pr_auc";
    case Metric::kF1: return "f1";
    case Metric::kMcc: return "mcc";
    case Metric::kBrier: return "brier";
  }
  return "?";
}

bool parse_metric(std::string_view name, Metric& out) {
  for (auto m : kAllMetrics) {
    if (metric_name(m) == name) {
      out = m;
      return true;
    }
  }
  return false;
}

double MetricSet::get(Metric m) const {
  switch (m) {
    case Metric::kAccuracy: return accuracy;
    case Metric::kRocAuc: return roc_auc;
    case Metric::kPrAuc: return pr_auc;
    case Metric::kF1: return f1;
    case Metric::kMcc: return mcc;
    case Metric::kBrier: return brier;
  }
  return kNaN;
}

void MetricSet::set(Metric m, double value) {
  switch (m) {
    case Metric::kAccuracy: accuracy = value; break;
    case Metric::kRocAuc: roc_auc = value; break;
    case Metric::kPrAuc: pr_auc = value; break;
    case Metric::kF1: f1 = value; break;
    case Metric::kMcc: mcc = value; break;
    case Metric::kBrier: brier = value; break;
  }
}

double accuracy(std::span<const std::uint8_t> y_true, std::span<const std::uint8_t> y_pred) {
  check_lengths(y_true, y_pred);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) hits += (y_true[i] == y_pred[i]);
  return static_cast<double>(hits) / static_cast<double>(y_true.size());
}

double roc_auc(std::span<const std::uint8_t> y_true, std::span<const double> scores) {
  check_lengths(y_true, scores);
  if (single_class(y_true)) return kNaN;

  const auto order = order_by_score(scores, /*descending=*/false);
  double positive_rank_sum = 0.0;
  double positives = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    // 1-based ranks i+1..j share the mid-rank.
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (y_true[order[t]]) {
        positive_rank_sum += mid_rank;
        positives += 1.0;
      }
    }
    i = j;
  }
  const double negatives = static_cast<double>(y_true.size()) - positives;
  const double u = positive_rank_sum - positives * (positives + 1.0) / 2.0;
  return u / (positives * negatives);
}

double average_precision(std::span<const std::uint8_t> y_true, std::span<const double> scores) {
  check_lengths(y_true, scores);
  if (single_class(y_true)) return kNaN;

  double total_pos = 0.0;
  for (auto y : y_true) total_pos += (y != 0);

  const auto order = order_by_score(scores, /*descending=*/true);
  double tp = 0.0, fp = 0.0, prev_recall = 0.0, ap = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (y_true[order[j]] ? tp : fp) += 1.0;
      ++j;
    }
    const double recall = tp / total_pos;
    const double precision = tp / (tp + fp);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return ap;
}

double f1_weighted(std::span<const std::uint8_t> y_true, std::span<const std::uint8_t> y_pred) {
  check_lengths(y_true, y_pred);
  const auto c = confusion(y_true, y_pred);
  auto f1 = [](double tp, double fp, double fn) {
    const double denom = 2.0 * tp + fp + fn;
    return denom == 0.0 ? 0.0 : 2.0 * tp / denom;
  };
  // Class 1 as positive, then class 0 as positive (roles of fp/fn swap).
  const double f1_pos = f1(c.tp, c.fp, c.fn);
  const double f1_neg = f1(c.tn, c.fn, c.fp);
  const double support_pos = c.tp + c.fn;
  const double support_neg = c.tn + c.fp;
  return (support_pos * f1_pos + support_neg * f1_neg) / (support_pos + support_neg);
}

double mcc(std::span<const std::uint8_t> y_true, std::span<const std::uint8_t> y_pred) {
  check_lengths(y_true, y_pred);
  const auto c = confusion(y_true, y_pred);
  const double denom = (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn);
  if (denom == 0.0) return 0.0;
  return (c.tp * c.tn - c.fp * c.fn) / std::sqrt(denom);
}

double brier(std::span<const std::uint8_t> y_true, std::span<const double> prob_positive) {
  check_lengths(y_true, prob_positive);
  double sum = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double p = prob_positive[i];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorKind::kOutOfRangeProbability,
                  "probability " + std::to_string(p) + " at index " + std::to_string(i));
    }
    const double d = p - static_cast<double>(y_true[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(y_true.size());
}

MetricSet compute_all(std::span<const std::uint8_t> y_true, std::span<const std::uint8_t> y_pred,
                      std::span<const double> prob_positive) {
  check_lengths(y_true, y_pred);
  check_lengths(y_true, prob_positive);
  MetricSet out{};
  out.accuracy = accuracy(y_true, y_pred);
  out.mcc = mcc(y_true, y_pred);
  if (single_class(y_true)) {
    out.roc_auc = out.pr_auc = out.f1 = out.brier = kNaN;
  } else {
    out.roc_auc = roc_auc(y_true, prob_positive);
    out.pr_auc = average_precision(y_true, prob_positive);
    out.f1 = f1_weighted(y_true, y_pred);
    out.brier = brier(y_true, prob_positive);
  }
  return out;
}

}  // namespace valsweep

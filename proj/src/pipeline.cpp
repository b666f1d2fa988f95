#include "valsweep/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <boost/math/distributions/normal.hpp>

#include "valsweep/error.hpp"

namespace valsweep {

namespace {

double impute(double v) { return std::isnan(v) ? 0.0 : v; }

std::size_t bin_count(std::size_t n) {
  const auto root = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  return std::clamp<std::size_t>(root, 1, 32);
}

}  // namespace

std::string_view scaler_name(Scaler s) {
  return s == Scaler::kStandard ? "standard" : "quantile_normal";
}

double inverse_normal_cdf(double p) {
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, p);
}

std::vector<double> quantile_table(std::vector<double> values, std::size_t n_quantiles) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  std::vector<double> table(n_quantiles);
  for (std::size_t j = 0; j < n_quantiles; ++j) {
    const double reference =
        n_quantiles == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(n_quantiles - 1);
    // Linear interpolation between order statistics at position p * (n - 1).
    const double pos = reference * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = pos - static_cast<double>(lo);
    table[j] = values[lo] + frac * (values[hi] - values[lo]);
  }
  // Floating-point interpolation must not break monotonicity.
  for (std::size_t j = 1; j < table.size(); ++j) table[j] = std::max(table[j], table[j - 1]);
  return table;
}

double quantile_cdf(std::span<const double> q, double x) {
  const std::size_t m = q.size();
  if (m < 2) return 0.5;
  if (x < q.front()) return 0.0;
  if (x > q.back()) return 1.0;
  auto reference = [m](std::size_t j) {
    return static_cast<double>(j) / static_cast<double>(m - 1);
  };
  // Rightmost and leftmost interpolations differ only on runs of equal
  // quantiles; their mean places a tied value in the middle of its run.
  double right = 1.0;
  {
    const auto j = static_cast<std::size_t>(std::upper_bound(q.begin(), q.end(), x) - q.begin());
    if (j < m) {
      const std::size_t a = j - 1;
      right = reference(a) + (x - q[a]) / (q[j] - q[a]) * (reference(j) - reference(a));
    }
  }
  double left = 0.0;
  {
    const auto j = static_cast<std::size_t>(std::lower_bound(q.begin(), q.end(), x) - q.begin());
    if (j > 0) {
      const std::size_t a = j - 1;
      left = reference(a) + (x - q[a]) / (q[j] - q[a]) * (reference(j) - reference(a));
    }
  }
  return 0.5 * (left + right);
}

double mutual_information(std::span<const double> feature, std::span<const std::uint8_t> labels) {
  if (feature.size() != labels.size()) {
    throw Error(ErrorKind::kLengthMismatch, "feature and label lengths differ");
  }
  const std::size_t n = feature.size();
  if (n == 0) throw Error(ErrorKind::kEmptyInput, "no samples");
  const auto [lo_it, hi_it] = std::minmax_element(feature.begin(), feature.end());
  const double lo = *lo_it, hi = *hi_it;

  std::size_t class_n[2] = {0, 0};
  for (auto y : labels) ++class_n[y != 0];
  if (class_n[0] == 0 || class_n[1] == 0) {
    throw Error(ErrorKind::kSingleClassTraining, "mutual information needs both classes");
  }
  if (hi == lo) return 0.0;

  const std::size_t bins = bin_count(n);
  std::vector<double> joint(bins * 2, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (feature[i] - lo) / (hi - lo) * static_cast<double>(bins);
    const auto b = std::min(static_cast<std::size_t>(t), bins - 1);
    joint[b * 2 + (labels[i] != 0)] += 1.0;
  }
  const double total = static_cast<double>(n);
  double mi = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    const double nb = joint[b * 2] + joint[b * 2 + 1];
    for (int c = 0; c < 2; ++c) {
      const double nbc = joint[b * 2 + c];
      if (nbc == 0.0) continue;
      mi += nbc / total * std::log(nbc * total / (nb * static_cast<double>(class_n[c])));
    }
  }
  return std::max(mi, 0.0);
}

std::vector<std::size_t> top_k_features(std::span<const double> scores,
                                        std::optional<std::size_t> k) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (!k || *k >= scores.size()) return order;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  order.resize(*k);
  std::sort(order.begin(), order.end());
  return order;
}

FittedPreprocessor fit_preprocessor(const Dataset& data, std::span<const std::size_t> train_rows,
                                    const PreprocessSpec& spec) {
  if (train_rows.empty()) throw Error(ErrorKind::kEmptyTrainingSet, "no training rows");
  if (spec.select_k && *spec.select_k == 0) {
    throw Error(ErrorKind::kInvalidArgument, "select_k must be at least 1");
  }
  std::vector<std::uint8_t> labels;
  labels.reserve(train_rows.size());
  for (auto r : train_rows) labels.push_back(data.target()[r]);
  const auto [neg, pos] = class_counts(labels);
  if (neg == 0 || pos == 0) {
    throw Error(ErrorKind::kSingleClassTraining, "training rows contain a single class");
  }

  FittedPreprocessor fp;
  fp.spec_ = spec;
  const double n = static_cast<double>(train_rows.size());
  for (const auto& col : data.columns()) {
    fp.column_names_.push_back(col.name);
    fp.column_kinds_.push_back(col.kind);
    if (col.kind == ColumnKind::kNumeric) {
      NumericStats stats;
      std::vector<double> values;
      values.reserve(train_rows.size());
      for (auto r : train_rows) values.push_back(impute(col.numeric[r]));
      stats.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
      double ss = 0.0;
      for (double v : values) ss += (v - stats.mean) * (v - stats.mean);
      stats.stddev = std::sqrt(ss / n);
      if (spec.scaler == Scaler::kQuantileNormal) {
        stats.quantiles = quantile_table(std::move(values),
                                         std::min(kMaxQuantiles, train_rows.size()));
      }
      fp.numeric_.push_back(std::move(stats));
    } else {
      std::set<std::string> tokens;
      for (auto r : train_rows) {
        const auto& cell = col.categorical[r];
        tokens.insert(cell ? *cell : std::string(kMissingToken));
      }
      fp.vocab_.emplace_back(tokens.begin(), tokens.end());
    }
  }

  const Matrix encoded = fp.encode(data, train_rows);
  fp.mutual_info_.resize(encoded.cols());
  for (std::size_t j = 0; j < encoded.cols(); ++j) {
    fp.mutual_info_[j] = mutual_information(encoded.column(j), labels);
  }
  fp.selected_ = top_k_features(fp.mutual_info_, spec.select_k);
  return fp;
}

void FittedPreprocessor::check_schema(const Dataset& data) const {
  const auto& cols = data.columns();
  bool ok = cols.size() == column_names_.size();
  for (std::size_t j = 0; ok && j < cols.size(); ++j) {
    ok = cols[j].name == column_names_[j] && cols[j].kind == column_kinds_[j];
  }
  if (!ok) {
    throw Error(ErrorKind::kSchemaMismatch,
                "dataset columns differ from the columns the preprocessor was fitted on");
  }
}

Matrix FittedPreprocessor::encode(const Dataset& data, std::span<const std::size_t> rows) const {
  std::size_t width = numeric_.size();
  for (const auto& v : vocab_) width += v.size();
  Matrix out(rows.size(), width);

  std::size_t out_col = 0;
  std::size_t num_idx = 0;
  for (std::size_t j = 0; j < column_kinds_.size(); ++j) {
    if (column_kinds_[j] != ColumnKind::kNumeric) continue;
    const auto& stats = numeric_[num_idx++];
    const auto& values = data.column(j).numeric;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double x = impute(values[rows[i]]);
      double z = 0.0;
      if (spec_.scaler == Scaler::kStandard) {
        z = stats.stddev > 0.0 ? (x - stats.mean) / stats.stddev : 0.0;
      } else {
        const double cdf =
            std::clamp(quantile_cdf(stats.quantiles, x), kQuantileClip, 1.0 - kQuantileClip);
        z = inverse_normal_cdf(cdf);
      }
      out(i, out_col) = z;
    }
    ++out_col;
  }

  std::size_t cat_idx = 0;
  for (std::size_t j = 0; j < column_kinds_.size(); ++j) {
    if (column_kinds_[j] != ColumnKind::kCategorical) continue;
    const auto& vocab = vocab_[cat_idx++];
    const auto& cells = data.column(j).categorical;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& cell = cells[rows[i]];
      const std::string_view token = cell ? std::string_view(*cell) : kMissingToken;
      const auto it = std::lower_bound(vocab.begin(), vocab.end(), token);
      if (it != vocab.end() && *it == token) {
        out(i, out_col + static_cast<std::size_t>(it - vocab.begin())) = 1.0;
      }
    }
    out_col += vocab.size();
  }
  return out;
}

Matrix FittedPreprocessor::transform(const Dataset& data, std::span<const std::size_t> rows) const {
  check_schema(data);
  for (auto r : rows) {
    if (r >= data.row_count()) throw Error(ErrorKind::kInvalidArgument, "row index out of range");
  }
  const Matrix encoded = encode(data, rows);
  if (selected_.size() == encoded.cols()) return encoded;
  return encoded.select_cols(selected_);
}

Matrix FittedPreprocessor::transform(const Dataset& data) const {
  std::vector<std::size_t> rows(data.row_count());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return transform(data, rows);
}

FittedPreprocessor FittedPreprocessor::with_selection(std::optional<std::size_t> select_k) const {
  if (select_k && *select_k == 0) {
    throw Error(ErrorKind::kInvalidArgument, "select_k must be at least 1");
  }
  FittedPreprocessor out = *this;
  out.spec_.select_k = select_k;
  out.selected_ = top_k_features(mutual_info_, select_k);
  return out;
}

std::vector<std::string> FittedPreprocessor::encoded_names() const {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < column_kinds_.size(); ++j) {
    if (column_kinds_[j] == ColumnKind::kNumeric) names.push_back(column_names_[j]);
  }
  std::size_t cat_idx = 0;
  for (std::size_t j = 0; j < column_kinds_.size(); ++j) {
    if (column_kinds_[j] != ColumnKind::kCategorical) continue;
    for (const auto& token : vocab_[cat_idx]) names.push_back(column_names_[j] + "=" + token);
    ++cat_idx;
  }
  return names;
}

std::vector<std::string> FittedPreprocessor::output_names() const {
  const auto all = encoded_names();
  std::vector<std::string> names;
  for (auto j : selected_) names.push_back(all[j]);
  return names;
}

}  // namespace valsweep

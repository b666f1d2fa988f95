#include <algorithm>
#include <cmath>
#include <numeric>

#include "valsweep/error.hpp"
#include "valsweep/models.hpp"

namespace valsweep::models {

namespace {

struct SplitChoice {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double score = -1.0;  // sum over children of (w0^2 + w1^2) / W
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& X, std::span<const std::uint8_t> y, std::vector<double> weights,
              std::optional<std::int64_t> max_depth, std::size_t min_samples_leaf,
              std::vector<DecisionTree::Node>& nodes)
      : X_(X), y_(y), w_(std::move(weights)), max_depth_(max_depth),
        min_leaf_(min_samples_leaf), nodes_(nodes) {}

  std::int32_t build(std::vector<std::size_t>& rows, std::int64_t depth) {
    double w0 = 0.0, w1 = 0.0;
    for (auto i : rows) (y_[i] ? w1 : w0) += w_[i];
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({});
    nodes_[id].positive_fraction = w1 / (w0 + w1);

    const bool pure = w0 == 0.0 || w1 == 0.0;
    const bool depth_cap = max_depth_ && depth >= *max_depth_;
    if (pure || depth_cap || rows.size() < 2 || rows.size() < 2 * min_leaf_) return id;

    const auto split = best_split(rows);
    if (!split.found) return id;

    std::vector<std::size_t> left, right;
    for (auto i : rows) (X_(i, split.feature) <= split.threshold ? left : right).push_back(i);
    rows.clear();
    rows.shrink_to_fit();

    nodes_[id].feature = static_cast<std::int32_t>(split.feature);
    nodes_[id].threshold = split.threshold;
    const auto l = build(left, depth + 1);
    const auto r = build(right, depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

 private:
  // Maximising the children's sum of squared class weight over node weight is
  // equivalent to maximising the weighted Gini decrease. Features and
  // thresholds are scanned in ascending order and only a strictly better
  // score replaces the incumbent.
  SplitChoice best_split(const std::vector<std::size_t>& rows) const {
    SplitChoice best;
    const std::size_t n = rows.size();
    std::vector<std::pair<double, std::size_t>> sorted(n);
    for (std::size_t f = 0; f < X_.cols(); ++f) {
      for (std::size_t t = 0; t < n; ++t) sorted[t] = {X_(rows[t], f), rows[t]};
      std::sort(sorted.begin(), sorted.end());

      double total0 = 0.0, total1 = 0.0;
      for (const auto& [v, i] : sorted) (y_[i] ? total1 : total0) += w_[i];
      double left0 = 0.0, left1 = 0.0;
      for (std::size_t pos = 1; pos < n; ++pos) {
        const auto i = sorted[pos - 1].second;
        (y_[i] ? left1 : left0) += w_[i];
        if (pos < min_leaf_ || n - pos < min_leaf_) continue;
        const double lo = sorted[pos - 1].first;
        const double hi = sorted[pos].first;
        if (!(lo < hi)) continue;
        const double right0 = total0 - left0;
        const double right1 = total1 - left1;
        const double wl = left0 + left1;
        const double wr = right0 + right1;
        const double score = (left0 * left0 + left1 * left1) / wl +
                             (right0 * right0 + right1 * right1) / wr;
        if (!best.found || score > best.score) {
          double threshold = lo + (hi - lo) / 2.0;
          if (threshold >= hi) threshold = lo;
          best = {true, f, threshold, score};
        }
      }
    }
    return best;
  }

  const Matrix& X_;
  std::span<const std::uint8_t> y_;
  std::vector<double> w_;
  std::optional<std::int64_t> max_depth_;
  std::size_t min_leaf_;
  std::vector<DecisionTree::Node>& nodes_;
};

}  // namespace

ModelPtr DecisionTree::train(const HyperParams& hp, const Matrix& X,
                             std::span<const std::uint8_t> y) {
  const auto max_depth = hp.integer_or_none("max_depth", std::nullopt);
  const auto min_leaf = hp.integer_or_none("min_samples_leaf", 1).value_or(1);
  const auto class_weight = hp.token("class_weight", "None");
  if (max_depth && *max_depth < 1) throw Error(ErrorKind::kInvalidArgument, "max_depth must be >= 1");
  if (min_leaf < 1) throw Error(ErrorKind::kInvalidArgument, "min_samples_leaf must be >= 1");

  std::vector<double> weights(y.size(), 1.0);
  if (class_weight == "balanced") {
    const auto [w0, w1] = balanced_class_weights(y);
    for (std::size_t i = 0; i < y.size(); ++i) weights[i] = y[i] ? w1 : w0;
  } else if (class_weight != "None") {
    throw Error(ErrorKind::kInvalidArgument, "class_weight must be None or balanced");
  }

  std::shared_ptr<DecisionTree> model(new DecisionTree(hp, X.cols()));
  std::vector<std::size_t> rows(X.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  TreeBuilder builder(X, y, std::move(weights), max_depth, static_cast<std::size_t>(min_leaf),
                      model->nodes_);
  builder.build(rows, 0);
  return model;
}

std::vector<double> DecisionTree::predict_rows(const Matrix& X) const {
  std::vector<double> out(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) {
    std::size_t id = 0;
    while (nodes_[id].feature >= 0) {
      const auto& node = nodes_[id];
      id = static_cast<std::size_t>(X(r, static_cast<std::size_t>(node.feature)) <= node.threshold
                                        ? node.left
                                        : node.right);
    }
    out[r] = nodes_[id].positive_fraction;
  }
  return out;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> level(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    deepest = std::max(deepest, level[id]);
    if (nodes_[id].feature >= 0) {
      level[static_cast<std::size_t>(nodes_[id].left)] = level[id] + 1;
      level[static_cast<std::size_t>(nodes_[id].right)] = level[id] + 1;
    }
  }
  return deepest;
}

nlohmann::json DecisionTree::state() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : nodes_) {
    nodes.push_back({n.feature, n.threshold, n.left, n.right, n.positive_fraction});
  }
  return {{"nodes", nodes}};
}

ModelPtr DecisionTree::from_state(const HyperParams& hp, std::size_t width,
                                  const nlohmann::json& s) {
  std::shared_ptr<DecisionTree> model(new DecisionTree(hp, width));
  for (const auto& n : s.at("nodes")) {
    model->nodes_.push_back({n.at(0).get<std::int32_t>(), n.at(1).get<double>(),
                             n.at(2).get<std::int32_t>(), n.at(3).get<std::int32_t>(),
                             n.at(4).get<double>()});
  }
  if (model->nodes_.empty()) throw Error(ErrorKind::kInvalidArgument, "tree dump has no nodes");
  return model;
}

}  // namespace valsweep::models

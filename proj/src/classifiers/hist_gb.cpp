#include <algorithm>
#include <cmath>
#include <numeric>

#include "valsweep/error.hpp"
#include "valsweep/models.hpp"

namespace valsweep::models {

namespace {

// Bin 0 holds missing values; value bins are 1..edges+1.
constexpr std::size_t kValueBins = BinMapper::kMaxBins - 1;

double percentile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double mean_log_loss(std::span<const double> raw, std::span<const std::uint8_t> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double m = y[i] ? raw[i] : -raw[i];
    s += m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
  }
  return s / static_cast<double>(raw.size());
}

struct Candidate {
  bool found = false;
  std::size_t feature = 0;
  std::uint8_t threshold = 0;
  double gain = 0.0;
};

struct OpenLeaf {
  std::int32_t node;
  std::vector<std::size_t> rows;
  std::size_t depth;
  Candidate split;
};

class TreeGrower {
 public:
  TreeGrower(const std::vector<std::vector<std::uint8_t>>& binned, const BinMapper& mapper,
             std::span<const double> grad, std::span<const double> hess,
             std::optional<std::int64_t> max_depth, std::optional<std::int64_t> max_leaves,
             double learning_rate)
      : binned_(binned), mapper_(mapper), g_(grad), h_(hess), max_depth_(max_depth),
        max_leaves_(max_leaves), lr_(learning_rate) {}

  HistGradientBoosting::Tree grow(std::size_t n) {
    HistGradientBoosting::Tree tree;
    std::vector<OpenLeaf> open;
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    tree.push_back({});
    open.push_back(make_leaf(0, std::move(all), 0));
    std::size_t leaves = 1;

    while (true) {
      if (max_leaves_ && leaves >= static_cast<std::size_t>(*max_leaves_)) break;
      // Best-first: highest gain, earliest leaf on ties.
      std::size_t pick = open.size();
      for (std::size_t i = 0; i < open.size(); ++i) {
        if (!open[i].split.found) continue;
        if (pick == open.size() || open[i].split.gain > open[pick].split.gain) pick = i;
      }
      if (pick == open.size()) break;

      OpenLeaf leaf = std::move(open[pick]);
      open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));
      std::vector<std::size_t> left, right;
      const auto& col = binned_[leaf.split.feature];
      for (auto i : leaf.rows) (col[i] <= leaf.split.threshold ? left : right).push_back(i);

      const auto l = static_cast<std::int32_t>(tree.size());
      tree.push_back({});
      const auto r = static_cast<std::int32_t>(tree.size());
      tree.push_back({});
      auto& node = tree[static_cast<std::size_t>(leaf.node)];
      node.feature = static_cast<std::int32_t>(leaf.split.feature);
      node.bin_threshold = leaf.split.threshold;
      node.left = l;
      node.right = r;
      open.push_back(make_leaf(l, std::move(left), leaf.depth + 1));
      open.push_back(make_leaf(r, std::move(right), leaf.depth + 1));
      ++leaves;
    }

    for (const auto& leaf : open) {
      double G = 0.0, H = 0.0;
      for (auto i : leaf.rows) {
        G += g_[i];
        H += h_[i];
      }
      tree[static_cast<std::size_t>(leaf.node)].value = H > 0.0 ? -G / H * lr_ : 0.0;
    }
    return tree;
  }

 private:
  OpenLeaf make_leaf(std::int32_t node, std::vector<std::size_t> rows, std::size_t depth) {
    OpenLeaf leaf{node, std::move(rows), depth, {}};
    const bool depth_ok = !max_depth_ || static_cast<std::int64_t>(depth) < *max_depth_;
    if (depth_ok && leaf.rows.size() >= 2 * HistGradientBoosting::kMinSamplesLeaf) {
      leaf.split = best_split(leaf.rows);
    }
    return leaf;
  }

  Candidate best_split(const std::vector<std::size_t>& rows) const {
    Candidate best;
    double G = 0.0, H = 0.0;
    for (auto i : rows) {
      G += g_[i];
      H += h_[i];
    }
    const double parent = G * G / H;
    const std::size_t n = rows.size();
    std::vector<double> hg(BinMapper::kMaxBins), hh(BinMapper::kMaxBins);
    std::vector<std::size_t> hc(BinMapper::kMaxBins);
    for (std::size_t f = 0; f < binned_.size(); ++f) {
      std::fill(hg.begin(), hg.end(), 0.0);
      std::fill(hh.begin(), hh.end(), 0.0);
      std::fill(hc.begin(), hc.end(), 0);
      const auto& col = binned_[f];
      for (auto i : rows) {
        hg[col[i]] += g_[i];
        hh[col[i]] += h_[i];
        ++hc[col[i]];
      }
      const std::size_t top = mapper_.value_bins(f);  // highest value bin
      double gl = 0.0, hl = 0.0;
      std::size_t cl = 0;
      for (std::size_t t = 0; t < top; ++t) {
        gl += hg[t];
        hl += hh[t];
        cl += hc[t];
        const std::size_t cr = n - cl;
        if (cl < HistGradientBoosting::kMinSamplesLeaf || cr < HistGradientBoosting::kMinSamplesLeaf)
          continue;
        const double gr = G - gl, hr = H - hl;
        if (hl < HistGradientBoosting::kMinHessianToSplit ||
            hr < HistGradientBoosting::kMinHessianToSplit)
          continue;
        const double gain = gl * gl / hl + gr * gr / hr - parent;
        if (gain > 0.0 && (!best.found || gain > best.gain)) {
          best = {true, f, static_cast<std::uint8_t>(t), gain};
        }
      }
    }
    return best;
  }

  const std::vector<std::vector<std::uint8_t>>& binned_;
  const BinMapper& mapper_;
  std::span<const double> g_, h_;
  std::optional<std::int64_t> max_depth_, max_leaves_;
  double lr_;
};

}  // namespace

BinMapper BinMapper::fit(const Matrix& X) {
  BinMapper m;
  m.edges_.resize(X.cols());
  for (std::size_t j = 0; j < X.cols(); ++j) {
    std::vector<double> values;
    values.reserve(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i)
      if (!std::isnan(X(i, j))) values.push_back(X(i, j));
    std::sort(values.begin(), values.end());
    std::vector<double> distinct = values;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    auto& edges = m.edges_[j];
    if (distinct.size() <= kValueBins) {
      for (std::size_t k = 1; k < distinct.size(); ++k)
        edges.push_back(distinct[k - 1] + (distinct[k] - distinct[k - 1]) / 2.0);
    } else {
      for (std::size_t k = 1; k < kValueBins; ++k) {
        const double q = static_cast<double>(k) / static_cast<double>(kValueBins);
        const double lo = percentile(values, q - 0.5 / kValueBins);
        const double hi = percentile(values, q + 0.5 / kValueBins);
        edges.push_back(lo + (hi - lo) / 2.0);
      }
      edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    }
  }
  return m;
}

std::uint8_t BinMapper::bin(std::size_t feature, double x) const {
  if (std::isnan(x)) return 0;
  const auto& e = edges_[feature];
  return static_cast<std::uint8_t>(1 + (std::lower_bound(e.begin(), e.end(), x) - e.begin()));
}

BinMapper BinMapper::from_edges(std::vector<std::vector<double>> edges) {
  for (const auto& e : edges) {
    if (e.size() >= kValueBins || !std::is_sorted(e.begin(), e.end())) {
      throw Error(ErrorKind::kInvalidArgument, "bin edges must be sorted and fewer than 254");
    }
  }
  BinMapper m;
  m.edges_ = std::move(edges);
  return m;
}

ModelPtr HistGradientBoosting::train(const HyperParams& hp, const Matrix& X,
                                     std::span<const std::uint8_t> y) {
  const double lr = hp.real("learning_rate", 0.1);
  const auto max_depth = hp.integer_or_none("max_depth", std::nullopt);
  const auto max_leaves = hp.integer_or_none("max_leaf_nodes", 31);
  if (!(lr > 0.0)) throw Error(ErrorKind::kInvalidArgument, "learning_rate must be > 0");
  if (max_depth && *max_depth < 1) throw Error(ErrorKind::kInvalidArgument, "max_depth must be >= 1");
  if (max_leaves && *max_leaves < 2)
    throw Error(ErrorKind::kInvalidArgument, "max_leaf_nodes must be >= 2");

  std::shared_ptr<HistGradientBoosting> model(new HistGradientBoosting(hp, X.cols()));
  model->mapper_ = BinMapper::fit(X);
  const std::size_t n = X.rows();
  std::vector<std::vector<std::uint8_t>> binned(X.cols(), std::vector<std::uint8_t>(n));
  for (std::size_t j = 0; j < X.cols(); ++j)
    for (std::size_t i = 0; i < n; ++i) binned[j][i] = model->mapper_.bin(j, X(i, j));

  const double pos = static_cast<double>(std::count(y.begin(), y.end(), std::uint8_t{1}));
  model->baseline_ = std::log(pos / (static_cast<double>(n) - pos));
  std::vector<double> raw(n, model->baseline_), grad(n), hess(n);
  model->training_loss_.push_back(mean_log_loss(raw, y));

  for (std::size_t round = 0; round < kRounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(raw[i]);
      grad[i] = p - y[i];
      hess[i] = p * (1.0 - p);
    }
    TreeGrower grower(binned, model->mapper_, grad, hess, max_depth, max_leaves, lr);
    auto tree = grower.grow(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t id = 0;
      while (tree[id].feature >= 0) {
        id = static_cast<std::size_t>(
            binned[static_cast<std::size_t>(tree[id].feature)][i] <= tree[id].bin_threshold
                ? tree[id].left
                : tree[id].right);
      }
      raw[i] += tree[id].value;
    }
    model->trees_.push_back(std::move(tree));
    model->training_loss_.push_back(mean_log_loss(raw, y));
  }
  model->diagnostics_.iterations = kRounds;
  return model;
}

double HistGradientBoosting::raw_score(std::span<const double> x) const {
  double s = baseline_;
  for (const auto& tree : trees_) {
    std::size_t id = 0;
    while (tree[id].feature >= 0) {
      const auto f = static_cast<std::size_t>(tree[id].feature);
      id = static_cast<std::size_t>(mapper_.bin(f, x[f]) <= tree[id].bin_threshold ? tree[id].left
                                                                                   : tree[id].right);
    }
    s += tree[id].value;
  }
  return s;
}

std::vector<double> HistGradientBoosting::predict_rows(const Matrix& X) const {
  std::vector<double> out(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) out[r] = sigmoid(raw_score(X.row(r)));
  return out;
}

nlohmann::json HistGradientBoosting::state() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& tree : trees_) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : tree) nodes.push_back({n.feature, n.bin_threshold, n.left, n.right, n.value});
    trees.push_back(std::move(nodes));
  }
  return {{"edges", mapper_.edges()},
          {"baseline", baseline_},
          {"trees", trees},
          {"training_loss", training_loss_}};
}

ModelPtr HistGradientBoosting::from_state(const HyperParams& hp, std::size_t width,
                                          const nlohmann::json& s) {
  std::shared_ptr<HistGradientBoosting> model(new HistGradientBoosting(hp, width));
  model->mapper_ = BinMapper::from_edges(s.at("edges").get<std::vector<std::vector<double>>>());
  if (model->mapper_.edges().size() != width) {
    throw Error(ErrorKind::kInvalidArgument, "boosting dump has the wrong number of features");
  }
  model->baseline_ = s.at("baseline").get<double>();
  model->training_loss_ = s.value("training_loss", std::vector<double>{});
  for (const auto& t : s.at("trees")) {
    Tree tree;
    for (const auto& n : t) {
      tree.push_back({n.at(0).get<std::int32_t>(), n.at(1).get<std::uint8_t>(),
                      n.at(2).get<std::int32_t>(), n.at(3).get<std::int32_t>(),
                      n.at(4).get<double>()});
    }
    if (tree.empty()) throw Error(ErrorKind::kInvalidArgument, "boosting dump has an empty tree");
    model->trees_.push_back(std::move(tree));
  }
  return model;
}

}  // namespace valsweep::models

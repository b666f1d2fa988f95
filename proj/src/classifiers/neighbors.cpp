#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "valsweep/error.hpp"
#include "valsweep/models.hpp"

namespace valsweep::models {

ModelPtr Knn::train(const HyperParams& hp, const Matrix& X, std::span<const std::uint8_t> y) {
  const auto k = hp.integer_or_none("n_neighbors", 5).value_or(5);
  const auto weights = hp.token("weights", "uniform");
  const auto p = hp.integer_or_none("p", 2).value_or(2);
  if (k < 1) throw Error(ErrorKind::kInvalidArgument, "n_neighbors must be >= 1");
  if (static_cast<std::size_t>(k) > X.rows()) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("n_neighbors={} exceeds the {} training rows", k, X.rows()));
  }
  if (weights != "uniform" && weights != "distance") {
    throw Error(ErrorKind::kInvalidArgument, "weights must be uniform or distance");
  }
  if (p != 1 && p != 2) throw Error(ErrorKind::kInvalidArgument, "p must be 1 or 2");

  std::shared_ptr<Knn> model(new Knn(hp, X.cols()));
  model->train_x_ = X;
  model->train_y_.assign(y.begin(), y.end());
  model->k_ = static_cast<std::size_t>(k);
  model->distance_weighted_ = weights == "distance";
  model->p_ = static_cast<int>(p);
  return model;
}

std::vector<double> Knn::predict_rows(const Matrix& X) const {
  const std::size_t n = train_x_.rows();
  std::vector<std::pair<double, std::size_t>> dist(n);
  std::vector<double> out(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) {
    const auto q = X.row(r);
    for (std::size_t i = 0; i < n; ++i) {
      const auto t = train_x_.row(i);
      double d = 0.0;
      if (p_ == 1) {
        for (std::size_t j = 0; j < q.size(); ++j) d += std::abs(q[j] - t[j]);
      } else {
        for (std::size_t j = 0; j < q.size(); ++j) d += (q[j] - t[j]) * (q[j] - t[j]);
        d = std::sqrt(d);
      }
      dist[i] = {d, i};
    }
    // (distance, index) ordering resolves k-th place ties toward lower indices.
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());

    double vote1 = 0.0, total = 0.0;
    const bool exact_match = dist.front().first == 0.0;
    for (std::size_t m = 0; m < k_; ++m) {
      const auto [d, i] = dist[m];
      double w = 1.0;
      if (distance_weighted_) {
        if (exact_match) {
          if (d != 0.0) continue;
        } else {
          w = 1.0 / d;
        }
      }
      total += w;
      if (train_y_[i]) vote1 += w;
    }
    out[r] = vote1 / total;
  }
  return out;
}

nlohmann::json Knn::state() const {
  return {{"k", k_},
          {"distance_weighted", distance_weighted_},
          {"p", p_},
          {"x", std::vector<double>(train_x_.data().begin(), train_x_.data().end())},
          {"y", train_y_}};
}

ModelPtr Knn::from_state(const HyperParams& hp, std::size_t width, const nlohmann::json& s) {
  std::shared_ptr<Knn> model(new Knn(hp, width));
  model->k_ = s.at("k").get<std::size_t>();
  model->distance_weighted_ = s.at("distance_weighted").get<bool>();
  model->p_ = s.at("p").get<int>();
  model->train_y_ = s.at("y").get<std::vector<std::uint8_t>>();
  const auto flat = s.at("x").get<std::vector<double>>();
  model->train_x_ = Matrix(model->train_y_.size(), width);
  if (flat.size() != model->train_y_.size() * width) {
    throw Error(ErrorKind::kInvalidArgument, "KNN dump has inconsistent sizes");
  }
  for (std::size_t r = 0; r < model->train_y_.size(); ++r)
    for (std::size_t j = 0; j < width; ++j) model->train_x_(r, j) = flat[r * width + j];
  return model;
}

}  // namespace valsweep::models

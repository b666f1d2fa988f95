#include <algorithm>
#include <cmath>
#include <numbers>

#include "valsweep/error.hpp"
#include "valsweep/models.hpp"

namespace valsweep::models {

namespace {

constexpr double kMinLikelihood = 1e-12;

double posterior_positive(double jll0, double jll1) { return sigmoid(jll1 - jll0); }

}  // namespace

ModelPtr GaussianNb::train(const HyperParams& hp, const Matrix& X,
                           std::span<const std::uint8_t> y) {
  const double smoothing = hp.real("var_smoothing", 1e-9);
  if (smoothing < 0.0) throw Error(ErrorKind::kInvalidArgument, "var_smoothing must be >= 0");
  const std::size_t d = X.cols();
  std::shared_ptr<GaussianNb> model(new GaussianNb(hp, d));

  // epsilon = var_smoothing * largest per-feature variance over all rows.
  double max_var = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < X.rows(); ++i) mean += X(i, j);
    mean /= static_cast<double>(X.rows());
    double var = 0.0;
    for (std::size_t i = 0; i < X.rows(); ++i) var += (X(i, j) - mean) * (X(i, j) - mean);
    max_var = std::max(max_var, var / static_cast<double>(X.rows()));
  }
  const double epsilon = smoothing * max_var;

  std::array<double, 2> count{0.0, 0.0};
  for (auto label : y) count[label] += 1.0;
  for (int c = 0; c < 2; ++c) {
    auto& mean = model->means_[c];
    auto& var = model->variances_[c];
    mean.assign(d, 0.0);
    var.assign(d, 0.0);
    for (std::size_t i = 0; i < X.rows(); ++i) {
      if (y[i] != c) continue;
      for (std::size_t j = 0; j < d; ++j) mean[j] += X(i, j);
    }
    for (auto& m : mean) m /= count[c];
    for (std::size_t i = 0; i < X.rows(); ++i) {
      if (y[i] != c) continue;
      for (std::size_t j = 0; j < d; ++j) var[j] += (X(i, j) - mean[j]) * (X(i, j) - mean[j]);
    }
    for (auto& v : var) {
      v = v / count[c] + epsilon;
      // Only reachable when every feature is constant; the feature then
      // carries no information and any positive variance is equivalent.
      if (v <= 0.0) v = 1.0;
    }
    model->log_prior_[c] = std::log(count[c] / static_cast<double>(X.rows()));
  }
  return model;
}

std::vector<double> GaussianNb::predict_rows(const Matrix& X) const {
  std::vector<double> out(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) {
    std::array<double, 2> jll{};
    for (int c = 0; c < 2; ++c) {
      double s = log_prior_[c];
      for (std::size_t j = 0; j < X.cols(); ++j) {
        const double v = variances_[c][j];
        const double diff = X(r, j) - means_[c][j];
        s -= 0.5 * std::log(2.0 * std::numbers::pi * v) + 0.5 * diff * diff / v;
      }
      jll[c] = s;
    }
    out[r] = posterior_positive(jll[0], jll[1]);
  }
  return out;
}

nlohmann::json GaussianNb::state() const {
  return {{"log_prior", log_prior_}, {"means", means_}, {"variances", variances_}};
}

ModelPtr GaussianNb::from_state(const HyperParams& hp, std::size_t width, const nlohmann::json& s) {
  std::shared_ptr<GaussianNb> model(new GaussianNb(hp, width));
  model->log_prior_ = s.at("log_prior").get<std::array<double, 2>>();
  model->means_ = s.at("means").get<std::array<std::vector<double>, 2>>();
  model->variances_ = s.at("variances").get<std::array<std::vector<double>, 2>>();
  return model;
}

ModelPtr BernoulliNb::train(const HyperParams& hp, const Matrix& X,
                            std::span<const std::uint8_t> y) {
  const double alpha = hp.real("alpha", 1.0);
  const auto binarize = hp.real_or_none("binarize", 0.0);
  if (alpha <= 0.0) throw Error(ErrorKind::kInvalidArgument, "alpha must be > 0");
  const std::size_t d = X.cols();
  std::shared_ptr<BernoulliNb> model(new BernoulliNb(hp, d));
  model->binarize_ = binarize;

  std::array<double, 2> count{0.0, 0.0};
  std::array<std::vector<double>, 2> feature_count{std::vector<double>(d, 0.0),
                                                   std::vector<double>(d, 0.0)};
  bool non_binary = false;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    count[y[i]] += 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      double v = X(i, j);
      if (binarize) {
        v = v > *binarize ? 1.0 : 0.0;
      } else if (v != 0.0 && v != 1.0) {
        non_binary = true;
      }
      feature_count[y[i]][j] += v;
    }
  }
  if (non_binary) {
    model->diagnostics_.warnings.push_back(
        "binarize=None with feature values outside {0,1}; likelihoods use the raw values");
  }

  bool clipped = false;
  for (int c = 0; c < 2; ++c) {
    model->log_prior_[c] = std::log(count[c] / static_cast<double>(X.rows()));
    model->log_p_[c].resize(d);
    model->log_q_[c].resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      double p = (feature_count[c][j] + alpha) / (count[c] + 2.0 * alpha);
      // Raw signed features can push the smoothed frequency outside (0,1).
      if (!(p >= kMinLikelihood && p <= 1.0 - kMinLikelihood)) {
        p = std::clamp(p, kMinLikelihood, 1.0 - kMinLikelihood);
        clipped = true;
      }
      model->log_p_[c][j] = std::log(p);
      model->log_q_[c][j] = std::log1p(-p);
    }
  }
  if (clipped) {
    model->diagnostics_.warnings.push_back("Bernoulli likelihoods clipped into (0,1)");
  }
  return model;
}

std::vector<double> BernoulliNb::predict_rows(const Matrix& X) const {
  std::vector<double> out(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) {
    std::array<double, 2> jll{};
    for (int c = 0; c < 2; ++c) {
      double s = log_prior_[c];
      for (std::size_t j = 0; j < X.cols(); ++j) {
        double v = X(r, j);
        if (binarize_) v = v > *binarize_ ? 1.0 : 0.0;
        s += v * (log_p_[c][j] - log_q_[c][j]) + log_q_[c][j];
      }
      jll[c] = s;
    }
    out[r] = posterior_positive(jll[0], jll[1]);
  }
  return out;
}

nlohmann::json BernoulliNb::state() const {
  return {{"binarize", binarize_ ? nlohmann::json(*binarize_) : nlohmann::json(nullptr)},
          {"log_prior", log_prior_},
          {"log_p", log_p_},
          {"log_q", log_q_}};
}

ModelPtr BernoulliNb::from_state(const HyperParams& hp, std::size_t width,
                                 const nlohmann::json& s) {
  std::shared_ptr<BernoulliNb> model(new BernoulliNb(hp, width));
  if (!s.at("binarize").is_null()) model->binarize_ = s.at("binarize").get<double>();
  model->log_prior_ = s.at("log_prior").get<std::array<double, 2>>();
  model->log_p_ = s.at("log_p").get<std::array<std::vector<double>, 2>>();
  model->log_q_ = s.at("log_q").get<std::array<std::vector<double>, 2>>();
  return model;
}

}  // namespace valsweep::models

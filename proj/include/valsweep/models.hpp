#pragma once

// Concrete classifier families. Most callers only need classifiers.hpp; these
// types are public so tests and the model loader can reach learned state.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "valsweep/classifiers.hpp"

namespace valsweep::models {

// CART with Gini impurity and optional balanced sample weights.
class DecisionTree final : public FittedModel {
 public:
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // go left iff x[feature] <= threshold
    std::int32_t left = -1;
    std::int32_t right = -1;
    double positive_fraction = 0.0;  // weighted share of class 1
  };

  static ModelPtr train(const HyperParams& hp, const Matrix& X, std::span<const std::uint8_t> y);
  static ModelPtr from_state(const HyperParams& hp, std::size_t width, const nlohmann::json& s);

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::size_t depth() const;

 private:
  DecisionTree(HyperParams hp, std::size_t width) : FittedModel(ModelFamily::kDecisionTree, std::move(hp), width) {}
  std::vector<double> predict_rows(const Matrix& X) const override;
  nlohmann::json state() const override;

  std::vector<Node> nodes_;
};

class Knn final : public FittedModel {
 public:
  static ModelPtr train(const HyperParams& hp, const Matrix& X, std::span<const std::uint8_t> y);
  static ModelPtr from_state(const HyperParams& hp, std::size_t width, const nlohmann::json& s);

 private:
  Knn(HyperParams hp, std::size_t width) : FittedModel(ModelFamily::kKnn, std::move(hp), width) {}
  std::vector<double> predict_rows(const Matrix& X) const override;
  nlohmann::json state() const override;

  Matrix train_x_;
  std::vector<std::uint8_t> train_y_;
  std::size_t k_ = 5;
  bool distance_weighted_ = false;
  int p_ = 2;
};

class GaussianNb final : public FittedModel {
 public:
  static ModelPtr train(const HyperParams& hp, const Matrix& X, std::span<const std::uint8_t> y);
  static ModelPtr from_state(const HyperParams& hp, std::size_t width, const nlohmann::json& s);

  const std::array<std::vector<double>, 2>& means() const noexcept { return means_; }
  const std::array<std::vector<double>, 2>& variances() const noexcept { return variances_; }

 private:
  GaussianNb(HyperParams hp, std::size_t width) : FittedModel(ModelFamily::kGaussianNb, std::move(hp), width) {}
  std::vector<double> predict_rows(const Matrix& X) const override;
  nlohmann::json state() const override;

  std::array<double, 2> log_prior_{};
  std::array<std::vector<double>, 2> means_;
  std::array<std::vector<double>, 2> variances_;
};

class BernoulliNb final : public FittedModel {
 public:
  static ModelPtr train(const HyperParams& hp, const Matrix& X, std::span<const std::uint8_t> y);
  static ModelPtr from_state(const HyperParams& hp, std::size_t width, const nlohmann::json& s);

 private:
  BernoulliNb(HyperParams hp, std::size_t width) : FittedModel(ModelFamily::kBernoulliNb, std::move(hp), width) {}
  std::vector<double> predict_rows(const Matrix& X) const override;
  nlohmann::json state() const override;

  std::optional<double> binarize_;
  std::array<double, 2> log_prior_{};
  // log p(x_j = 1 | c) and log p(x_j = 0 | c)
  std::array<std::vector<double>, 2> log_p_;
  std::array<std::vector<double>, 2> log_q_;
};

// Linear score w.x + b shared by the logistic and SVM families.
struct LinearScore {
  std::vector<double> weights;
  double bias = 0.0;

  double operator()(std::span<const double> x) const;
};

class LogisticRegression final : public FittedModel {
 public:
  static ModelPtr train(const HyperParams& hp, const Matrix& X, std::span<const std::uint8_t> y);
  static ModelPtr from_state(const HyperParams& hp, std::size_t width, const nlohmann::json& s);

  const LinearScore& score() const noexcept { return score_; }

 private:
  LogisticRegression(HyperParams hp, std::size_t width) : FittedModel(ModelFamily::kLogReg, std::move(hp), width) {}
  std::vector<double> predict_rows(const Matrix& X) const override;
  nlohmann::json state() const override;

  LinearScore score_;
};

// p = 1 / (1 + exp(a * s + b))
struct PlattSigmoid {
  double a = -1.0;
  double b = 0.0;

  double operator()(double s) const;
};

// Maximum-likelihood Platt fit with prior-corrected targets, Newton's method
// with backtracking.
PlattSigmoid fit_platt(std::span<const double> scores, std::span<const std::uint8_t> y);

// L2-regularised squared-hinge linear SVM trained by dual coordinate descent;
// returns the score and whether the projected-gradient gap closed.
struct SvmFit {
  LinearScore score;
  bool converged = false;
  std::size_t epochs = 0;
};
SvmFit train_linear_svm(const Matrix& X, std::span<const std::uint8_t> y, double C,
                        std::uint64_t seed);

class CalibratedLinearSvm final : public FittedModel {
 public:
  static ModelPtr train(const HyperParams& hp, const Matrix& X, std::span<const std::uint8_t> y,
                        std::uint64_t seed);
  static ModelPtr from_state(const HyperParams& hp, std::size_t width, const nlohmann::json& s);

  const LinearScore& score() const noexcept { return score_; }
  const PlattSigmoid& sigmoid() const noexcept { return sigmoid_; }

 private:
  CalibratedLinearSvm(HyperParams hp, std::size_t width)
      : FittedModel(ModelFamily::kLinearSvmCalibrated, std::move(hp), width) {}
  std::vector<double> predict_rows(const Matrix& X) const override;
  nlohmann::json state() const override;

  LinearScore score_;
  PlattSigmoid sigmoid_;
};

// Maps raw feature values to histogram bins. Bin 0 is reserved for missing
// values; value bins start at 1.
class BinMapper {
 public:
  static constexpr std::size_t kMaxBins = 255;

  static BinMapper fit(const Matrix& X);

  std::uint8_t bin(std::size_t feature, double x) const;
  std::size_t value_bins(std::size_t feature) const { return edges_[feature].size() + 1; }
  const std::vector<std::vector<double>>& edges() const noexcept { return edges_; }
  static BinMapper from_edges(std::vector<std::vector<double>> edges);

 private:
  std::vector<std::vector<double>> edges_;
};

class HistGradientBoosting final : public FittedModel {
 public:
  static constexpr std::size_t kRounds = 100;
  static constexpr std::size_t kMinSamplesLeaf = 20;
  static constexpr double kMinHessianToSplit = 1e-3;

  struct Node {
    std::int32_t feature = -1;
    std::uint8_t bin_threshold = 0;  // go left iff bin <= threshold
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;              // shrunk leaf value
  };
  using Tree = std::vector<Node>;

  static ModelPtr train(const HyperParams& hp, const Matrix& X, std::span<const std::uint8_t> y);
  static ModelPtr from_state(const HyperParams& hp, std::size_t width, const nlohmann::json& s);

  // Mean training log-loss before boosting (index 0) and after each round.
  const std::vector<double>& training_loss() const noexcept { return training_loss_; }
  const std::vector<Tree>& trees() const noexcept { return trees_; }
  double raw_score(std::span<const double> x) const;

 private:
  HistGradientBoosting(HyperParams hp, std::size_t width)
      : FittedModel(ModelFamily::kHistGb, std::move(hp), width) {}
  std::vector<double> predict_rows(const Matrix& X) const override;
  nlohmann::json state() const override;

  BinMapper mapper_;
  double baseline_ = 0.0;
  std::vector<Tree> trees_;
  std::vector<double> training_loss_;
};

double sigmoid(double z);

}  // namespace valsweep::models

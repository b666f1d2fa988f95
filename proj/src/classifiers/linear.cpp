#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "valsweep/error.hpp"
#include "valsweep/models.hpp"
#include "valsweep/partition.hpp"
#include "valsweep/random.hpp"
#include "valsweep/tabular.hpp"

namespace valsweep::models {

namespace {

constexpr double kTolerance = 1e-6;
constexpr std::size_t kLogRegMaxIter = 2000;
constexpr std::size_t kSvmMaxEpochs = 5000;
constexpr std::uint64_t kCalibrationStream = 0x43414c4942ULL;  // "CALIB"

// log(1 + exp(-m)) without overflow.
double log1p_exp_neg(double m) {
  return m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
}

struct WeightedProblem {
  const Matrix& X;
  std::vector<double> sign;    // +1 / -1
  std::vector<double> weight;  // C times class weight
};

WeightedProblem make_problem(const Matrix& X, std::span<const std::uint8_t> y, double C) {
  const auto [w0, w1] = balanced_class_weights(y);
  WeightedProblem p{X, std::vector<double>(y.size()), std::vector<double>(y.size())};
  for (std::size_t i = 0; i < y.size(); ++i) {
    p.sign[i] = y[i] ? 1.0 : -1.0;
    p.weight[i] = C * (y[i] ? w1 : w0);
  }
  return p;
}

// Data term of the logistic objective for margins z.
double logistic_loss(const WeightedProblem& p, std::span<const double> z) {
  double f = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) f += p.weight[i] * log1p_exp_neg(p.sign[i] * z[i]);
  return f;
}

// Ridge penalty: damped Newton on (w, b); the bias is not penalised.
LinearScore logreg_l2(const WeightedProblem& p, FitDiagnostics& diag) {
  const std::size_t n = p.X.rows(), d = p.X.cols();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d + 1));
  std::vector<double> z(n, 0.0);

  auto objective = [&](const Eigen::VectorXd& t, std::vector<double>& margins) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = t[static_cast<Eigen::Index>(d)];
      for (std::size_t j = 0; j < d; ++j) s += t[static_cast<Eigen::Index>(j)] * p.X(i, j);
      margins[i] = s;
    }
    return logistic_loss(p, margins) + 0.5 * t.head(static_cast<Eigen::Index>(d)).squaredNorm();
  };

  double f = objective(theta, z);
  diag.converged = false;
  std::vector<double> trial_z(n);
  for (std::size_t iter = 0; iter < kLogRegMaxIter; ++iter) {
    diag.iterations = iter + 1;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d + 1));
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d + 1),
                                                 static_cast<Eigen::Index>(d + 1));
    Eigen::VectorXd xi(static_cast<Eigen::Index>(d + 1));
    for (std::size_t i = 0; i < n; ++i) {
      const double prob = sigmoid(z[i]);
      const double target = p.sign[i] > 0 ? 1.0 : 0.0;
      for (std::size_t j = 0; j < d; ++j) xi[static_cast<Eigen::Index>(j)] = p.X(i, j);
      xi[static_cast<Eigen::Index>(d)] = 1.0;
      grad.noalias() += p.weight[i] * (prob - target) * xi;
      hess.selfadjointView<Eigen::Lower>().rankUpdate(xi, p.weight[i] * prob * (1.0 - prob));
    }
    hess = hess.selfadjointView<Eigen::Lower>();
    grad.head(static_cast<Eigen::Index>(d)) += theta.head(static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j) {
      hess(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) += 1.0;
    }
    hess(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)) += 1e-12;
    if (grad.lpNorm<Eigen::Infinity>() < kTolerance) {
      diag.converged = true;
      break;
    }
    const Eigen::VectorXd step = hess.ldlt().solve(-grad);
    const double slope = grad.dot(step);
    double beta = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls, beta *= 0.5) {
      const Eigen::VectorXd cand = theta + beta * step;
      const double fc = objective(cand, trial_z);
      if (fc <= f + 1e-4 * beta * slope) {
        theta = cand;
        f = fc;
        z.swap(trial_z);
        accepted = true;
        break;
      }
    }
    if (!accepted || (beta * step).lpNorm<Eigen::Infinity>() < kTolerance) {
      diag.converged = true;
      break;
    }
  }

  LinearScore score;
  score.weights.assign(theta.data(), theta.data() + d);
  score.bias = theta[static_cast<Eigen::Index>(d)];
  return score;
}

// Lasso penalty: cyclic coordinate descent with a one-dimensional Newton step,
// soft thresholding and Armijo backtracking per coordinate.
LinearScore logreg_l1(const WeightedProblem& p, FitDiagnostics& diag) {
  const std::size_t n = p.X.rows(), d = p.X.cols();
  std::vector<double> w(d, 0.0);
  double b = 0.0;
  std::vector<double> z(n, 0.0);
  std::vector<double> trial(n);

  // Gradient and curvature of the data term along coordinate j (j == d is the bias).
  auto directional = [&](std::size_t j) {
    double g = 0.0, h = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = j == d ? 1.0 : p.X(i, j);
      const double prob = sigmoid(z[i]);
      const double target = p.sign[i] > 0 ? 1.0 : 0.0;
      g += p.weight[i] * (prob - target) * x;
      h += p.weight[i] * prob * (1.0 - prob) * x * x;
    }
    return std::pair{g, h + 1e-12};
  };

  double data_loss = logistic_loss(p, z);
  diag.converged = false;
  for (std::size_t sweep = 0; sweep < kLogRegMaxIter; ++sweep) {
    diag.iterations = sweep + 1;
    double max_change = 0.0;
    for (std::size_t j = 0; j <= d; ++j) {
      const auto [g, h] = directional(j);
      const bool penalised = j < d;
      const double current = penalised ? w[j] : b;
      double target = current - g / h;
      if (penalised) {
        const double shrink = 1.0 / h;
        target = std::copysign(std::max(std::abs(target) - shrink, 0.0), target);
      }
      const double delta = target - current;
      if (delta == 0.0) continue;
      const double predicted =
          g * delta + (penalised ? std::abs(current + delta) - std::abs(current) : 0.0);

      double beta = 1.0;
      for (int ls = 0; ls < 30; ++ls, beta *= 0.5) {
        const double step = beta * delta;
        for (std::size_t i = 0; i < n; ++i) trial[i] = z[i] + step * (j == d ? 1.0 : p.X(i, j));
        const double cand = logistic_loss(p, trial);
        const double reg_change =
            penalised ? std::abs(current + step) - std::abs(current) : 0.0;
        if (cand - data_loss + reg_change <= 0.01 * beta * predicted) {
          z.swap(trial);
          data_loss = cand;
          (penalised ? w[j] : b) = current + step;
          max_change = std::max(max_change, std::abs(step));
          break;
        }
      }
    }
    if (max_change < kTolerance) {
      diag.converged = true;
      break;
    }
  }
  return LinearScore{std::move(w), b};
}

}  // namespace

double LinearScore::operator()(std::span<const double> x) const {
  double s = bias;
  for (std::size_t j = 0; j < weights.size(); ++j) s += weights[j] * x[j];
  return s;
}

double PlattSigmoid::operator()(double s) const { return sigmoid(-(a * s + b)); }

ModelPtr LogisticRegression::train(const HyperParams& hp, const Matrix& X,
                                   std::span<const std::uint8_t> y) {
  const double C = hp.real("C", 1.0);
  const auto penalty = hp.token("penalty", "l2");
  if (!(C > 0.0)) throw Error(ErrorKind::kInvalidArgument, "C must be > 0");
  std::shared_ptr<LogisticRegression> model(new LogisticRegression(hp, X.cols()));
  const auto problem = make_problem(X, y, C);
  if (penalty == "l2") {
    model->score_ = logreg_l2(problem, model->diagnostics_);
  } else if (penalty == "l1") {
    model->score_ = logreg_l1(problem, model->diagnostics_);
  } else {
    throw Error(ErrorKind::kInvalidArgument, "penalty must be l1 or l2");
  }
  if (!model->diagnostics_.converged) {
    model->diagnostics_.warnings.push_back("logistic regression hit the iteration cap");
  }
  return model;
}

std::vector<double> LogisticRegression::predict_rows(const Matrix& X) const {
  std::vector<double> out(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) out[r] = sigmoid(score_(X.row(r)));
  return out;
}

nlohmann::json LogisticRegression::state() const {
  return {{"weights", score_.weights}, {"bias", score_.bias}};
}

ModelPtr LogisticRegression::from_state(const HyperParams& hp, std::size_t width,
                                        const nlohmann::json& s) {
  std::shared_ptr<LogisticRegression> model(new LogisticRegression(hp, width));
  model->score_.weights = s.at("weights").get<std::vector<double>>();
  model->score_.bias = s.at("bias").get<double>();
  return model;
}

SvmFit train_linear_svm(const Matrix& X, std::span<const std::uint8_t> y, double C,
                        std::uint64_t seed) {
  // Dual coordinate descent for the squared-hinge loss; the bias is an extra
  // constant feature and is regularised along with the weights.
  const std::size_t n = X.rows(), d = X.cols();
  const auto problem = make_problem(X, y, C);
  std::vector<double> w(d + 1, 0.0);
  std::vector<double> alpha(n, 0.0);
  std::vector<double> diag(n), qii(n);
  for (std::size_t i = 0; i < n; ++i) {
    diag[i] = 0.5 / problem.weight[i];
    double sq = 1.0;
    for (std::size_t j = 0; j < d; ++j) sq += X(i, j) * X(i, j);
    qii[i] = sq + diag[i];
  }

  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SvmFit fit;
  for (std::size_t epoch = 0; epoch < kSvmMaxEpochs; ++epoch) {
    fit.epochs = epoch + 1;
    rng.shuffle(std::span<std::size_t>(order));
    double pg_max = -std::numeric_limits<double>::infinity();
    double pg_min = std::numeric_limits<double>::infinity();
    for (auto i : order) {
      const double yi = problem.sign[i];
      double margin = w[d];
      for (std::size_t j = 0; j < d; ++j) margin += w[j] * X(i, j);
      const double g = yi * margin - 1.0 + diag[i] * alpha[i];
      const double pg = alpha[i] == 0.0 ? std::min(g, 0.0) : g;
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (pg == 0.0) continue;
      const double old = alpha[i];
      alpha[i] = std::max(alpha[i] - g / qii[i], 0.0);
      const double change = (alpha[i] - old) * yi;
      for (std::size_t j = 0; j < d; ++j) w[j] += change * X(i, j);
      w[d] += change;
    }
    if (pg_max - pg_min < kTolerance) {
      fit.converged = true;
      break;
    }
  }
  fit.score.bias = w[d];
  w.resize(d);
  fit.score.weights = std::move(w);
  return fit;
}

PlattSigmoid fit_platt(std::span<const double> scores, std::span<const std::uint8_t> y) {
  if (scores.size() != y.size() || scores.empty()) {
    throw Error(ErrorKind::kLengthMismatch, "Platt scaling needs one score per label");
  }
  double pos = 0.0, neg = 0.0;
  for (auto v : y) (v ? pos : neg) += 1.0;
  const double t_pos = (pos + 1.0) / (pos + 2.0);
  const double t_neg = 1.0 / (neg + 2.0);
  const std::size_t n = scores.size();

  auto value = [&](double a, double b) {
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = y[i] ? t_pos : t_neg;
      const double fa = scores[i] * a + b;
      f += fa >= 0 ? t * fa + std::log1p(std::exp(-fa)) : (t - 1.0) * fa + std::log1p(std::exp(fa));
    }
    return f;
  };

  PlattSigmoid s{0.0, std::log((neg + 1.0) / (pos + 1.0))};
  double f = value(s.a, s.b);
  for (int iter = 0; iter < 100; ++iter) {
    double h11 = 1e-12, h22 = 1e-12, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = y[i] ? t_pos : t_neg;
      const double fa = scores[i] * s.a + s.b;
      // p = 1 / (1 + exp(fa)), q = 1 - p
      const double p = sigmoid(-fa);
      const double q = 1.0 - p;
      const double d2 = p * q;
      h11 += scores[i] * scores[i] * d2;
      h22 += d2;
      h21 += scores[i] * d2;
      const double d1 = t - p;
      g1 += scores[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5) break;

    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * da + g2 * db;
    double step = 1.0;
    while (step >= 1e-10) {
      const double na = s.a + step * da, nb = s.b + step * db;
      const double nf = value(na, nb);
      if (nf < f + 1e-4 * step * gd) {
        s = {na, nb};
        f = nf;
        break;
      }
      step *= 0.5;
    }
    if (step < 1e-10) break;
  }
  if (!std::isfinite(s.a) || !std::isfinite(s.b)) s = PlattSigmoid{};
  return s;
}

ModelPtr CalibratedLinearSvm::train(const HyperParams& hp, const Matrix& X,
                                    std::span<const std::uint8_t> y, std::uint64_t seed) {
  const double C = hp.real("C", 1.0);
  if (!(C > 0.0)) throw Error(ErrorKind::kInvalidArgument, "C must be > 0");
  const auto [neg, pos] = class_counts(y);
  const std::size_t folds = std::min<std::size_t>(3, std::min(neg, pos));
  if (folds < 2) {
    throw Error(ErrorKind::kInvalidArgument,
                "sigmoid calibration needs at least two members of each class");
  }

  std::shared_ptr<CalibratedLinearSvm> model(new CalibratedLinearSvm(hp, X.cols()));
  const auto plan = stratified_kfold(y, folds, mix64(seed, kCalibrationStream, 0));
  std::vector<double> oof(y.size(), 0.0);
  bool converged = true;
  for (std::size_t f = 0; f < plan.splits.size(); ++f) {
    const auto& split = plan.splits[f];
    std::vector<std::uint8_t> sub_y;
    for (auto i : split.train) sub_y.push_back(y[i]);
    const auto part = train_linear_svm(X.select_rows(split.train), sub_y, C,
                                       mix64(seed, kCalibrationStream, f + 1));
    converged = converged && part.converged;
    for (auto i : split.test) oof[i] = part.score(X.row(i));
  }
  model->sigmoid_ = fit_platt(oof, y);

  const auto full = train_linear_svm(X, y, C, mix64(seed, kCalibrationStream, plan.splits.size() + 1));
  model->score_ = full.score;
  model->diagnostics_.iterations = full.epochs;
  model->diagnostics_.converged = converged && full.converged;
  if (!model->diagnostics_.converged) {
    model->diagnostics_.warnings.push_back("linear SVM hit the epoch cap");
  }
  return model;
}

std::vector<double> CalibratedLinearSvm::predict_rows(const Matrix& X) const {
  std::vector<double> out(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) out[r] = sigmoid_(score_(X.row(r)));
  return out;
}

nlohmann::json CalibratedLinearSvm::state() const {
  return {{"weights", score_.weights},
          {"bias", score_.bias},
          {"platt_a", sigmoid_.a},
          {"platt_b", sigmoid_.b}};
}

ModelPtr CalibratedLinearSvm::from_state(const HyperParams& hp, std::size_t width,
                                         const nlohmann::json& s) {
  std::shared_ptr<CalibratedLinearSvm> model(new CalibratedLinearSvm(hp, width));
  model->score_.weights = s.at("weights").get<std::vector<double>>();
  model->score_.bias = s.at("bias").get<double>();
  model->sigmoid_ = {s.at("platt_a").get<double>(), s.at("platt_b").get<double>()};
  return model;
}

}  // namespace valsweep::models

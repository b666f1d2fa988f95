#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "support/synthetic.hpp"
#include "valsweep/error.hpp"
#include "valsweep/pipeline.hpp"

using namespace valsweep;

namespace {

Column numeric(std::string name, std::vector<double> v) {
  Column c;
  c.name = std::move(name);
  c.kind = ColumnKind::kNumeric;
  c.numeric = std::move(v);
  return c;
}

Column categorical(std::string name, std::vector<std::optional<std::string>> v) {
  Column c;
  c.name = std::move(name);
  c.kind = ColumnKind::kCategorical;
  c.categorical = std::move(v);
  return c;
}

std::vector<std::size_t> all_rows(const Dataset& d) {
  std::vector<std::size_t> r(d.row_count());
  std::iota(r.begin(), r.end(), std::size_t{0});
  return r;
}

}  // namespace

TEST(Pipeline, StandardScalingUsesPopulationStd) {
  const Dataset d("y", {numeric("a", {1, 2, 3})}, {0, 1, 0});
  const auto pre = fit_preprocessor(d, all_rows(d), {});
  const auto X = pre.transform(d);
  EXPECT_NEAR(X(0, 0), -1.224744871391589, 1e-12);
  EXPECT_NEAR(X(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(X(2, 0), 1.224744871391589, 1e-12);
}

TEST(Pipeline, ConstantColumnMapsToZero) {
  const Dataset d("y", {numeric("a", {4, 4, 4, 4})}, {0, 1, 0, 1});
  const auto pre = fit_preprocessor(d, all_rows(d), {});
  const auto X = pre.transform(d);
  for (double v : X.data()) EXPECT_EQ(v, 0.0);
}

TEST(Pipeline, MissingNumericImputedWithZeroBeforeScaling) {
  const Dataset d("y", {numeric("a", {NAN, 2.0})}, {0, 1});
  const auto pre = fit_preprocessor(d, all_rows(d), {});
  EXPECT_DOUBLE_EQ(pre.numeric_stats()[0].mean, 1.0);
  const auto X = pre.transform(d);
  EXPECT_DOUBLE_EQ(X(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(X(1, 0), 1.0);
}

TEST(Pipeline, OneHotWithMissingTokenAndUnseenCategory) {
  const Dataset d("y", {categorical("c", {"b", std::nullopt, "a", "zz"})}, {0, 1, 0, 1});
  const std::vector<std::size_t> train{0, 1, 2};
  const auto pre = fit_preprocessor(d, train, {});
  EXPECT_EQ(pre.encoded_names(), (std::vector<std::string>{"c=__missing__", "c=a", "c=b"}));
  const auto X = pre.transform(d);
  EXPECT_EQ(X(0, 2), 1.0);
  EXPECT_EQ(X(1, 0), 1.0);
  EXPECT_EQ(X(2, 1), 1.0);
  // Unseen at fit time: all zeros.
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(X(3, j), 0.0);
}

TEST(Pipeline, NumericColumnsComeBeforeOneHotBlocks) {
  const Dataset d("y", {categorical("c", {"p", "q"}), numeric("n", {1, 2})}, {0, 1});
  const auto pre = fit_preprocessor(d, all_rows(d), {});
  EXPECT_EQ(pre.encoded_names(), (std::vector<std::string>{"n", "c=p", "c=q"}));
}

TEST(Pipeline, QuantileNormalClampsOutOfRange) {
  std::vector<double> v(200);
  std::iota(v.begin(), v.end(), 0.0);
  std::vector<std::uint8_t> y(200);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = i % 2;
  const Dataset d("y", {numeric("a", v)}, y);
  const auto pre = fit_preprocessor(d, all_rows(d), {Scaler::kQuantileNormal, std::nullopt});
  const Dataset probe("y", {numeric("a", {-1e9, 1e9})}, {0, 1});
  const auto X = pre.transform(probe);
  EXPECT_NEAR(X(0, 0), inverse_normal_cdf(kQuantileClip), 1e-9);
  EXPECT_NEAR(X(1, 0), inverse_normal_cdf(1.0 - kQuantileClip), 1e-9);
  EXPECT_NEAR(X(0, 0), -5.199337582, 1e-6);
}

TEST(Pipeline, QuantileNormalOutputIsRoughlyStandard) {
  const auto d = synth::gaussian_classes(2000, 1, 0.0, 0.5, 5);
  auto skewed = d.column(0);
  for (auto& x : skewed.numeric) x = std::exp(x);  // lognormal
  const Dataset s("y", {skewed}, std::vector<std::uint8_t>(d.target().begin(), d.target().end()));
  const auto pre = fit_preprocessor(s, all_rows(s), {Scaler::kQuantileNormal, std::nullopt});
  const auto col = pre.transform(s).column(0);
  double mean = 0, sq = 0;
  for (double z : col) mean += z;
  mean /= static_cast<double>(col.size());
  for (double z : col) sq += (z - mean) * (z - mean);
  EXPECT_NEAR(mean, 0.0, 0.1);
  const double sd = std::sqrt(sq / static_cast<double>(col.size()));
  EXPECT_GE(sd, 0.8);
  EXPECT_LE(sd, 1.2);
}

TEST(Pipeline, QuantileTableAndCdf) {
  const auto q = quantile_table({3, 1, 2, 4, 5}, 5);
  EXPECT_EQ(q, (std::vector<double>{1, 2, 3, 4, 5}));
  EXPECT_DOUBLE_EQ(quantile_cdf(q, 3.0), 0.5);
  EXPECT_DOUBLE_EQ(quantile_cdf(q, 1.5), 0.125);
  EXPECT_DOUBLE_EQ(quantile_cdf(q, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(quantile_cdf(q, 9.0), 1.0);
  // A run of ties lands in the middle of its reference range.
  const std::vector<double> tied{0, 1, 1, 1, 2};
  EXPECT_DOUBLE_EQ(quantile_cdf(tied, 1.0), 0.5);
}

TEST(Pipeline, MutualInformationOfAPerfectFeatureIsLn2) {
  std::vector<double> x;
  std::vector<std::uint8_t> y;
  for (int i = 0; i < 100; ++i) {
    x.push_back(i < 50 ? 0.0 : 1.0);
    y.push_back(i < 50 ? 0 : 1);
  }
  EXPECT_NEAR(mutual_information(x, y), std::log(2.0), 1e-12);
  EXPECT_DOUBLE_EQ(mutual_information(std::vector<double>(100, 3.0), y), 0.0);
}

TEST(Pipeline, TopKTiesGoToLowerIndex) {
  const std::vector<double> s{0.1, 0.5, 0.5, 0.2, 0.5};
  EXPECT_EQ(top_k_features(s, 2), (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(top_k_features(s, 3), (std::vector<std::size_t>{1, 2, 4}));
  EXPECT_EQ(top_k_features(s, 99).size(), 5u);
  EXPECT_EQ(top_k_features(s, std::nullopt).size(), 5u);
}

TEST(Pipeline, WithSelectionMatchesRefit) {
  const auto d = synth::gaussian_classes(120, 12, 0.8, 0.4, 9);
  std::vector<std::size_t> train(80);
  std::iota(train.begin(), train.end(), std::size_t{0});
  const auto full = fit_preprocessor(d, train, {Scaler::kStandard, std::nullopt});
  const auto refit = fit_preprocessor(d, train, {Scaler::kStandard, 5});
  EXPECT_EQ(full.with_selection(5), refit);
  EXPECT_EQ(refit.output_width(), 5u);
  EXPECT_EQ(refit.transform(d).cols(), 5u);
}

TEST(Pipeline, TransformIgnoresRowsOutsideTraining) {
  auto d = synth::gaussian_classes(60, 3, 1.0, 0.5, 2);
  std::vector<std::size_t> train(40);
  std::iota(train.begin(), train.end(), std::size_t{0});
  const auto pre = fit_preprocessor(d, train, {Scaler::kQuantileNormal, 2});
  auto cols = d.columns();
  for (std::size_t i = 40; i < 60; ++i) cols[0].numeric[i] = 1e6;
  const Dataset mutated(d.target_name(), cols,
                        std::vector<std::uint8_t>(d.target().begin(), d.target().end()));
  EXPECT_EQ(fit_preprocessor(mutated, train, {Scaler::kQuantileNormal, 2}), pre);
}

TEST(Pipeline, Errors) {
  const Dataset d("y", {numeric("a", {1, 2})}, {0, 1});
  try {
    fit_preprocessor(d, std::vector<std::size_t>{}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyTrainingSet);
  }
  const auto pre = fit_preprocessor(d, all_rows(d), {});
  const Dataset other("y", {numeric("b", {1, 2})}, {0, 1});
  try {
    pre.transform(other);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSchemaMismatch);
  }
}

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "support/synthetic.hpp"
#include "valsweep/config.hpp"
#include "valsweep/error.hpp"
#include "valsweep/evaluator.hpp"

using namespace valsweep;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.nested_outer = 3;
  c.nested_repeats = 1;
  c.inner_folds = 2;
  c.test_sizes = {0.2, 0.5};
  c.holdout_repeats = 2;
  c.k_values = {2, 3};
  c.kfold_repeats = 1;
  c.repeated_nominal = 1000;
  c.repeated_cap = 3;
  return c;
}

std::vector<std::size_t> iota_rows(std::size_t n) {
  std::vector<std::size_t> r(n);
  std::iota(r.begin(), r.end(), std::size_t{0});
  return r;
}

}  // namespace

TEST(Scorer, SwitchesAtThirtyPercent) {
  EXPECT_EQ(choose_scorer(0.29), ScorerChoice::kAveragePrecision);
  EXPECT_EQ(choose_scorer(0.30), ScorerChoice::kRocAuc);
  EXPECT_EQ(choose_scorer(0.31), ScorerChoice::kRocAuc);
  EXPECT_EQ(scorer_name(ScorerChoice::kAveragePrecision), "average_precision");
  EXPECT_EQ(scorer_name(ScorerChoice::kRocAuc), "roc_auc");
}

TEST(Scorer, EvaluatorUsesDatasetPrevalence) {
  const auto low = synth::gaussian_classes(100, 2, 1.0, 0.29, 1);
  const auto high = synth::gaussian_classes(100, 2, 1.0, 0.30, 1);
  EXPECT_EQ(Evaluator(low, small_config()).scorer(), ScorerChoice::kAveragePrecision);
  EXPECT_EQ(Evaluator(high, small_config()).scorer(), ScorerChoice::kRocAuc);
}

TEST(Strategies, IdsAndDisplayNames) {
  EXPECT_EQ(nested_id(5, 2), "Nested_CV_5x2");
  EXPECT_EQ(holdout_id(0.1), "Holdout_10%");
  EXPECT_EQ(kfold_id(6), "Kfold_6");
  EXPECT_EQ(repeated_id(0.3, 1000), "Repeated_Holdout_30_70_1000x");
  EXPECT_EQ(strategy_display_name("Nested_CV_5x2"), "Nested CV");
  EXPECT_EQ(strategy_display_name("Holdout_10%"), "Holdout 10%");
  EXPECT_EQ(strategy_display_name("Kfold_6"), "k=6");
  EXPECT_EQ(strategy_display_name("Repeated_Holdout_30_70_1000x"), "Repeated Holdout 30/70");
  EXPECT_LT(strategy_rank("Kfold_9"), strategy_rank("Kfold_10"));
  EXPECT_LT(strategy_rank("Holdout_90%"), strategy_rank("Kfold_2"));
  EXPECT_LT(strategy_rank("Nested_CV_5x2"), strategy_rank("Holdout_10%"));
}

TEST(Candidates, EnumerationAndReduction) {
  const auto spec = spec_for(ModelFamily::kGaussianNb);
  // 2 scalers x {all, 10, 20} x 4 grid points when 40 is not below the width.
  const auto full = enumerate_candidates(spec, 30, GridMode::kFull);
  EXPECT_EQ(full.size(), 2u * 3u * 4u);
  EXPECT_EQ(full.front().to_string(), "scaler=standard;select_k=all;var_smoothing=1e-09");
  EXPECT_EQ(full.back().preprocess.scaler, Scaler::kQuantileNormal);
  EXPECT_EQ(enumerate_candidates(spec, 5, GridMode::kFull).size(), 2u * 1u * 4u);
  EXPECT_EQ(enumerate_candidates(spec, 100, GridMode::kFull).size(), 2u * 4u * 4u);
  const auto reduced = enumerate_candidates(spec, 100, GridMode::kReduced);
  ASSERT_EQ(reduced.size(), 1u);
  EXPECT_EQ(reduced[0], full[0]);
}

TEST(GridSearch, WinnerDominatesAndIsRefitOnAllRows) {
  const auto d = synth::gaussian_classes(120, 6, 0.8, 0.4, 3);
  const auto rows = iota_rows(90);
  const auto spec = spec_for(ModelFamily::kKnn);
  const auto r = grid_search(spec, d, rows, ScorerChoice::kRocAuc, 3, GridMode::kFull, 17);
  ASSERT_EQ(r.candidate_scores.size(), enumerate_candidates(spec, 6, GridMode::kFull).size());
  for (std::size_t i = 0; i < r.candidate_scores.size(); ++i) {
    if (i < r.candidate_index) EXPECT_LT(r.candidate_scores[i], r.inner_score);
    else EXPECT_LE(r.candidate_scores[i], r.inner_score);
  }
  EXPECT_EQ(r.inner_folds, 3u);
  EXPECT_EQ(r.model->params(), r.candidate.params);
  EXPECT_EQ(r.preprocessor.spec(), r.candidate.preprocess);
  const auto again = grid_search(spec, d, rows, ScorerChoice::kRocAuc, 3, GridMode::kFull, 17);
  EXPECT_EQ(again.candidate_scores, r.candidate_scores);
  EXPECT_EQ(again.model->to_json(), r.model->to_json());
}

TEST(GridSearch, SeparableDataWinsNearPerfectly) {
  const auto d = synth::separable(120, 4, 21);
  for (const auto& spec : registry()) {
    const auto r = grid_search(spec, d, iota_rows(120), ScorerChoice::kRocAuc, 3, GridMode::kReduced, 2);
    if (spec.family == ModelFamily::kLogReg) continue;  // reduced grid is C=0.01 with L1, see below
    EXPECT_GE(r.inner_score, 0.99) << spec.name();
  }
  const auto full = grid_search(spec_for(ModelFamily::kLogReg), d, iota_rows(120),
                                ScorerChoice::kRocAuc, 3, GridMode::kFull, 2);
  EXPECT_GE(full.inner_score, 0.99);
}

TEST(GridSearch, InnerFoldsShrinkToMinority) {
  auto y = synth::labels(20, 2);
  const auto base = synth::gaussian_classes(22, 2, 1.0, 0.5, 4);
  const auto d = base.with_target(y);
  const auto r = grid_search(spec_for(ModelFamily::kGaussianNb), d, iota_rows(22),
                             ScorerChoice::kRocAuc, 5, GridMode::kReduced, 1);
  EXPECT_EQ(r.inner_folds, 2u);
  y = synth::labels(21, 1);
  const auto tiny = base.with_target(y);
  try {
    grid_search(spec_for(ModelFamily::kGaussianNb), tiny, iota_rows(22), ScorerChoice::kRocAuc, 5,
                GridMode::kReduced, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kTooManyFolds);
  }
}

TEST(Evaluator, StrategyCountsAndOrder) {
  const auto d = synth::gaussian_classes(90, 4, 0.8, 0.4, 5);
  const Evaluator ev(d, small_config());
  const auto out = ev.run({spec_for(ModelFamily::kGaussianNb)});
  ASSERT_EQ(out.size(), 1u);
  const auto& s = out[0].strategies;
  ASSERT_EQ(s.size(), 1u + 2u + 2u + 1u);
  EXPECT_EQ(s[0].strategy, "Nested_CV_3x1");
  EXPECT_EQ(s[0].records.size(), 3u);
  EXPECT_EQ(s[1].strategy, "Holdout_20%");
  EXPECT_EQ(s[1].records.size(), 2u);
  EXPECT_EQ(s[3].strategy, "Kfold_2");
  EXPECT_EQ(s[3].records.size(), 2u);
  EXPECT_EQ(s[4].records.size(), 3u);
  EXPECT_EQ(s[5].strategy, "Repeated_Holdout_30_70_1000x");
  EXPECT_EQ(s[5].records.size(), 3u);
  for (const auto& so : s)
    for (const auto& rec : so.records) {
      EXPECT_FALSE(rec.failed) << rec.error;
      EXPECT_EQ(rec.train_size + rec.test_size, d.row_count());
    }
}

TEST(Evaluator, NestedOnSeparableData) {
  const auto d = synth::separable(150, 4, 22);
  ExperimentConfig cfg;
  const Evaluator ev(d, cfg);
  for (auto family : {ModelFamily::kGaussianNb, ModelFamily::kKnn, ModelFamily::kDecisionTree}) {
    const auto so = ev.nested_cv(spec_for(family));
    ASSERT_EQ(so.records.size(), 10u);
    EXPECT_GE(aggregate("", so.strategy, so.records).mean.roc_auc, 0.99);
  }
}

TEST(Evaluator, TinyTrainingSideDegradesInnerFolds) {
  // 161 rows at test 0.9 leaves 16 training rows.
  const auto d = synth::gaussian_classes(161, 5, 1.0, 0.3, 23);
  auto cfg = small_config();
  cfg.test_sizes = {0.9};
  cfg.holdout_repeats = 5;
  cfg.inner_folds = 3;
  const auto out = Evaluator(d, cfg).holdout_sweep(spec_for(ModelFamily::kGaussianNb));
  ASSERT_EQ(out.size(), 1u);
  ASSERT_EQ(out[0].records.size(), 5u);
  for (const auto& rec : out[0].records) {
    EXPECT_EQ(rec.train_size, 16u);
    EXPECT_FALSE(rec.failed) << rec.error;
    EXPECT_GE(rec.inner_folds, 2u);
    EXPECT_LE(rec.inner_folds, 3u);
  }
}

TEST(Evaluator, LongerRepeatedHoldoutIsMoreStable) {
  // Spread of the repeated-holdout estimate across base seeds.
  const auto d = synth::gaussian_classes(200, 5, 0.6, 0.5, 24);
  auto spread = [&](std::size_t cap) {
    std::vector<double> means;
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
      ExperimentConfig cfg;
      cfg.seed = seed;
      cfg.repeated_cap = cap;
      const auto so = Evaluator(d, cfg).repeated_holdout(spec_for(ModelFamily::kGaussianNb));
      means.push_back(aggregate("", so.strategy, so.records).mean.roc_auc);
    }
    const double m = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
    double ss = 0;
    for (double v : means) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(means.size()));
  };
  EXPECT_LT(spread(50), spread(5));
}

TEST(Evaluator, KAboveMinorityIsSkipped) {
  const auto base = synth::gaussian_classes(60, 3, 1.0, 0.5, 6);
  std::vector<std::uint8_t> y(60, 0);
  for (std::size_t i = 0; i < 8; ++i) y[i * 7] = 1;
  const auto d = base.with_target(y);
  auto cfg = small_config();
  cfg.nested = false;
  cfg.repeated = false;
  cfg.test_sizes.clear();
  cfg.k_values = parse_k_list("2..15");
  const Evaluator ev(d, cfg);
  const auto out = ev.kfold_sweep(spec_for(ModelFamily::kGaussianNb));
  ASSERT_EQ(out.size(), 14u);
  for (const auto& so : out) {
    const auto k = static_cast<std::size_t>(strategy_rank(so.strategy).second);
    if (k <= 8) {
      EXPECT_FALSE(so.skip_reason.has_value()) << so.strategy;
      EXPECT_EQ(so.records.size(), k * cfg.kfold_repeats);
    } else {
      EXPECT_TRUE(so.skip_reason.has_value()) << so.strategy;
      EXPECT_TRUE(so.records.empty());
    }
  }
}

TEST(Evaluator, AggregateMatchesRecords) {
  const auto d = synth::gaussian_classes(80, 4, 0.6, 0.5, 7);
  const Evaluator ev(d, small_config());
  for (const auto& so : ev.holdout_sweep(spec_for(ModelFamily::kLogReg))) {
    const auto r = aggregate("LogReg", so.strategy, so.records);
    double sum = 0;
    for (const auto& rec : so.records) sum += rec.metrics.accuracy;
    const double mean = sum / static_cast<double>(so.records.size());
    double ss = 0;
    for (const auto& rec : so.records) ss += std::pow(rec.metrics.accuracy - mean, 2);
    EXPECT_NEAR(r.mean.accuracy, mean, 1e-12);
    EXPECT_NEAR(r.stddev.accuracy, std::sqrt(ss / static_cast<double>(so.records.size())), 1e-12);
    EXPECT_EQ(r.evaluations, so.records.size());
  }
}

TEST(Evaluator, AggregateIgnoresFailuresAndNaN) {
  std::vector<EvalRecord> recs(3);
  recs[0].metrics = {0.5, 0.6, 0.7, 0.8, 0.1, 0.2};
  recs[1].metrics = {0.7, NAN, 0.7, 0.8, 0.1, 0.2};
  recs[2].failed = true;
  const auto r = aggregate("m", "s", recs);
  EXPECT_EQ(r.evaluations, 2u);
  EXPECT_EQ(r.failures, 1u);
  EXPECT_DOUBLE_EQ(r.mean.accuracy, 0.6);
  EXPECT_DOUBLE_EQ(r.mean.roc_auc, 0.6);
  EXPECT_DOUBLE_EQ(r.stddev.roc_auc, 0.0);
}

TEST(Evaluator, ResultsDoNotDependOnJobs) {
  const auto d = synth::gaussian_classes(80, 4, 0.6, 0.35, 8);
  const std::vector<ModelSpec> specs{spec_for(ModelFamily::kGaussianNb),
                                     spec_for(ModelFamily::kDecisionTree)};
  const auto one = Evaluator(d, small_config(), 1).run(specs);
  const auto many = Evaluator(d, small_config(), 4).run(specs);
  ASSERT_EQ(one.size(), many.size());
  for (std::size_t m = 0; m < one.size(); ++m) {
    ASSERT_EQ(one[m].strategies.size(), many[m].strategies.size());
    for (std::size_t s = 0; s < one[m].strategies.size(); ++s) {
      const auto& a = one[m].strategies[s].records;
      const auto& b = many[m].strategies[s].records;
      ASSERT_EQ(a.size(), b.size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].seed, b[i].seed);
        EXPECT_EQ(a[i].candidate, b[i].candidate);
        for (auto metric : kAllMetrics) {
          const double x = a[i].metrics.get(metric), y = b[i].metrics.get(metric);
          EXPECT_TRUE(x == y || (std::isnan(x) && std::isnan(y)));
        }
      }
    }
  }
}

TEST(Evaluator, ParallelForCoversEveryIndexOnce) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 7, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(BestView, PicksHighestMeanWithCanonicalTieBreak) {
  std::vector<StrategyResult> rows(3);
  rows[0].model = rows[1].model = rows[2].model = "KNN";
  rows[0].strategy = "Nested_CV_5x2";
  rows[1].strategy = "Holdout_10%";
  rows[2].strategy = "Kfold_6";
  rows[0].mean = {0.7, 0.80, 0.5, 0.6, 0.2, 0.2};
  rows[1].mean = {0.7, 0.75, 0.6, NAN, 0.3, 0.2};
  rows[2].mean = {0.6, 0.81, 0.4, 0.5, 0.1, 0.2};
  const auto best = best_strategy_per_model(rows);
  ASSERT_EQ(best.size(), kRankedMetrics.size());
  auto find = [&](Metric m) {
    for (const auto& b : best)
      if (b.metric == m) return b;
    return BestEntry{};
  };
  EXPECT_EQ(find(Metric::kRocAuc).strategy, "Kfold_6");
  EXPECT_EQ(find(Metric::kAccuracy).strategy, "Nested_CV_5x2");
  EXPECT_EQ(find(Metric::kF1).strategy, "Nested_CV_5x2");
  EXPECT_EQ(find(Metric::kMcc).strategy, "Holdout_10%");
}

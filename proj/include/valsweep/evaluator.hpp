#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "valsweep/classifiers.hpp"
#include "valsweep/metrics.hpp"
#include "valsweep/pipeline.hpp"
#include "valsweep/tabular.hpp"

namespace valsweep {

enum class ScorerChoice { kAveragePrecision, kRocAuc };

// average_precision iff prevalence < 0.30.
ScorerChoice choose_scorer(double prevalence);
std::string_view scorer_name(ScorerChoice s);
double score_with(ScorerChoice s, std::span<const std::uint8_t> y, std::span<const double> proba);

enum class GridMode { kFull, kReduced };

std::string_view grid_mode_name(GridMode g);
std::optional<GridMode> parse_grid_mode(std::string_view name);

struct CandidateConfig {
  PreprocessSpec preprocess;
  HyperParams params;

  // "scaler=standard;select_k=all;max_depth=None;..."
  std::string to_string() const;

  friend bool operator==(const CandidateConfig&, const CandidateConfig&) = default;
};

// Scalers x select_k x model grid, first axis slowest. select_k values at or
// above the encoded width collapse into "all". The reduced mode keeps the
// first value of every axis.
std::vector<CandidateConfig> enumerate_candidates(const ModelSpec& spec,
                                                  std::size_t encoded_width, GridMode mode);

struct GridSearchResult {
  std::size_t candidate_index = 0;
  CandidateConfig candidate;
  double inner_score = 0.0;
  std::size_t inner_folds = 0;
  std::vector<double> candidate_scores;  // NaN for failed candidates
  FittedPreprocessor preprocessor;
  ModelPtr model;
};

// Inner stratified k-fold grid search on `train_rows` of `data`, then a refit
// of the winner on all of them. Inner folds shrink to the minority count of
// the training rows; fewer than two is an error (kTooManyFolds). A candidate
// that fails on any fold is out of the running; ties go to the earliest.
GridSearchResult grid_search(const ModelSpec& spec, const Dataset& data,
                             std::span<const std::size_t> train_rows, ScorerChoice scorer,
                             std::size_t inner_folds, GridMode mode, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Strategies

enum class StrategyFamily { kNested, kHoldout, kKfold, kRepeatedHoldout };

std::string nested_id(std::size_t outer_splits, std::size_t outer_repeats);
std::string holdout_id(double test_size);
std::string kfold_id(std::size_t k);
std::string repeated_id(double test_size, std::size_t nominal_repeats);

// Sort key: nested, holdouts by size, k-folds by k, repeated holdout.
std::pair<int, double> strategy_rank(std::string_view id);

// "Nested CV", "Holdout 10%", "k=6", "Repeated Holdout 30/70".
std::string strategy_display_name(std::string_view id);

struct ExperimentConfig {
  bool nested = true;
  std::size_t nested_outer = 5;
  std::size_t nested_repeats = 2;
  std::size_t inner_folds = 3;

  std::vector<double> test_sizes{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::size_t holdout_repeats = 10;

  std::vector<std::size_t> k_values{2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
  std::size_t kfold_repeats = 3;

  bool repeated = true;
  double repeated_test_size = 0.3;
  std::size_t repeated_nominal = 1000;
  std::size_t repeated_cap = 50;

  std::uint64_t seed = 42;
  GridMode grid = GridMode::kReduced;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// One outer evaluation.
struct EvalRecord {
  std::string model;
  std::string strategy;
  std::size_t repeat = 0;
  std::size_t fold = 0;
  std::uint64_t seed = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  bool failed = false;
  std::string error;
  std::string candidate;
  double inner_score = 0.0;
  std::size_t inner_folds = 0;
  MetricSet metrics{};
  std::vector<std::string> warnings;
};

struct StrategyResult {
  std::string model;
  std::string strategy;
  MetricSet mean{};
  MetricSet stddev{};
  std::size_t evaluations = 0;
  std::size_t failures = 0;
  bool skipped = false;
  std::string skip_reason;
};

// NaN-ignoring mean and population std over the successful records.
StrategyResult aggregate(std::string model, std::string strategy,
                         std::span<const EvalRecord> records);

// A strategy entry that could not run at all (e.g. k above the minority count).
struct SkipRecord {
  std::string model;
  std::string strategy;
  std::string reason;
};

// Evaluations of one model under one strategy, or a skip.
struct StrategyOutcome {
  std::string strategy;
  std::vector<EvalRecord> records;
  std::optional<std::string> skip_reason;
};

struct ModelOutcome {
  std::string model;
  std::vector<StrategyOutcome> strategies;  // canonical order
};

// Runs work items [0, count) on `jobs` threads; results are collected by
// index, so the output never depends on scheduling.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& body);

class Evaluator {
 public:
  Evaluator(const Dataset& data, ExperimentConfig config, std::size_t jobs = 1);

  ScorerChoice scorer() const noexcept { return scorer_; }
  const ExperimentConfig& config() const noexcept { return config_; }

  StrategyOutcome nested_cv(const ModelSpec& spec) const;
  std::vector<StrategyOutcome> holdout_sweep(const ModelSpec& spec) const;
  std::vector<StrategyOutcome> kfold_sweep(const ModelSpec& spec) const;
  StrategyOutcome repeated_holdout(const ModelSpec& spec) const;

  // Every enabled strategy for every model, sharing one work pool.
  std::vector<ModelOutcome> run(const std::vector<ModelSpec>& specs) const;

  // One outer evaluation; never throws, failures land in the record.
  EvalRecord evaluate_split(const ModelSpec& spec, const std::string& strategy, std::size_t repeat,
                            std::size_t fold, std::span<const std::size_t> train,
                            std::span<const std::size_t> test, std::uint64_t seed) const;

 private:
  struct WorkItem {
    std::size_t model;
    std::size_t strategy;
    std::size_t repeat;
    std::size_t fold;
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    std::uint64_t seed;
  };
  struct PlannedStrategy {
    std::string id;
    std::optional<std::string> skip_reason;
    std::vector<WorkItem> items;
  };

  std::vector<PlannedStrategy> plan(StrategyFamily family) const;
  std::vector<StrategyOutcome> execute(const ModelSpec& spec,
                                       std::vector<PlannedStrategy> planned) const;

  const Dataset& data_;
  ExperimentConfig config_;
  std::size_t jobs_;
  ScorerChoice scorer_;
};

// Per model and ranked metric: the strategy with the highest mean, NaN means
// skipped, ties to the earliest strategy in canonical order.
struct BestEntry {
  std::string model;
  Metric metric = Metric::kRocAuc;
  std::string strategy;
  double score = 0.0;

  friend bool operator==(const BestEntry&, const BestEntry&) = default;
};

std::vector<BestEntry> best_strategy_per_model(std::span<const StrategyResult> results);

}  // namespace valsweep

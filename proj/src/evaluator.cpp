#include "valsweep/evaluator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <cstdio>
#include <iterator>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "valsweep/error.hpp"
#include "valsweep/partition.hpp"
#include "valsweep/random.hpp"

namespace valsweep {

namespace {

constexpr std::uint64_t kEvalStream = 0x4556414cULL;   // "EVAL"
constexpr std::uint64_t kInnerStream = 0x494e4e52ULL;  // "INNR"
constexpr std::uint64_t kFitStream = 0x46495421ULL;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::array<std::size_t, 3> kSelectK{10, 20, 40};

std::size_t percent(double fraction) { return round_half_away(fraction * 100.0); }

std::vector<std::uint8_t> labels_at(std::span<const std::uint8_t> y,
                                    std::span<const std::size_t> rows) {
  std::vector<std::uint8_t> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = y[rows[i]];
  return out;
}

std::vector<std::size_t> map_rows(std::span<const std::size_t> base,
                                  std::span<const std::size_t> local) {
  std::vector<std::size_t> out(local.size());
  for (std::size_t i = 0; i < local.size(); ++i) out[i] = base[local[i]];
  return out;
}

MetricSet nan_metrics() { return {kNaN, kNaN, kNaN, kNaN, kNaN, kNaN}; }

}  // namespace

ScorerChoice choose_scorer(double prevalence) {
  return prevalence < 0.30 ? ScorerChoice::kAveragePrecision : ScorerChoice::kRocAuc;
}

std::string_view scorer_name(ScorerChoice s) {
  return s == ScorerChoice::kAveragePrecision ? "average_precision" : "roc_auc";
}

double score_with(ScorerChoice s, std::span<const std::uint8_t> y, std::span<const double> proba) {
  return s == ScorerChoice::kAveragePrecision ? average_precision(y, proba) : roc_auc(y, proba);
}

std::string_view grid_mode_name(GridMode g) { return g == GridMode::kFull ? "full" : "reduced"; }

std::optional<GridMode> parse_grid_mode(std::string_view name) {
  if (name == "full") return GridMode::kFull;
  if (name == "reduced") return GridMode::kReduced;
  return std::nullopt;
}

std::string CandidateConfig::to_string() const {
  std::string out = fmt::format("scaler={};select_k={}", scaler_name(preprocess.scaler),
                                preprocess.select_k ? std::to_string(*preprocess.select_k) : "all");
  const auto model = params.to_string();
  if (!model.empty()) out += ";" + model;
  return out;
}

std::vector<CandidateConfig> enumerate_candidates(const ModelSpec& spec,
                                                  std::size_t encoded_width, GridMode mode) {
  std::vector<Scaler> scalers{Scaler::kStandard, Scaler::kQuantileNormal};
  std::vector<std::optional<std::size_t>> ks{std::nullopt};
  for (auto k : kSelectK)
    if (k < encoded_width) ks.emplace_back(k);
  const ModelSpec model = mode == GridMode::kReduced ? spec.reduced() : spec;
  if (mode == GridMode::kReduced) {
    scalers.resize(1);
    ks.resize(1);
  }
  const auto points = model.enumerate();
  std::vector<CandidateConfig> out;
  out.reserve(scalers.size() * ks.size() * points.size());
  for (auto s : scalers)
    for (const auto& k : ks)
      for (const auto& p : points) out.push_back({{s, k}, p});
  return out;
}

GridSearchResult grid_search(const ModelSpec& spec, const Dataset& data,
                             std::span<const std::size_t> train_rows, ScorerChoice scorer,
                             std::size_t inner_folds, GridMode mode, std::uint64_t seed) {
  const auto y_train = labels_at(data.target(), train_rows);
  const auto [neg, pos] = class_counts(y_train);
  const std::size_t folds = std::min({inner_folds, neg, pos});
  if (folds < 2) {
    throw Error(ErrorKind::kTooManyFolds,
                fmt::format("inner cross-validation needs two members of each class, got {}/{}",
                            neg, pos));
  }
  const auto inner = stratified_kfold(y_train, folds, mix64(seed, kInnerStream, 0));

  // The encoded width (one-hot expansion) is fixed by the training rows.
  const auto probe = fit_preprocessor(data, train_rows, {});
  const auto candidates = enumerate_candidates(spec, probe.encoded_width(), mode);
  const auto points = (mode == GridMode::kReduced ? spec.reduced() : spec).enumerate();
  const std::size_t per_pre = points.size();

  std::vector<double> sums(candidates.size(), 0.0);
  std::vector<bool> alive(candidates.size(), true);
  for (std::size_t f = 0; f < inner.splits.size(); ++f) {
    const auto fit_rows = map_rows(train_rows, inner.splits[f].train);
    const auto val_rows = map_rows(train_rows, inner.splits[f].test);
    const auto y_fit = labels_at(data.target(), fit_rows);
    const auto y_val = labels_at(data.target(), val_rows);
    std::optional<FittedPreprocessor> base;
    for (std::size_t c0 = 0; c0 < candidates.size(); c0 += per_pre) {
      const auto& pre_spec = candidates[c0].preprocess;
      if (!base || base->spec().scaler != pre_spec.scaler) {
        base = fit_preprocessor(data, fit_rows, {pre_spec.scaler, std::nullopt});
      }
      const auto pre = base->with_selection(pre_spec.select_k);
      const auto X_fit = pre.transform(data, fit_rows);
      const auto X_val = pre.transform(data, val_rows);
      for (std::size_t g = 0; g < per_pre; ++g) {
        const std::size_t c = c0 + g;
        if (!alive[c]) continue;
        try {
          const auto model = fit(spec, candidates[c].params, X_fit, y_fit, mix64(seed, kFitStream, f));
          const double s = score_with(scorer, y_val, model->predict_proba(X_val));
          if (std::isnan(s)) {
            alive[c] = false;
          } else {
            sums[c] += s;
          }
        } catch (const Error&) {
          alive[c] = false;
        }
      }
    }
  }

  GridSearchResult result;
  result.inner_folds = folds;
  result.candidate_scores.assign(candidates.size(), kNaN);
  bool found = false;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (!alive[c]) continue;
    const double mean = sums[c] / static_cast<double>(folds);
    result.candidate_scores[c] = mean;
    if (!found || mean > result.inner_score) {
      found = true;
      result.candidate_index = c;
      result.inner_score = mean;
    }
  }
  if (!found) {
    throw Error(ErrorKind::kAllCandidatesFailed,
                fmt::format("all {} candidates failed for {}", candidates.size(), spec.name()));
  }
  result.candidate = candidates[result.candidate_index];
  result.preprocessor = fit_preprocessor(data, train_rows, result.candidate.preprocess);
  result.model = fit(spec, result.candidate.params, result.preprocessor.transform(data, train_rows),
                     y_train, mix64(seed, kFitStream, folds));
  return result;
}

// ---------------------------------------------------------------------------

std::string nested_id(std::size_t outer_splits, std::size_t outer_repeats) {
  return fmt::format("Nested_CV_{}x{}", outer_splits, outer_repeats);
}

std::string holdout_id(double test_size) { return fmt::format("Holdout_{}%", percent(test_size)); }

std::string kfold_id(std::size_t k) { return fmt::format("Kfold_{}", k); }

std::string repeated_id(double test_size, std::size_t nominal_repeats) {
  const auto p = percent(test_size);
  return fmt::format("Repeated_Holdout_{}_{}_{}x", p, 100 - p, nominal_repeats);
}

std::pair<int, double> strategy_rank(std::string_view id) {
  auto number_after = [&](std::string_view prefix) {
    std::string rest(id.substr(prefix.size()));
    try {
      return std::stod(rest);
    } catch (const std::exception&) {
      return 0.0;
    }
  };
  if (id.starts_with("Nested_CV")) return {0, 0.0};
  if (id.starts_with("Holdout_")) return {1, number_after("Holdout_")};
  if (id.starts_with("Kfold_")) return {2, number_after("Kfold_")};
  if (id.starts_with("Repeated_Holdout")) return {3, 0.0};
  return {4, 0.0};
}

std::string strategy_display_name(std::string_view id) {
  const auto [family, value] = strategy_rank(id);
  switch (family) {
    case 0: return "Nested CV";
    case 1: return fmt::format("Holdout {}%", static_cast<long>(value));
    case 2: return fmt::format("k={}", static_cast<long>(value));
    case 3: {
      // Repeated_Holdout_<test>_<train>_<n>x
      unsigned test = 0, train = 0;
      if (std::sscanf(std::string(id).c_str(), "Repeated_Holdout_%u_%u_", &test, &train) == 2) {
        return fmt::format("Repeated Holdout {}/{}", test, train);
      }
      return "Repeated Holdout";
    }
    default: return std::string(id);
  }
}

StrategyResult aggregate(std::string model, std::string strategy,
                         std::span<const EvalRecord> records) {
  StrategyResult r;
  r.model = std::move(model);
  r.strategy = std::move(strategy);
  for (const auto& rec : records) (rec.failed ? r.failures : r.evaluations) += 1;
  for (auto m : kAllMetrics) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& rec : records) {
      const double v = rec.metrics.get(m);
      if (rec.failed || std::isnan(v)) continue;
      sum += v;
      ++n;
    }
    if (n == 0) {
      r.mean.set(m, kNaN);
      r.stddev.set(m, kNaN);
      continue;
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& rec : records) {
      const double v = rec.metrics.get(m);
      if (rec.failed || std::isnan(v)) continue;
      ss += (v - mean) * (v - mean);
    }
    r.mean.set(m, mean);
    r.stddev.set(m, std::sqrt(ss / static_cast<double>(n)));
  }
  return r;
}

void parallel_for(std::size_t count, std::size_t jobs,
                  const std::function<void(std::size_t)>& body) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, count);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::jthread> workers;
  workers.reserve(jobs);
  for (std::size_t t = 0; t < jobs; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  workers.clear();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------

Evaluator::Evaluator(const Dataset& data, ExperimentConfig config, std::size_t jobs)
    : data_(data), config_(std::move(config)), jobs_(jobs),
      scorer_(choose_scorer(prevalence(data))) {}

EvalRecord Evaluator::evaluate_split(const ModelSpec& spec, const std::string& strategy,
                                     std::size_t repeat, std::size_t fold,
                                     std::span<const std::size_t> train,
                                     std::span<const std::size_t> test,
                                     std::uint64_t seed) const {
  EvalRecord rec;
  rec.model = std::string(spec.name());
  rec.strategy = strategy;
  rec.repeat = repeat;
  rec.fold = fold;
  rec.seed = seed;
  rec.train_size = train.size();
  rec.test_size = test.size();
  try {
    const auto gs = grid_search(spec, data_, train, scorer_, config_.inner_folds, config_.grid, seed);
    rec.candidate = gs.candidate.to_string();
    rec.inner_score = gs.inner_score;
    rec.inner_folds = gs.inner_folds;
    rec.warnings = gs.model->diagnostics().warnings;
    const auto y_test = labels_at(data_.target(), test);
    const auto proba = gs.model->predict_proba(gs.preprocessor.transform(data_, test));
    rec.metrics = compute_all(y_test, labels_from_proba(proba), proba);
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.error = e.what();
    rec.metrics = nan_metrics();
  }
  return rec;
}

std::vector<Evaluator::PlannedStrategy> Evaluator::plan(StrategyFamily family) const {
  const auto y = data_.target();
  std::vector<PlannedStrategy> out;

  auto plan_kfold = [&](std::string id, std::size_t k, std::size_t repeats) {
    PlannedStrategy ps{std::move(id), std::nullopt, {}};
    const auto stream = fnv1a64(ps.id);
    try {
      const auto p = repeated_stratified_kfold(y, k, repeats, mix64(config_.seed, stream, 0));
      for (std::size_t e = 0; e < p.splits.size(); ++e) {
        ps.items.push_back({0, 0, e / k, e % k, p.splits[e].train, p.splits[e].test,
                            mix64(config_.seed, stream ^ kEvalStream, e)});
      }
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::kTooManyFolds && err.kind() != ErrorKind::kBadK) throw;
      ps.skip_reason = err.what();
    }
    out.push_back(std::move(ps));
  };

  auto plan_holdout = [&](std::string id, double fraction, std::size_t repeats) {
    PlannedStrategy ps{std::move(id), std::nullopt, {}};
    const auto stream = fnv1a64(ps.id);
    for (std::size_t r = 0; r < repeats; ++r) {
      WorkItem item{0, 0, r, 0, {}, {}, mix64(config_.seed, stream ^ kEvalStream, r)};
      try {
        auto split = stratified_holdout(y, fraction, mix64(config_.seed, stream, r));
        item.train = std::move(split.train);
        item.test = std::move(split.test);
      } catch (const Error& err) {
        if (err.kind() != ErrorKind::kDegenerateSplit) throw;
        // Empty sides make evaluate_split record the failure.
      }
      ps.items.push_back(std::move(item));
    }
    out.push_back(std::move(ps));
  };

  switch (family) {
    case StrategyFamily::kNested:
      if (config_.nested)
        plan_kfold(nested_id(config_.nested_outer, config_.nested_repeats), config_.nested_outer,
                   config_.nested_repeats);
      break;
    case StrategyFamily::kHoldout:
      for (double f : config_.test_sizes) plan_holdout(holdout_id(f), f, config_.holdout_repeats);
      break;
    case StrategyFamily::kKfold:
      for (auto k : config_.k_values) plan_kfold(kfold_id(k), k, config_.kfold_repeats);
      break;
    case StrategyFamily::kRepeatedHoldout:
      if (config_.repeated)
        plan_holdout(repeated_id(config_.repeated_test_size, config_.repeated_nominal),
                     config_.repeated_test_size,
                     std::min(config_.repeated_nominal, config_.repeated_cap));
      break;
  }
  return out;
}

namespace {

EvalRecord degenerate_record(const ModelSpec& spec, const std::string& strategy, std::size_t repeat,
                             std::uint64_t seed) {
  EvalRecord rec;
  rec.model = std::string(spec.name());
  rec.strategy = strategy;
  rec.repeat = repeat;
  rec.seed = seed;
  rec.failed = true;
  rec.error = "DegenerateSplit: stratified holdout leaves a class without members";
  rec.metrics = nan_metrics();
  return rec;
}

}  // namespace

std::vector<StrategyOutcome> Evaluator::execute(const ModelSpec& spec,
                                                std::vector<PlannedStrategy> planned) const {
  std::vector<std::vector<PlannedStrategy>> all{std::move(planned)};

  std::vector<std::pair<std::size_t, std::size_t>> index;  // (strategy, item)
  for (std::size_t s = 0; s < all[0].size(); ++s)
    for (std::size_t i = 0; i < all[0][s].items.size(); ++i) index.emplace_back(s, i);

  std::vector<EvalRecord> records(index.size());
  parallel_for(index.size(), jobs_, [&](std::size_t w) {
    const auto& ps = all[0][index[w].first];
    const auto& item = ps.items[index[w].second];
    records[w] = item.train.empty()
                     ? degenerate_record(spec, ps.id, item.repeat, item.seed)
                     : evaluate_split(spec, ps.id, item.repeat, item.fold, item.train, item.test,
                                      item.seed);
  });

  std::vector<StrategyOutcome> out;
  std::size_t w = 0;
  for (auto& ps : all[0]) {
    StrategyOutcome so{ps.id, {}, ps.skip_reason};
    for (std::size_t i = 0; i < ps.items.size(); ++i) so.records.push_back(std::move(records[w++]));
    out.push_back(std::move(so));
  }
  return out;
}

StrategyOutcome Evaluator::nested_cv(const ModelSpec& spec) const {
  auto out = execute(spec, plan(StrategyFamily::kNested));
  if (out.empty()) return {nested_id(config_.nested_outer, config_.nested_repeats), {}, "disabled"};
  return std::move(out.front());
}

std::vector<StrategyOutcome> Evaluator::holdout_sweep(const ModelSpec& spec) const {
  return execute(spec, plan(StrategyFamily::kHoldout));
}

std::vector<StrategyOutcome> Evaluator::kfold_sweep(const ModelSpec& spec) const {
  return execute(spec, plan(StrategyFamily::kKfold));
}

StrategyOutcome Evaluator::repeated_holdout(const ModelSpec& spec) const {
  auto out = execute(spec, plan(StrategyFamily::kRepeatedHoldout));
  if (out.empty()) {
    return {repeated_id(config_.repeated_test_size, config_.repeated_nominal), {}, "disabled"};
  }
  return std::move(out.front());
}

std::vector<ModelOutcome> Evaluator::run(const std::vector<ModelSpec>& specs) const {
  std::vector<PlannedStrategy> planned;
  for (auto family : {StrategyFamily::kNested, StrategyFamily::kHoldout, StrategyFamily::kKfold,
                      StrategyFamily::kRepeatedHoldout}) {
    auto part = plan(family);
    std::move(part.begin(), part.end(), std::back_inserter(planned));
  }
  std::stable_sort(planned.begin(), planned.end(), [](const auto& a, const auto& b) {
    return strategy_rank(a.id) < strategy_rank(b.id);
  });

  // Flatten (model, strategy, item) into one pool so small strategies do not
  // serialise the run.
  struct Key {
    std::size_t model, strategy, item;
  };
  std::vector<Key> keys;
  for (std::size_t m = 0; m < specs.size(); ++m)
    for (std::size_t s = 0; s < planned.size(); ++s)
      for (std::size_t i = 0; i < planned[s].items.size(); ++i) keys.push_back({m, s, i});

  std::vector<EvalRecord> records(keys.size());
  parallel_for(keys.size(), jobs_, [&](std::size_t w) {
    const auto& [m, s, i] = keys[w];
    const auto& ps = planned[s];
    const auto& item = ps.items[i];
    records[w] = item.train.empty()
                     ? degenerate_record(specs[m], ps.id, item.repeat, item.seed)
                     : evaluate_split(specs[m], ps.id, item.repeat, item.fold, item.train,
                                      item.test, item.seed);
  });

  std::vector<ModelOutcome> out;
  std::size_t w = 0;
  for (const auto& spec : specs) {
    ModelOutcome mo{std::string(spec.name()), {}};
    for (const auto& ps : planned) {
      StrategyOutcome so{ps.id, {}, ps.skip_reason};
      for (std::size_t i = 0; i < ps.items.size(); ++i) so.records.push_back(std::move(records[w++]));
      mo.strategies.push_back(std::move(so));
    }
    out.push_back(std::move(mo));
  }
  return out;
}

std::vector<BestEntry> best_strategy_per_model(std::span<const StrategyResult> results) {
  std::vector<std::string> models;
  for (const auto& r : results)
    if (std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);

  std::vector<BestEntry> out;
  for (const auto& model : models) {
    std::vector<const StrategyResult*> rows;
    for (const auto& r : results)
      if (r.model == model && !r.skipped) rows.push_back(&r);
    std::stable_sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) {
      return strategy_rank(a->strategy) < strategy_rank(b->strategy);
    });
    for (auto metric : kRankedMetrics) {
      const StrategyResult* best = nullptr;
      for (const auto* r : rows) {
        const double v = r->mean.get(metric);
        if (std::isnan(v)) continue;
        if (!best || v > best->mean.get(metric)) best = r;
      }
      if (best) out.push_back({model, metric, best->strategy, best->mean.get(metric)});
    }
  }
  return out;
}

}  // namespace valsweep

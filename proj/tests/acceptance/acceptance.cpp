// Acceptance suite: one PASS/FAIL line per criterion. With arguments, runs
// only the named criteria. Exit status is non-zero if any selected one fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "valsweep/error.hpp"
#include "valsweep/evaluator.hpp"
#include "valsweep/metrics.hpp"
#include "valsweep/partition.hpp"
#include "valsweep/report.hpp"
#include "valsweep/tabular.hpp"

using namespace valsweep;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::size_t default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

// ---------------------------------------------------------------------------

Verdict partition_invariants() {
  std::size_t plans = 0, holdouts = 0;
  std::vector<std::string> problems;
  auto problem = [&](std::string s) {
    if (problems.size() < 5) problems.push_back(std::move(s));
  };
  for (std::size_t n = 10; n <= 120; ++n) {
    for (int f = 1; f <= 5; ++f) {
      const auto minority = static_cast<std::size_t>(std::llround(0.1 * f * static_cast<double>(n)));
      if (minority == 0) continue;
      std::vector<std::uint8_t> y(n, 0);
      for (std::size_t i = 0; i < minority; ++i) y[(i * n) / minority] = 1;
      const auto [n0, n1] = class_counts(y);
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        for (std::size_t k = 2; k <= 15; ++k) {
          const auto tag = fmt::format("n={} minority={} k={} seed={}", n, minority, k, seed);
          if (k > std::min(n0, n1)) {
            try {
              stratified_kfold(y, k, seed);
              problem(tag + ": expected TooManyFolds");
            } catch (const Error& e) {
              if (e.kind() != ErrorKind::kTooManyFolds) problem(tag + ": wrong error");
            }
            continue;
          }
          const auto plan = stratified_kfold(y, k, seed);
          ++plans;
          if (plan.splits.size() != k) problem(tag + ": fold count");
          std::vector<int> seen(n, 0);
          std::size_t lo = n, hi = 0, lo0 = n, hi0 = 0, lo1 = n, hi1 = 0;
          for (const auto& s : plan.splits) {
            std::vector<int> here(n, 0);
            for (auto i : s.test) {
              ++seen[i];
              ++here[i];
            }
            for (auto i : s.train) ++here[i];
            if (std::any_of(here.begin(), here.end(), [](int c) { return c != 1; }))
              problem(tag + ": train/test not a partition");
            std::size_t c1 = 0;
            for (auto i : s.test) c1 += y[i];
            const std::size_t c0 = s.test.size() - c1;
            lo = std::min(lo, s.test.size());
            hi = std::max(hi, s.test.size());
            lo0 = std::min(lo0, c0);
            hi0 = std::max(hi0, c0);
            lo1 = std::min(lo1, c1);
            hi1 = std::max(hi1, c1);
          }
          if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; }))
            problem(tag + ": test folds do not cover every row exactly once");
          if (hi - lo > 1) problem(tag + ": fold sizes differ by more than one");
          if (hi0 - lo0 > 1 || hi1 - lo1 > 1) problem(tag + ": per-class counts differ by more than one");
          if (!(stratified_kfold(y, k, seed) == plan)) problem(tag + ": not deterministic");
        }
        for (int t = 1; t <= 9; ++t) {
          const double frac = 0.1 * t;
          try {
            const auto s = stratified_holdout(y, frac, seed);
            ++holdouts;
            std::vector<int> here(n, 0);
            for (auto i : s.train) ++here[i];
            for (auto i : s.test) ++here[i];
            if (std::any_of(here.begin(), here.end(), [](int c) { return c != 1; }))
              problem(fmt::format("holdout n={} frac={}: not a partition", n, frac));
            if (!(stratified_holdout(y, frac, seed) == s))
              problem(fmt::format("holdout n={} frac={}: not deterministic", n, frac));
          } catch (const Error& e) {
            if (e.kind() != ErrorKind::kDegenerateSplit) problem("holdout: unexpected error");
          }
        }
      }
    }
  }
  std::string detail = fmt::format("{} k-fold plans, {} holdouts checked", plans, holdouts);
  for (const auto& p : problems) detail += "; " + p;
  return {problems.empty(), detail};
}

// ---------------------------------------------------------------------------

Verdict metric_oracles() {
  std::mt19937_64 rng(20240601);
  double worst_auc = 0, worst_ap = 0, worst_mcc = 0, worst_f1 = 0;
  for (int instance = 0; instance < 1000; ++instance) {
    const std::size_t n = 2 + rng() % 199;
    // Coarse score grids force ties.
    const std::uint64_t levels = 2 + rng() % 20;
    std::vector<std::uint8_t> y(n), p(n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng() % 2;
      p[i] = rng() % 2;
      s[i] = static_cast<double>(rng() % levels) / static_cast<double>(levels);
    }
    const std::size_t i0 = rng() % n, i1 = (i0 + 1 + rng() % (n - 1)) % n;
    y[i0] = 0;
    y[i1] = 1;
    worst_auc = std::max(worst_auc, std::abs(roc_auc(y, s) - oracle::pairwise_auc(y, s)));
    worst_ap = std::max(worst_ap, std::abs(average_precision(y, s) - oracle::threshold_sweep_ap(y, s)));
    worst_mcc = std::max(worst_mcc, std::abs(mcc(y, p) - oracle::mcc_formula(y, p)));
    worst_f1 = std::max(worst_f1, std::abs(f1_weighted(y, p) - oracle::f1_by_hand(y, p)));
  }
  const double worst = std::max({worst_auc, worst_ap, worst_mcc, worst_f1});
  return {worst <= 1e-12, fmt::format("max abs diff roc_auc={:.3g} ap={:.3g} mcc={:.3g} f1={:.3g}",
                                      worst_auc, worst_ap, worst_mcc, worst_f1)};
}

// ---------------------------------------------------------------------------

const Dataset& contract_dataset() {
  static const Dataset d = synth::gaussian_classes(300, 10, 0.6, 0.4, 300);
  return d;
}

std::vector<ModelOutcome> full_run(const Dataset& d, std::size_t jobs) {
  ExperimentConfig cfg;  // defaults: reduced grid, every strategy
  return Evaluator(d, cfg, jobs).run(registry());
}

Verdict strategy_counts() {
  const auto outcomes = full_run(contract_dataset(), default_jobs());
  const auto table = build_report({}, outcomes);
  std::map<std::string, std::size_t> per_model;
  for (const auto& r : table.rows) ++per_model[r.model];
  bool ok = table.rows.size() == 175 && per_model.size() == 7;
  for (const auto& [m, n] : per_model) ok = ok && n == 25;
  std::size_t nested_min = 1000, nested_max = 0, rep_min = 1000, rep_max = 0, skips = 0;
  for (const auto& r : table.rows) {
    const std::size_t total = r.evaluations + r.failures;
    skips += r.skipped;
    if (r.strategy == "Nested_CV_5x2") {
      nested_min = std::min(nested_min, total);
      nested_max = std::max(nested_max, total);
    }
    if (r.strategy == "Repeated_Holdout_30_70_1000x") {
      rep_min = std::min(rep_min, total);
      rep_max = std::max(rep_max, total);
    }
  }
  ok = ok && nested_min == 10 && nested_max == 10 && rep_min == 50 && rep_max == 50 && skips == 0;
  return {ok, fmt::format("{} results over {} models; nested evals {}..{}; repeated evals {}..{}; {} skipped",
                          table.rows.size(), per_model.size(), nested_min, nested_max, rep_min,
                          rep_max, skips)};
}

// ---------------------------------------------------------------------------

Verdict scorer_switch() {
  const auto a = choose_scorer(0.29), b = choose_scorer(0.30), c = choose_scorer(0.31);
  // Through the evaluator as well, from actual datasets.
  auto with_prevalence = [](double p) {
    return Evaluator(synth::gaussian_classes(100, 2, 0.5, p, 1), ExperimentConfig{}).scorer();
  };
  const bool ok = a == ScorerChoice::kAveragePrecision && b == ScorerChoice::kRocAuc &&
                  c == ScorerChoice::kRocAuc &&
                  with_prevalence(0.29) == ScorerChoice::kAveragePrecision &&
                  with_prevalence(0.30) == ScorerChoice::kRocAuc &&
                  with_prevalence(0.31) == ScorerChoice::kRocAuc;
  return {ok, fmt::format("0.29 -> {}, 0.30 -> {}, 0.31 -> {}", scorer_name(a), scorer_name(b),
                          scorer_name(c))};
}

// ---------------------------------------------------------------------------

Verdict null_signal() {
  const auto signal = synth::gaussian_classes(2000, 10, 0.8, 0.5, 2000);
  const auto d = synth::permuted(signal, 7);
  ExperimentConfig cfg;
  const Evaluator ev(d, cfg, default_jobs());
  bool ok = true;
  std::string detail;
  for (const auto& spec : registry()) {
    const auto so = ev.nested_cv(spec);
    const auto r = aggregate(std::string(spec.name()), so.strategy, so.records);
    const double auc = r.mean.roc_auc;
    const bool in_band = r.evaluations == 10 && auc >= 0.45 && auc <= 0.55;
    ok = ok && in_band;
    detail += fmt::format("{}{}={:.3f}", detail.empty() ? "" : " ", spec.name(), auc);
  }
  return {ok, "nested roc_auc " + detail};
}

// ---------------------------------------------------------------------------

std::map<std::string, double> kfold10_auc(const Dataset& d) {
  ExperimentConfig cfg;
  cfg.nested = false;
  cfg.repeated = false;
  cfg.test_sizes.clear();
  cfg.k_values = {10};
  const Evaluator ev(d, cfg, default_jobs());
  std::map<std::string, double> auc;
  for (auto family : {ModelFamily::kKnn, ModelFamily::kDecisionTree, ModelFamily::kLogReg}) {
    const auto spec = spec_for(family);
    const auto so = ev.kfold_sweep(spec).front();
    auc[std::string(spec.name())] =
        aggregate(std::string(spec.name()), so.strategy, so.records).mean.roc_auc;
  }
  return auc;
}

Verdict framingham() {
  std::filesystem::path path = "data/heart.csv";
  if (const char* env = std::getenv("VALSWEEP_FRAMINGHAM_CSV")) path = env;
  if (!std::filesystem::exists(path)) {
    // The smaller Cleveland file is printed for orientation only; it cannot
    // stand in for the 1,025-row dataset.
    const std::filesystem::path proxy = "data/cleveland_heart.csv";
    if (std::filesystem::exists(proxy)) {
      auto auc = kfold10_auc(load_csv(proxy, "target"));
      std::cout << fmt::format("[info] {} Kfold_10 roc_auc KNN={:.3f} DecisionTree={:.3f} LogReg={:.3f}\n",
                               proxy.string(), auc["KNN"], auc["DecisionTree"], auc["LogReg"]);
    }
    return {false, fmt::format("dataset not available at {} (set VALSWEEP_FRAMINGHAM_CSV)",
                               path.string())};
  }
  const auto d = load_csv(path, "target");
  auto auc = kfold10_auc(d);
  const bool ok = d.row_count() == 1025 && auc["KNN"] >= 0.98 && auc["DecisionTree"] >= 0.98 &&
                  auc["LogReg"] >= 0.88 && auc["LogReg"] <= 0.96;
  return {ok, fmt::format("rows={} Kfold_10 roc_auc KNN={:.3f} DecisionTree={:.3f} LogReg={:.3f}",
                          d.row_count(), auc["KNN"], auc["DecisionTree"], auc["LogReg"])};
}

// ---------------------------------------------------------------------------

Verdict determinism() {
  const auto& d = contract_dataset();
  const auto a = render_summary(build_report({}, full_run(d, 1)), ReportFormat::kCsv);
  const auto b = render_summary(build_report({}, full_run(d, 8)), ReportFormat::kCsv);
  return {a == b && !a.empty(),
          fmt::format("summary.csv {} bytes at --jobs 1, {} bytes at --jobs 8, {}", a.size(), b.size(),
                      a == b ? "identical" : "different")};
}

// ---------------------------------------------------------------------------

Verdict leakage() {
  const auto d = synth::gaussian_classes(200, 8, 0.7, 0.4, 71);
  const auto split = stratified_holdout(d.target(), 0.3, 5);

  // Scramble every feature cell of the test rows and flip their labels.
  auto cols = d.columns();
  std::mt19937_64 rng(9);
  std::normal_distribution<double> wild(50.0, 100.0);
  for (auto& c : cols)
    for (auto i : split.test) c.numeric[i] = wild(rng);
  std::vector<std::uint8_t> y(d.target().begin(), d.target().end());
  for (auto i : split.test) y[i] = 1 - y[i];
  const Dataset mutated(d.target_name(), cols, y);

  const ExperimentConfig cfg;
  const Evaluator before(d, cfg), after(mutated, cfg);
  std::size_t checked = 0;
  std::vector<std::string> leaks;
  for (const auto& spec : registry()) {
    for (auto mode : {GridMode::kReduced, GridMode::kFull}) {
      if (mode == GridMode::kFull && spec.grid_size() > 8) continue;
      const auto a = grid_search(spec, d, split.train, ScorerChoice::kRocAuc, 3, mode, 11);
      const auto b = grid_search(spec, mutated, split.train, ScorerChoice::kRocAuc, 3, mode, 11);
      ++checked;
      if (!(a.preprocessor == b.preprocessor)) leaks.push_back(std::string(spec.name()) + " preprocessor");
      if (a.model->to_json() != b.model->to_json()) leaks.push_back(std::string(spec.name()) + " model");
      if (a.candidate_scores != b.candidate_scores || a.candidate_index != b.candidate_index)
        leaks.push_back(std::string(spec.name()) + " inner scores");
    }
    const auto ra = before.evaluate_split(spec, "Holdout_30%", 0, 0, split.train, split.test, 3);
    const auto rb = after.evaluate_split(spec, "Holdout_30%", 0, 0, split.train, split.test, 3);
    if (ra.candidate != rb.candidate || ra.inner_score != rb.inner_score ||
        ra.inner_folds != rb.inner_folds || ra.train_size != rb.train_size || ra.seed != rb.seed)
      leaks.push_back(std::string(spec.name()) + " log entry");
  }
  std::string detail = fmt::format("{} grid searches compared", checked);
  for (const auto& l : leaks) detail += "; changed: " + l;
  return {leaks.empty(), detail};
}

// ---------------------------------------------------------------------------

Verdict small_data() {
  std::size_t wins = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto d = synth::gaussian_classes(160, 10, 0.5, 0.5, 1000 + seed);
    ExperimentConfig cfg;
    cfg.seed = seed;
    cfg.nested = false;
    cfg.repeated = false;
    cfg.k_values.clear();
    cfg.test_sizes = {0.1, 0.7};
    const auto out = Evaluator(d, cfg).holdout_sweep(spec_for(ModelFamily::kGaussianNb));
    const double small_test = aggregate("GaussianNB", out[0].strategy, out[0].records).mean.roc_auc;
    const double large_test = aggregate("GaussianNB", out[1].strategy, out[1].records).mean.roc_auc;
    wins += small_test > large_test;
  }
  return {wins >= 15, fmt::format("Holdout_10% beat Holdout_70% in {}/20 seeds", wins)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"partition_invariants", partition_invariants},
      {"metric_oracles", metric_oracles},
      {"strategy_counts", strategy_counts},
      {"scorer_switch", scorer_switch},
      {"null_signal", null_signal},
      {"framingham", framingham},
      {"determinism", determinism},
      {"leakage", leakage},
      {"small_data", small_data},
  };
  std::set<std::string> wanted(argv + 1, argv + argc);
  for (const auto& w : wanted) {
    if (std::none_of(criteria.begin(), criteria.end(), [&](const auto& c) { return c.first == w; })) {
      std::cerr << "unknown criterion: " << w << "\n";
      return 2;
    }
  }
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    if (!wanted.empty() && !wanted.count(name)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
    std::cout << (v.pass ? "PASS " : "FAIL ") << name << " (" << fmt::format("{:.1f}s", took.count())
              << "): " << v.detail << std::endl;
    failed += !v.pass;
  }
  return failed == 0 ? 0 : 1;
}

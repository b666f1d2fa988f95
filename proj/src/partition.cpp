#include "valsweep/partition.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "valsweep/error.hpp"
#include "valsweep/random.hpp"

namespace valsweep {

namespace {

std::array<std::vector<std::size_t>, 2> members_by_class(std::span<const std::uint8_t> labels) {
  std::array<std::vector<std::size_t>, 2> members;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 1) {
      throw Error(ErrorKind::kInvalidArgument, "label at index " + std::to_string(i) +
                                                   " is not in {0,1}");
    }
    members[labels[i]].push_back(i);
  }
  return members;
}

Split split_from_fold_ids(std::span<const std::size_t> fold_of, std::size_t fold) {
  Split split;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    (fold_of[i] == fold ? split.test : split.train).push_back(i);
  }
  return split;
}

}  // namespace

std::size_t round_half_away(double x) {
  return static_cast<std::size_t>(std::floor(x + 0.5));
}

std::vector<std::size_t> holdout_test_counts(std::span<const std::size_t> class_sizes,
                                             double test_fraction) {
  const std::size_t n = std::accumulate(class_sizes.begin(), class_sizes.end(), std::size_t{0});
  const std::size_t total = round_half_away(test_fraction * static_cast<double>(n));

  std::vector<std::size_t> counts(class_sizes.size());
  std::vector<double> remainder(class_sizes.size());
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < class_sizes.size(); ++c) {
    const double share = test_fraction * static_cast<double>(class_sizes[c]);
    counts[c] = static_cast<std::size_t>(std::floor(share));
    remainder[c] = share - std::floor(share);
    assigned += counts[c];
  }

  std::vector<std::size_t> order(class_sizes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < total && i < order.size(); ++i, ++assigned) {
    ++counts[order[i]];
  }
  return counts;
}

Split stratified_holdout(std::span<const std::uint8_t> labels, double test_fraction,
                         std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "test fraction must lie in (0,1)");
  }
  auto members = members_by_class(labels);
  const std::array<std::size_t, 2> sizes{members[0].size(), members[1].size()};
  const auto test_counts = holdout_test_counts(sizes, test_fraction);
  for (std::size_t c = 0; c < 2; ++c) {
    if (test_counts[c] == 0 || test_counts[c] >= sizes[c]) {
      throw Error(ErrorKind::kDegenerateSplit,
                  "test fraction " + std::to_string(test_fraction) + " on class " +
                      std::to_string(c) + " (" + std::to_string(sizes[c]) +
                      " members) leaves a side without that class");
    }
  }

  Rng rng(seed);
  Split split;
  for (std::size_t c = 0; c < 2; ++c) {
    rng.shuffle(std::span<std::size_t>(members[c]));
    split.test.insert(split.test.end(), members[c].begin(), members[c].begin() + test_counts[c]);
    split.train.insert(split.train.end(), members[c].begin() + test_counts[c], members[c].end());
  }
  std::sort(split.test.begin(), split.test.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

PartitionPlan stratified_kfold(std::span<const std::uint8_t> labels, std::size_t k,
                               std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::kBadK, "k must be at least 2, got " + std::to_string(k));
  auto members = members_by_class(labels);
  const std::size_t min_class = std::min(members[0].size(), members[1].size());
  if (min_class < k) {
    throw Error(ErrorKind::kTooManyFolds, "k=" + std::to_string(k) +
                                              " exceeds the smallest class count " +
                                              std::to_string(min_class));
  }

  Rng rng(seed);
  std::vector<std::size_t> fold_of(labels.size());
  std::size_t position = 0;
  for (auto& m : members) {
    rng.shuffle(std::span<std::size_t>(m));
    for (auto idx : m) fold_of[idx] = position++ % k;
  }

  PartitionPlan plan;
  plan.kind = PlanKind::kKfold;
  plan.seed = seed;
  plan.folds_per_round = k;
  plan.splits.reserve(k);
  for (std::size_t f = 0; f < k; ++f) plan.splits.push_back(split_from_fold_ids(fold_of, f));
  return plan;
}

std::uint64_t repeated_round_seed(std::uint64_t seed, std::size_t round) {
  return mix64(seed, kRepeatedKfoldStream, round);
}

PartitionPlan repeated_stratified_kfold(std::span<const std::uint8_t> labels, std::size_t k,
                                        std::size_t repeats, std::uint64_t seed) {
  if (repeats < 1) throw Error(ErrorKind::kInvalidArgument, "repeats must be at least 1");
  PartitionPlan plan;
  plan.kind = PlanKind::kRepeatedKfold;
  plan.seed = seed;
  plan.folds_per_round = k;
  for (std::size_t r = 0; r < repeats; ++r) {
    auto round = stratified_kfold(labels, k, repeated_round_seed(seed, r));
    std::move(round.splits.begin(), round.splits.end(), std::back_inserter(plan.splits));
  }
  return plan;
}

}  // namespace valsweep

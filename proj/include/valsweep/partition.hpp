#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace valsweep {

// Train/test index sets, both sorted ascending and disjoint.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;

  friend bool operator==(const Split&, const Split&) = default;
};

enum class PlanKind { kHoldout, kKfold, kRepeatedKfold };

struct PartitionPlan {
  PlanKind kind = PlanKind::kKfold;
  std::uint64_t seed = 0;
  // Folds per round; 1 for holdout plans.
  std::size_t folds_per_round = 1;
  std::vector<Split> splits;

  std::size_t rounds() const { return splits.size() / folds_per_round; }

  friend bool operator==(const PartitionPlan&, const PartitionPlan&) = default;
};

// Seed streams used when deriving per-round seeds.
inline constexpr std::uint64_t kRepeatedKfoldStream = 0x52504b46ULL;  // "RPKF"

// Round half away from zero.
std::size_t round_half_away(double x);

// Per-class test counts for a stratified holdout: total = round(fraction * n),
// distributed by largest remainder (ties to the lower class label).
std::vector<std::size_t> holdout_test_counts(std::span<const std::size_t> class_sizes,
                                             double test_fraction);

// Seeded stratified holdout. Within each class the members, listed in
// ascending index order, are Fisher-Yates shuffled and the first t_c go to the
// test side. Throws kDegenerateSplit if either side would miss a class.
Split stratified_holdout(std::span<const std::uint8_t> labels, double test_fraction,
                         std::uint64_t seed);

// Seeded stratified k-fold. Class-0 members (shuffled) followed by class-1
// members (shuffled) are dealt round-robin into folds, which balances both
// fold sizes and per-class counts to within one.
PartitionPlan stratified_kfold(std::span<const std::uint8_t> labels, std::size_t k,
                               std::uint64_t seed);

// `repeats` independent k-fold rounds; round r uses
// mix64(seed, kRepeatedKfoldStream, r).
PartitionPlan repeated_stratified_kfold(std::span<const std::uint8_t> labels, std::size_t k,
                                        std::size_t repeats, std::uint64_t seed);

std::uint64_t repeated_round_seed(std::uint64_t seed, std::size_t round);

}  // namespace valsweep

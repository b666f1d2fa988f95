#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "support/synthetic.hpp"
#include "valsweep/error.hpp"
#include "valsweep/partition.hpp"
#include "valsweep/random.hpp"

using namespace valsweep;

namespace {

std::size_t count_class(std::span<const std::uint8_t> y, const std::vector<std::size_t>& idx,
                        std::uint8_t cls) {
  return static_cast<std::size_t>(
      std::count_if(idx.begin(), idx.end(), [&](auto i) { return y[i] == cls; }));
}

void expect_partition(const Split& s, std::size_t n) {
  EXPECT_TRUE(std::is_sorted(s.train.begin(), s.train.end()));
  EXPECT_TRUE(std::is_sorted(s.test.begin(), s.test.end()));
  std::vector<std::size_t> all = s.train;
  all.insert(all.end(), s.test.begin(), s.test.end());
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expected(n);
  std::iota(expected.begin(), expected.end(), std::size_t{0});
  EXPECT_EQ(all, expected);
}

}  // namespace

TEST(Random, SplitMixKnownValue) {
  // Reference output of the SplitMix64 generator seeded with 0.
  EXPECT_EQ(splitmix64(0), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Random, UniformIndexStaysInRange) {
  Rng rng(7);
  std::vector<int> hits(5, 0);
  for (int i = 0; i < 5000; ++i) ++hits[rng.uniform_index(5)];
  for (int h : hits) EXPECT_GT(h, 850);
}

TEST(Holdout, ProportionalAllocation) {
  const auto y = synth::labels(6, 4);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = stratified_holdout(y, 0.5, seed);
    EXPECT_EQ(count_class(y, s.test, 0), 3u);
    EXPECT_EQ(count_class(y, s.test, 1), 2u);
    expect_partition(s, y.size());
  }
}

TEST(Holdout, LargestRemainderCounts) {
  // 7 x 0.3 = 2.1, 3 x 0.3 = 0.9; total 3 -> floors (2,0), remainder to class 1.
  const std::vector<std::size_t> sizes{7, 3};
  EXPECT_EQ(holdout_test_counts(sizes, 0.3), (std::vector<std::size_t>{2, 1}));
  EXPECT_EQ(round_half_away(2.5), 3u);
  EXPECT_EQ(round_half_away(0.5), 1u);
}

TEST(Holdout, DegenerateSplit) {
  const auto y = synth::labels(6, 4);
  try {
    stratified_holdout(y, 0.999, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerateSplit);
  }
}

TEST(Holdout, Deterministic) {
  const auto y = synth::labels(30, 11);
  EXPECT_EQ(stratified_holdout(y, 0.3, 99), stratified_holdout(y, 0.3, 99));
  EXPECT_NE(stratified_holdout(y, 0.3, 99), stratified_holdout(y, 0.3, 100));
}

TEST(Kfold, BalancedTwoFold) {
  const auto y = synth::labels(6, 4);
  const auto plan = stratified_kfold(y, 2, 5);
  ASSERT_EQ(plan.splits.size(), 2u);
  for (const auto& s : plan.splits) {
    EXPECT_EQ(count_class(y, s.test, 0), 3u);
    EXPECT_EQ(count_class(y, s.test, 1), 2u);
    expect_partition(s, y.size());
  }
}

TEST(Kfold, Errors) {
  const auto y = synth::labels(10, 3);
  try {
    stratified_kfold(y, 4, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kTooManyFolds);
  }
  try {
    stratified_kfold(y, 1, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kBadK);
  }
}

TEST(Kfold, FoldSizesArePigeonholed) {
  const auto y = synth::labels(23, 14);
  for (std::size_t k = 2; k <= 14; ++k) {
    const auto plan = stratified_kfold(y, k, k);
    const std::size_t lo = y.size() / k, hi = (y.size() + k - 1) / k;
    for (const auto& s : plan.splits) {
      EXPECT_GE(s.test.size(), lo);
      EXPECT_LE(s.test.size(), hi);
    }
  }
}

TEST(RepeatedKfold, ConcatenatesSeededRounds) {
  const auto y = synth::labels(25, 15);
  const auto plan = repeated_stratified_kfold(y, 5, 2, 42);
  EXPECT_EQ(plan.splits.size(), 10u);
  EXPECT_EQ(plan.rounds(), 2u);
  const auto one = repeated_stratified_kfold(y, 3, 1, 42);
  const auto direct = stratified_kfold(y, 3, repeated_round_seed(42, 0));
  EXPECT_EQ(one.splits, direct.splits);
}

TEST(Kfold, CountStatisticsArePermutationEquivariant) {
  auto y = synth::labels(17, 9);
  const auto before = stratified_kfold(y, 3, 11);
  std::vector<std::size_t> sizes_before;
  for (const auto& s : before.splits) sizes_before.push_back(count_class(y, s.test, 1));
  std::reverse(y.begin(), y.end());
  const auto after = stratified_kfold(y, 3, 11);
  std::vector<std::size_t> sizes_after;
  for (const auto& s : after.splits) sizes_after.push_back(count_class(y, s.test, 1));
  std::sort(sizes_before.begin(), sizes_before.end());
  std::sort(sizes_after.begin(), sizes_after.end());
  EXPECT_EQ(sizes_before, sizes_after);
}

// Copyright 2026 The ctrnas Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ctrnas/error.h"
#include "ctrnas/metrics.h"
#include "oracles.h"

namespace ctrnas {
namespace {

// Random values drawn from a small grid so ties are common.
std::vector<double> TiedValues(Rng& rng, std::size_t n, int levels) {
  std::uniform_int_distribution<int> d(0, levels - 1);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng) / static_cast<double>(levels);
  return v;
}

TEST(LoglossTest, SingleHalf) {
  const std::vector<double> y = {1}, p = {0.5};
  EXPECT_NEAR(Logloss(y, p), 0.693147180559945, 1e-12);
}

TEST(AucTest, PerfectSeparation) {
  const std::vector<double> y = {0, 1}, p = {0.2, 0.8};
  EXPECT_EQ(Auc(y, p), 1.0);
}

TEST(AucTest, SingleClassThrows) {
  const std::vector<double> y = {1, 1}, p = {0.2, 0.8};
  EXPECT_THROW(Auc(y, p), Error);
}

TEST(AucTest, MatchesPairCount) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> y = TiedValues(rng, 200, 2);
    for (auto& v : y) v *= 2;
    y[0] = 0;
    y[1] = 1;
    const std::vector<double> p = TiedValues(rng, 200, 20 + trial);
    EXPECT_NEAR(Auc(y, p), testing::BruteAuc(y, p), 1e-12);
  }
}

TEST(KendallTest, IdentityAndReversal) {
  std::vector<double> x(30);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  std::vector<double> r(x.rbegin(), x.rend());
  EXPECT_EQ(*KendallTauB(x, x), 1.0);
  EXPECT_EQ(*KendallTauB(x, r), -1.0);
}

TEST(KendallTest, MatchesPairClassification) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = trial == 0 ? 50 : 2 + trial * 3;
    const auto x = TiedValues(rng, n, 7);
    const auto y = TiedValues(rng, n, 5);
    const RankPairStats s = ComputeRankPairStats(x, y);
    const testing::BrutePairs b = testing::BruteClassifyPairs(x, y);
    EXPECT_EQ(s.concordant, b.c);
    EXPECT_EQ(s.discordant, b.d);
    EXPECT_EQ(s.ties_x, b.tx);
    EXPECT_EQ(s.ties_y, b.ty);
    EXPECT_EQ(s.ties_both, b.both);
    EXPECT_EQ(s.total(), static_cast<std::int64_t>(n * (n - 1) / 2));
    const auto tau = KendallTauB(x, y);
    const auto ref = testing::BruteTauB(x, y);
    ASSERT_EQ(tau.has_value(), ref.has_value());
    if (tau) {
      EXPECT_NEAR(*tau, *ref, 1e-12);
    }
  }
}

TEST(KendallTest, SymmetryAndAntisymmetry) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = TiedValues(rng, 40, 6);
    const auto y = TiedValues(rng, 40, 9);
    std::vector<double> neg(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) neg[i] = -y[i];
    EXPECT_NEAR(*KendallTauB(x, y), *KendallTauB(y, x), 1e-15);
    EXPECT_NEAR(*KendallTauB(x, neg), -*KendallTauB(x, y), 1e-15);
  }
}

TEST(KendallTest, UndefinedAndErrors) {
  const std::vector<double> c = {1, 1, 1}, x = {1, 2, 3};
  EXPECT_FALSE(KendallTauB(c, x).has_value());
  const std::vector<double> short_x = {1, 2};
  try {
    KendallTauB(short_x, x);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLengthMismatch);
  }
}

TEST(NdcgTest, Conventions) {
  const std::vector<double> ideal = {3, 2, 1, 0};
  EXPECT_EQ(NdcgAtK(ideal, 4), 1.0);
  const std::vector<double> zeros = {0, 0, 0};
  EXPECT_EQ(NdcgAtK(zeros, 2), 1.0);
}

TEST(NdcgTest, HandEvaluated) {
  // Relevances 1, 2, 3 shown in that order; the ideal order is 3, 2, 1.
  const double dcg = 1.0 / std::log2(2.0) + 3.0 / std::log2(3.0) + 7.0 / std::log2(4.0);
  const double idcg = 7.0 / std::log2(2.0) + 3.0 / std::log2(3.0) + 1.0 / std::log2(4.0);
  const std::vector<double> shown = {1, 2, 3};
  EXPECT_NEAR(NdcgAtK(shown, 3), dcg / idcg, 1e-12);
}

TEST(NdcgTest, MatchesDirectFormula) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 5 + trial % 40;
    auto rel = TiedValues(rng, n, 4);
    for (auto& r : rel) r *= 4;
    const auto scores = TiedValues(rng, n, 6);
    for (int k : {1, 3, 10, static_cast<int>(n)}) {
      EXPECT_NEAR(NdcgOfScores(rel, scores, k), testing::BruteNdcg(rel, scores, k), 1e-12);
    }
  }
}

TEST(NdcgTest, SwapIntoOrderNeverDecreases) {
  Rng rng(5);
  std::uniform_int_distribution<int> grade(0, 5);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> rel(12);
    for (auto& r : rel) r = grade(rng);
    std::uniform_int_distribution<std::size_t> pos(0, rel.size() - 1);
    std::size_t i = pos(rng), j = pos(rng);
    if (i > j) std::swap(i, j);
    if (rel[i] >= rel[j]) continue;
    std::vector<double> fixed = rel;
    std::swap(fixed[i], fixed[j]);
    for (int k = 1; k <= 12; ++k) EXPECT_GE(NdcgAtK(fixed, k), NdcgAtK(rel, k) - 1e-15);
  }
}

TEST(GradeTest, Endpoints) {
  EXPECT_EQ(RelevanceGrade(1, 2), 31);
  EXPECT_EQ(RelevanceGrade(2, 2), 15);
  for (std::size_t r = 1; r <= 32; ++r) EXPECT_EQ(RelevanceGrade(r, 32), 32 - static_cast<int>(r));
  const std::vector<double> losses = {0.5, 0.4, 0.6};
  EXPECT_EQ(GradesFromAscending(losses), (std::vector<double>{20, 31, 9}));
  const std::vector<double> tied = {0.4, 0.4, 0.4};
  const auto g = GradesFromAscending(tied);
  EXPECT_EQ(g[0], g[1]);
  EXPECT_EQ(g[1], g[2]);
}

TEST(SlidingWindowTest, Shapes) {
  std::vector<double> gt(100), rev(100);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    gt[i] = static_cast<double>(i);
    rev[i] = -static_cast<double>(i);
  }
  const auto same = SlidingWindowTau(gt, gt, 30);
  ASSERT_EQ(same.size(), 71u);
  EXPECT_EQ(same.front().center, 15u);
  EXPECT_EQ(same.back().center, 85u);
  for (const auto& w : same) EXPECT_EQ(*w.tau, 1.0);
  for (const auto& w : SlidingWindowTau(gt, rev, 30)) EXPECT_EQ(*w.tau, -1.0);
  try {
    SlidingWindowTau(std::span<const double>(gt.data(), 10), std::span<const double>(gt.data(), 10),
                     30);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kWindowTooLarge);
  }
}

TEST(SlidingWindowTest, SortsByGroundTruth) {
  // Unsorted input: windows follow ground-truth order, not input order.
  const std::vector<double> gt = {3, 1, 2, 0};
  const std::vector<double> est = {30, 10, 20, 0};
  const auto w = SlidingWindowTau(gt, est, 2);
  ASSERT_EQ(w.size(), 3u);
  for (const auto& x : w) EXPECT_EQ(*x.tau, 1.0);
}

}  // namespace
}  // namespace ctrnas

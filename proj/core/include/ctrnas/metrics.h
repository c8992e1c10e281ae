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

// Evaluation and rank-consistency metrics.

#ifndef CTRNAS_METRICS_H_
#define CTRNAS_METRICS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace ctrnas {

// Mean binary cross-entropy with p clamped to [1e-7, 1 - 1e-7].
double Logloss(std::span<const double> labels, std::span<const double> probs);

// Mann–Whitney AUC; tied predictions earn half credit. Throws kSingleClass
// when only one label value is present.
double Auc(std::span<const double> labels, std::span<const double> probs);

struct RankPairStats {
  std::int64_t concordant = 0;
  std::int64_t discordant = 0;
  std::int64_t ties_x = 0;     // tied in x only
  std::int64_t ties_y = 0;     // tied in y only
  std::int64_t ties_both = 0;

  std::int64_t total() const {
    return concordant + discordant + ties_x + ties_y + ties_both;
  }
};

// O(n log n) pair classification (Knight's algorithm).
RankPairStats ComputeRankPairStats(std::span<const double> x,
                                   std::span<const double> y);

// (P − Q) / sqrt((P + Q + T)(P + Q + U)). Returns nullopt when either factor
// of the denominator is zero. Throws kLengthMismatch for unequal lengths and
// kInvalidArgument for fewer than two points.
std::optional<double> KendallTauB(std::span<const double> x,
                                  std::span<const double> y);

// NDCG@k with exponential gain 2^rel − 1 and log2(i + 1) discount, given
// relevance grades listed in predicted order. An ideal DCG of zero yields 1.
double NdcgAtK(std::span<const double> relevance_in_predicted_order, int k);

// Orders items by descending score (ties by index) and returns NDCG@k of
// their relevance grades.
double NdcgOfScores(std::span<const double> relevance,
                    std::span<const double> scores, int k);

// Grade for the item at 1-based `rank` of `n`: floor(32(n − rank + 1)/n) − 1
// clipped to 0..31, so the best item gets 31, two items get (31, 15), and 32
// items get 31..0.
int RelevanceGrade(std::size_t rank, std::size_t n);

// 32-bucket grades of `values` ranked ascending (lowest value = rank 1);
// tied values share the smaller rank.
std::vector<double> GradesFromAscending(std::span<const double> values);

struct WindowTau {
  std::size_t center = 0;
  std::optional<double> tau;
};

// Sorts items by ground truth ascending (stable) and reports τ_b between the
// two score slices of every length-`window` run; center = start + window/2.
// Throws kWindowTooLarge when window exceeds the number of items.
std::vector<WindowTau> SlidingWindowTau(std::span<const double> ground_truth,
                                        std::span<const double> estimated,
                                        std::size_t window = 30);

}  // namespace ctrnas

#endif  // CTRNAS_METRICS_H_

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

#include "ctrnas/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ctrnas/error.h"

namespace ctrnas {
namespace {

constexpr double kClamp = 1e-7;

void CheckLengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorCode::kLengthMismatch,
                "lengths differ: " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

std::int64_t Pairs(std::int64_t t) { return t * (t - 1) / 2; }

// Counts inversions of `v` while merge-sorting it in place.
std::int64_t CountInversions(std::vector<double>& v, std::vector<double>& buf,
                             std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t inv = CountInversions(v, buf, lo, mid) + CountInversions(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += static_cast<std::int64_t>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
  return inv;
}

}  // namespace

double Logloss(std::span<const double> labels, std::span<const double> probs) {
  CheckLengths(labels.size(), probs.size());
  if (labels.empty()) throw Error(ErrorCode::kInvalidArgument, "empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0.0 && labels[i] != 1.0) {
      throw Error(ErrorCode::kLabelDomain, "label not in {0,1}");
    }
    const double p = std::clamp(probs[i], kClamp, 1.0 - kClamp);
    sum -= labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
  }
  return sum / static_cast<double>(labels.size());
}

double Auc(std::span<const double> labels, std::span<const double> probs) {
  CheckLengths(labels.size(), probs.size());
  const std::size_t n = labels.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return probs[a] < probs[b]; });
  // Sum of midranks of positives.
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && probs[order[j]] == probs[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] == 1.0) {
        rank_sum += midrank;
        ++n_pos;
      } else if (labels[order[t]] != 0.0) {
        throw Error(ErrorCode::kLabelDomain, "label not in {0,1}");
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw Error(ErrorCode::kSingleClass, "AUC needs both classes");
  }
  const double np = static_cast<double>(n_pos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

RankPairStats ComputeRankPairStats(std::span<const double> x,
                                   std::span<const double> y) {
  CheckLengths(x.size(), y.size());
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
  });

  std::int64_t n1 = 0;  // pairs tied in x
  std::int64_t n3 = 0;  // pairs tied in both
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && x[order[j]] == x[order[i]]) ++j;
    n1 += Pairs(static_cast<std::int64_t>(j - i));
    for (std::size_t a = i; a < j;) {
      std::size_t b = a;
      while (b < j && y[order[b]] == y[order[a]]) ++b;
      n3 += Pairs(static_cast<std::int64_t>(b - a));
      a = b;
    }
    i = j;
  }

  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  std::vector<double> buf(n);
  const std::int64_t swaps = CountInversions(ys, buf, 0, n);

  std::int64_t n2 = 0;  // pairs tied in y
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && ys[j] == ys[i]) ++j;
    n2 += Pairs(static_cast<std::int64_t>(j - i));
    i = j;
  }

  const std::int64_t n0 = Pairs(static_cast<std::int64_t>(n));
  RankPairStats s;
  s.ties_both = n3;
  s.ties_x = n1 - n3;
  s.ties_y = n2 - n3;
  s.discordant = swaps;
  s.concordant = n0 - n1 - n2 + n3 - swaps;
  return s;
}

std::optional<double> KendallTauB(std::span<const double> x,
                                  std::span<const double> y) {
  CheckLengths(x.size(), y.size());
  if (x.size() < 2) throw Error(ErrorCode::kInvalidArgument, "need at least two points");
  const RankPairStats s = ComputeRankPairStats(x, y);
  const double pq = static_cast<double>(s.concordant + s.discordant);
  const double dx = pq + static_cast<double>(s.ties_x);
  const double dy = pq + static_cast<double>(s.ties_y);
  if (dx == 0.0 || dy == 0.0) return std::nullopt;
  return static_cast<double>(s.concordant - s.discordant) / std::sqrt(dx * dy);
}

double NdcgAtK(std::span<const double> relevance_in_predicted_order, int k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  auto dcg = [k](std::span<const double> rel) {
    double sum = 0.0;
    const std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(k), rel.size());
    for (std::size_t i = 0; i < m; ++i) {
      sum += (std::exp2(rel[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    }
    return sum;
  };
  std::vector<double> ideal(relevance_in_predicted_order.begin(),
                            relevance_in_predicted_order.end());
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  const double idcg = dcg(ideal);
  if (idcg == 0.0) return 1.0;
  return dcg(relevance_in_predicted_order) / idcg;
}

double NdcgOfScores(std::span<const double> relevance,
                    std::span<const double> scores, int k) {
  CheckLengths(relevance.size(), scores.size());
  std::vector<std::size_t> order(relevance.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<double> rel(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) rel[i] = relevance[order[i]];
  return NdcgAtK(rel, k);
}

int RelevanceGrade(std::size_t rank, std::size_t n) {
  if (n == 0 || rank < 1 || rank > n) {
    throw Error(ErrorCode::kInvalidArgument, "rank outside 1..n");
  }
  const auto g = static_cast<int>((32 * (n - rank + 1)) / n) - 1;
  return std::clamp(g, 0, 31);
}

std::vector<double> GradesFromAscending(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> grades(values.size());
  std::size_t rank = 1;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (r > 0 && values[order[r]] != values[order[r - 1]]) rank = r + 1;
    grades[order[r]] = RelevanceGrade(rank, order.size());
  }
  return grades;
}

std::vector<WindowTau> SlidingWindowTau(std::span<const double> ground_truth,
                                        std::span<const double> estimated,
                                        std::size_t window) {
  CheckLengths(ground_truth.size(), estimated.size());
  const std::size_t n = ground_truth.size();
  if (window < 2) throw Error(ErrorCode::kInvalidArgument, "window must be >= 2");
  if (window > n) {
    throw Error(ErrorCode::kWindowTooLarge,
                "window " + std::to_string(window) + " exceeds " + std::to_string(n) + " items");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ground_truth[a] < ground_truth[b];
  });
  std::vector<double> gt(n), est(n);
  for (std::size_t i = 0; i < n; ++i) {
    gt[i] = ground_truth[order[i]];
    est[i] = estimated[order[i]];
  }
  std::vector<WindowTau> out;
  out.reserve(n - window + 1);
  for (std::size_t start = 0; start + window <= n; ++start) {
    out.push_back({start + window / 2,
                   KendallTauB(std::span(gt).subspan(start, window),
                               std::span(est).subspan(start, window))});
  }
  return out;
}

}  // namespace ctrnas

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

// Gradient-boosted regression trees over ArchVectors, trained either with
// LambdaRank pseudo-gradients (a ranking surrogate) or least squares.
//
// Trees grow leaf-wise: the leaf with the largest Newton gain
//   G_L²/H_L + G_R²/H_R − G²/H
// splits next, until max_leaves or no admissible split remains. Leaf values
// are Newton steps −G/H. Thresholds are midpoints between adjacent distinct
// coordinate values, and x[f] <= threshold goes left.

#ifndef CTRNAS_GUIDER_H_
#define CTRNAS_GUIDER_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctrnas/evaluator.h"
#include "ctrnas/search_space.h"

namespace ctrnas {

enum class GuiderMode { kRank, kRegression };

struct GuiderConfig {
  int max_rounds = 100;
  int max_leaves = 31;
  double shrinkage = 0.1;
  int min_leaf = 5;
  double holdout_fraction = 0.2;
  int patience = 10;
  int early_stop_k = 3;      // NDCG@k on the holdout (rank mode)
  int truncation_k = 10;     // |ΔNDCG@k| weights the pair gradients
  double sigma = 1.0;
  std::uint64_t seed = 0;

  nlohmann::json ToJson() const;
  static GuiderConfig FromJson(const nlohmann::json& j);
};

struct RegressionTree {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf output, before shrinkage
    double gain = 0.0;   // split gain, internal nodes only
  };
  std::vector<Node> nodes;  // nodes[0] is the root

  double Predict(std::span<const double> x) const;
};

struct GuiderModel {
  GuiderMode mode = GuiderMode::kRank;
  double shrinkage = 0.1;
  double base_score = 0.0;
  std::vector<RegressionTree> trees;
  std::array<double, kVectorLength> feature_gain{};
  // Best holdout metric seen during training (NDCG@k or −MSE), if a holdout
  // was used.
  std::optional<double> holdout_metric;

  // base_score + Σ shrinkage · tree(x).
  double Score(const ArchVector& x) const;
  std::vector<double> Score(std::span<const Architecture> archs) const;

  nlohmann::json ToJson() const;
  static GuiderModel FromJson(const nlohmann::json& j);
};

struct RankTrainingSet {
  std::vector<ArchVector> features;
  std::vector<double> relevance;  // grades in 0..31, higher = better
};

// Uses records with finite logloss. Grades follow 32 buckets of the
// ascending-logloss rank; tied losses share the smaller rank. Throws
// kTooFewRecords with fewer than two usable records.
RankTrainingSet MakeRelevance(std::span<const EvalRecord> records);

// Throws kDegenerateLabels when fewer than two distinct grades exist.
GuiderModel TrainRankGuider(const RankTrainingSet& set, const GuiderConfig& cfg);

// Least squares on target = −val_logloss.
GuiderModel TrainRegressionGuider(std::span<const EvalRecord> records,
                                  const GuiderConfig& cfg);
GuiderModel TrainRegressionGuider(std::span<const ArchVector> features,
                                  std::span<const double> targets,
                                  const GuiderConfig& cfg);

// "<block>_<segment>", e.g. "3_dp", "2_raw_sparse", "4_pred1", "5_units".
std::string CoordinateLabel(int coordinate);

struct Importance {
  int coordinate = 0;
  std::string label;
  double gain = 0.0;  // normalized
};

// Coordinates with positive gain, normalized to sum 1, sorted descending
// (ties by coordinate), truncated to top_k.
std::vector<Importance> FeatureImportance(const GuiderModel& model, int top_k);

// CSV "label,gain". Throws kIo.
void WriteImportanceCsv(const std::filesystem::path& path,
                        std::span<const Importance> rows);

}  // namespace ctrnas

#endif  // CTRNAS_GUIDER_H_

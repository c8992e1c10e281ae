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

// Trainable CTR network built from an Architecture.
//
// Wiring rules:
//  * A block's dense-side input is raw dense (if selected) followed by its
//    predecessors' outputs in index order. Its sparse-side input is one
//    embedding per sparse field (if selected).
//  * MLP: one ReLU layer over dense-side ∥ flattened sparse embeddings.
//  * FM / DP: the dense side is one vector, linearly projected to
//    embedding_dim when its width differs; each sparse embedding is used
//    as-is. FM emits Σ_{i<j} <e_i, e_j> (or the entry sum of a lone input).
//    DP emits <e_i, e_j> for i <= j in lexicographic order, or the
//    elementwise square when its only input is the dense side.
//  * The final linear layer reads every sink output, then raw dense if no
//    block consumed it, then every sparse embedding if no block consumed
//    sparse; a sigmoid gives the click probability.
//
// Networks are templated on the scalar: float for training throughput,
// double for gradient checks.

#ifndef CTRNAS_CTR_MODEL_H_
#define CTRNAS_CTR_MODEL_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "ctrnas/data.h"
#include "ctrnas/search_space.h"

namespace ctrnas {

struct BlockWiring {
  BlockType type = BlockType::kEmpty;
  bool raw_dense = false;
  bool raw_sparse = false;
  std::vector<int> preds;   // 0-based, ascending
  int dense_width = 0;      // raw dense + predecessor outputs
  int sparse_inputs = 0;    // embeddings consumed
  int input_width = 0;      // MLP fan-in
  bool project = false;     // FM/DP dense side aligned by a projection
  int interaction_inputs = 0;  // FM/DP vectors after alignment
  bool square_only = false;    // DP fed only by the dense side
  int output_width = 0;
};

struct Wiring {
  std::array<BlockWiring, kNumBlocks> blocks;
  std::vector<int> sinks;
  bool final_dense = false;
  bool final_sparse = false;
  int final_width = 0;
};

// Throws kInvalidArchitecture for invalid archs or blocks left without any
// input under `spec` (e.g. raw=dense with zero dense features).
Wiring ResolveWiring(const Architecture& arch, const FeatureSpec& spec);

template <typename Scalar>
using MatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct DenseLayer {
  MatrixT<Scalar> weight;  // out × in
  VectorT<Scalar> bias;    // out

  friend bool operator==(const DenseLayer& a, const DenseLayer& b) {
    return a.weight == b.weight && a.bias == b.bias;
  }
};

template <typename Scalar>
struct BlockParams {
  std::optional<DenseLayer<Scalar>> mlp;
  std::optional<DenseLayer<Scalar>> align;
};

template <typename Scalar>
struct Network {
  Architecture arch;
  FeatureSpec spec;
  Wiring wiring;
  // Per sparse field: effective_cardinality × embedding_dim.
  std::vector<MatrixT<Scalar>> embeddings;
  std::array<BlockParams<Scalar>, kNumBlocks> blocks;
  DenseLayer<Scalar> final_layer;  // 1 × final_width

  std::int64_t num_params() const;
  template <typename To>
  Network<To> Cast() const;
};

using TrainedModel = Network<float>;

struct Batch {
  DenseMatrix dense;
  IndexMatrix sparse;
  Eigen::VectorXd labels;

  Eigen::Index size() const { return labels.size(); }
};

Batch MakeBatch(const CtrDataset& data, std::span<const std::size_t> rows);
Batch MakeBatch(const CtrDataset& data);

// Embeddings ~ N(0, 0.01²); layer weights ~ U(±sqrt(6 / (fan_in + fan_out)));
// biases zero.
template <typename Scalar>
Network<Scalar> Build(const Architecture& arch, const FeatureSpec& spec, Rng& rng);

// Click probabilities, clamped to [kProbClamp, 1 − kProbClamp] like the loss.
template <typename Scalar>
VectorT<Scalar> Forward(const Network<Scalar>& model, const Batch& batch);

template <typename Scalar>
struct Gradients {
  struct EmbeddingGrad {
    std::vector<std::int32_t> rows;  // unique touched rows
    MatrixT<Scalar> values;          // rows.size() × embedding_dim
  };
  std::vector<EmbeddingGrad> embeddings;
  std::array<BlockParams<Scalar>, kNumBlocks> blocks;
  DenseLayer<Scalar> final_layer;
};

template <typename Scalar>
struct LossAndGrads {
  double loss = 0.0;
  Gradients<Scalar> grads;
};

inline constexpr double kProbClamp = 1e-7;

// Mean binary logloss with p clamped to [1e-7, 1 - 1e-7]. Clamped examples
// contribute zero gradient.
template <typename Scalar>
LossAndGrads<Scalar> ComputeLossAndGrads(const Network<Scalar>& model,
                                         const Batch& batch);

// Single-example block operators; the network runs batched equivalents.
Eigen::VectorXd MlpBlockForward(const Eigen::VectorXd& input,
                                const DenseLayer<double>& params);
double FmBlockForward(std::span<const Eigen::VectorXd> inputs);
Eigen::VectorXd DpBlockForward(std::span<const Eigen::VectorXd> inputs);

struct TrainConfig {
  int batch_size = 4096;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int max_epochs = 10;
  // Steps between validation passes; 0 = once per epoch.
  int eval_interval = 0;
  int patience = 2;
  std::uint64_t seed = 0;

  nlohmann::json ToJson() const;
  static TrainConfig FromJson(const nlohmann::json& j);
};

struct TrainHistoryEntry {
  int step = 0;
  int epoch = 0;
  double train_loss = 0.0;  // mean over steps since the previous evaluation
  double val_logloss = 0.0;
};

template <typename Scalar>
struct TrainResult {
  Network<Scalar> best;
  double best_val_logloss = 0.0;
  std::vector<TrainHistoryEntry> history;
};

// Adam with lazy embedding updates: only rows present in the batch move, and
// their moments are updated with the global step's bias correction. Throws
// kDivergence when the loss or a weight turns non-finite.
template <typename Scalar>
TrainResult<Scalar> Train(Network<Scalar> model, const CtrDataset& train,
                          const CtrDataset& val, const TrainConfig& config);

// Mean clamped logloss of `model` over `data`, evaluated in chunks.
template <typename Scalar>
double EvaluateLogloss(const Network<Scalar>& model, const CtrDataset& data);
template <typename Scalar>
Eigen::VectorXd PredictAll(const Network<Scalar>& model, const CtrDataset& data);

struct ComplexityReport {
  std::int64_t n_params = 0;
  std::int64_t flops = 0;
  std::array<std::int64_t, kNumBlocks> block_flops{};
  std::int64_t final_flops = 0;

  friend bool operator==(const ComplexityReport&, const ComplexityReport&) = default;
};

// FLOPs per example: a linear map in→out costs 2·in·out + out (bias), plus
// out for an activation (ReLU on MLP, sigmoid on the final layer). A width-d
// dot costs 2d−1. FM with k >= 2 inputs costs k(k−1)/2 dots plus
// k(k−1)/2 − 1 adds; a lone input costs d−1 adds. DP costs k(k+1)/2 dots, or
// d multiplies in the square-only case. Alignment projections have no
// activation. Embedding lookups are free. Parameters include embeddings.
ComplexityReport Complexity(const Architecture& arch, const FeatureSpec& spec);

// Checkpoint: {"arch", "spec", "params": [{"block": 1..7 | "final", "name",
// "shape": [r, c], "data": [...]}]}. Embeddings are written separately as
// {"fields": [{"name", "shape", "data"}]} so they can be injected elsewhere.
nlohmann::json FeatureSpecToJson(const FeatureSpec& spec);
FeatureSpec FeatureSpecFromJson(const nlohmann::json& j);
nlohmann::json CheckpointToJson(const TrainedModel& model);
nlohmann::json EmbeddingsToJson(const TrainedModel& model);
TrainedModel CheckpointFromJson(const nlohmann::json& params,
                                const nlohmann::json& embeddings);

}  // namespace ctrnas

#endif  // CTRNAS_CTR_MODEL_H_

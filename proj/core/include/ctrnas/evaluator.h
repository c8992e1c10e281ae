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

// Low-fidelity evaluation: subsample → hash → split → build (→ warm-start
// embeddings) → train → measure.

#ifndef CTRNAS_EVALUATOR_H_
#define CTRNAS_EVALUATOR_H_

#include <array>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctrnas/ctr_model.h"
#include "ctrnas/data.h"
#include "ctrnas/search_space.h"

namespace ctrnas {

enum class SubsampleMode { kHead, kRandom };

struct FidelityConfig {
  std::optional<std::size_t> subsample_rows;  // nullopt = all rows
  SubsampleMode subsample_mode = SubsampleMode::kHead;
  std::uint64_t subsample_seed = 0;
  std::optional<std::int64_t> hash_cap = 10000;
  bool warm_start = false;
  std::array<double, 3> split = {0.8, 0.1, 0.1};

  // Throws kInvalidArgument / kRowsExceedSize.
  void Check(std::size_t data_size) const;
  nlohmann::json ToJson() const;
  static FidelityConfig FromJson(const nlohmann::json& j);
};

// Throws kRowsExceedSize when rows > data.size().
CtrDataset Subsample(const CtrDataset& data, std::size_t rows,
                     SubsampleMode mode, std::uint64_t seed = 0);

// v ↦ v mod cap for every field whose cardinality exceeds cap.
CtrDataset HashSparse(const CtrDataset& data, std::int64_t cap);

struct DataSplits {
  CtrDataset train;
  CtrDataset val;
  CtrDataset test;
};

// Contiguous blocks in row order: the first ⌊train·N⌋ rows, then ⌊val·N⌋,
// then the rest. Throws kInvalidArgument if train or val would be empty.
DataSplits SplitPositional(const CtrDataset& data, const std::array<double, 3>& ratios);

using EmbeddingTables = std::vector<MatrixT<float>>;

// Trains the mlp_warmstart preset on `data` and keeps only its embeddings.
EmbeddingTables PretrainWarmEmbeddings(const CtrDataset& data,
                                       const TrainConfig& config,
                                       const std::array<double, 3>& ratios = {0.8, 0.1, 0.1});

// Throws kShapeMismatch unless every table matches the model's.
void InjectEmbeddings(TrainedModel& model, const EmbeddingTables& tables);

struct EvalRecord {
  Architecture arch;
  double val_logloss = std::numeric_limits<double>::infinity();
  double val_auc = 0.5;
  std::int64_t flops = 0;
  std::int64_t n_params = 0;
  std::int64_t birth_index = 0;  // 1-based, assigned by the log writer
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;  // set on failed records

  bool ok() const;  // finite logloss and not failed
};

// Runs the whole pipeline once. A diverged training run yields a failed
// record with val_logloss = +inf rather than an exception. AUC of a
// single-class validation split is reported as 0.5.
EvalRecord EvaluateArch(const Architecture& arch, const CtrDataset& data,
                        const FidelityConfig& fidelity, const TrainConfig& train_cfg,
                        const EmbeddingTables* warm_tables, std::uint64_t seed);

// Thread-safe evaluation backend. birth_index is left for the caller.
class ArchEvaluator {
 public:
  virtual ~ArchEvaluator() = default;
  virtual EvalRecord Evaluate(const Architecture& arch, std::uint64_t seed) const = 0;
  virtual nlohmann::json Describe() const = 0;
};

// Trains real networks. The pipeline up to the split (and the warm-start
// tables, pretrained on the hashed full dataset) is prepared once.
class TrainingEvaluator : public ArchEvaluator {
 public:
  TrainingEvaluator(const CtrDataset& data, FidelityConfig fidelity, TrainConfig train_cfg);

  EvalRecord Evaluate(const Architecture& arch, std::uint64_t seed) const override;
  nlohmann::json Describe() const override;

  const DataSplits& splits() const { return splits_; }
  const FeatureSpec& spec() const { return splits_.train.spec; }
  const EmbeddingTables* warm_tables() const { return warm_ ? &*warm_ : nullptr; }

 private:
  FidelityConfig fidelity_;
  TrainConfig train_cfg_;
  DataSplits splits_;
  std::optional<EmbeddingTables> warm_;
};

// Scores with ArchOracle; flops and params come from Complexity under
// OracleEvaluator::ReferenceSpec().
class OracleEvaluator : public ArchEvaluator {
 public:
  EvalRecord Evaluate(const Architecture& arch, std::uint64_t seed) const override;
  nlohmann::json Describe() const override;
  static FeatureSpec ReferenceSpec();
};

// Derives the evaluation seed of the n-th submission of a run.
std::uint64_t EvalSeed(std::uint64_t run_seed, std::uint64_t submission);

struct EvalJob {
  Architecture arch;
  std::uint64_t seed = 0;
  std::int64_t tag = 0;  // caller-defined, echoed back
};

struct EvalDone {
  EvalJob job;
  EvalRecord record;
  double seconds = 0.0;
};

// Fixed-size worker pool. Results arrive in completion order; with one
// worker that order equals submission order. Exceptions thrown by the
// evaluator become failed records.
class EvalPool {
 public:
  EvalPool(const ArchEvaluator& evaluator, int workers);
  ~EvalPool();
  EvalPool(const EvalPool&) = delete;
  EvalPool& operator=(const EvalPool&) = delete;

  void Submit(EvalJob job);
  // Blocks until a job completes. Throws kInvalidArgument if none in flight.
  EvalDone Next();
  int in_flight() const;
  int workers() const { return static_cast<int>(threads_.size()); }

 private:
  void Work();

  const ArchEvaluator& evaluator_;
  mutable std::mutex mu_;
  std::condition_variable job_cv_;
  std::condition_variable done_cv_;
  std::deque<EvalJob> jobs_;
  std::deque<EvalDone> done_;
  int in_flight_ = 0;
  bool stopping_ = false;
  std::vector<std::thread> threads_;
};

}  // namespace ctrnas

#endif  // CTRNAS_EVALUATOR_H_

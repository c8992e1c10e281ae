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

#include "ctrnas/evaluator.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "ctrnas/arch_oracle.h"
#include "ctrnas/error.h"
#include "ctrnas/metrics.h"

namespace ctrnas {

void FidelityConfig::Check(std::size_t data_size) const {
  const double sum = split[0] + split[1] + split[2];
  if (std::abs(sum - 1.0) > 1e-9 || split[0] <= 0 || split[1] <= 0 || split[2] < 0) {
    throw Error(ErrorCode::kInvalidArgument, "split ratios must be positive and sum to 1");
  }
  if (subsample_rows && *subsample_rows > data_size) {
    throw Error(ErrorCode::kRowsExceedSize,
                "subsample of " + std::to_string(*subsample_rows) + " rows exceeds " +
                    std::to_string(data_size));
  }
  if (hash_cap && *hash_cap < 1) {
    throw Error(ErrorCode::kInvalidArgument, "hash cap must be >= 1");
  }
}

nlohmann::json FidelityConfig::ToJson() const {
  nlohmann::json j;
  j["subsample_rows"] = subsample_rows ? nlohmann::json(*subsample_rows) : nlohmann::json("all");
  j["subsample_mode"] = subsample_mode == SubsampleMode::kHead ? "head" : "random";
  j["subsample_seed"] = subsample_seed;
  j["hash_cap"] = hash_cap ? nlohmann::json(*hash_cap) : nlohmann::json(nullptr);
  j["warm_start"] = warm_start;
  j["split"] = split;
  return j;
}

FidelityConfig FidelityConfig::FromJson(const nlohmann::json& j) {
  FidelityConfig f;
  if (j.contains("subsample_rows") && j["subsample_rows"].is_number()) {
    f.subsample_rows = j["subsample_rows"].get<std::size_t>();
  }
  const auto mode = j.value("subsample_mode", std::string("head"));
  if (mode != "head" && mode != "random") {
    throw Error(ErrorCode::kUnknownName, "subsample mode '" + mode + "'");
  }
  f.subsample_mode = mode == "head" ? SubsampleMode::kHead : SubsampleMode::kRandom;
  f.subsample_seed = j.value("subsample_seed", std::uint64_t{0});
  if (j.contains("hash_cap")) {
    f.hash_cap = j["hash_cap"].is_null() ? std::nullopt
                                         : std::optional(j["hash_cap"].get<std::int64_t>());
  }
  f.warm_start = j.value("warm_start", false);
  if (j.contains("split")) f.split = j["split"].get<std::array<double, 3>>();
  return f;
}

CtrDataset Subsample(const CtrDataset& data, std::size_t rows, SubsampleMode mode,
                     std::uint64_t seed) {
  if (rows > data.size()) {
    throw Error(ErrorCode::kRowsExceedSize, "subsample of " + std::to_string(rows) +
                                                " rows exceeds " + std::to_string(data.size()));
  }
  if (mode == SubsampleMode::kHead) return SliceRows(data, 0, rows);
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  // Partial Fisher–Yates; the chosen rows keep their original order.
  for (std::size_t i = 0; i < rows; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(rows);
  std::sort(idx.begin(), idx.end());
  return SelectRows(data, idx);
}

CtrDataset HashSparse(const CtrDataset& data, std::int64_t cap) {
  if (cap < 1) throw Error(ErrorCode::kInvalidArgument, "hash cap must be >= 1");
  CtrDataset out = data;
  for (int f = 0; f < out.spec.n_sparse(); ++f) {
    auto& field = out.spec.sparse_fields[f];
    if (field.cardinality <= cap) continue;
    field.hash_cap = cap;
    const auto c = static_cast<std::int32_t>(cap);
    for (Eigen::Index r = 0; r < out.sparse.rows(); ++r) out.sparse(r, f) %= c;
  }
  return out;
}

DataSplits SplitPositional(const CtrDataset& data, const std::array<double, 3>& ratios) {
  const std::size_t n = data.size();
  const auto n_train = static_cast<std::size_t>(std::floor(ratios[0] * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::floor(ratios[1] * static_cast<double>(n)));
  if (n_train == 0 || n_val == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "dataset of " + std::to_string(n) + " rows leaves an empty split");
  }
  return {SliceRows(data, 0, n_train), SliceRows(data, n_train, n_val),
          SliceRows(data, n_train + n_val, n - n_train - n_val)};
}

EmbeddingTables PretrainWarmEmbeddings(const CtrDataset& data, const TrainConfig& config,
                                       const std::array<double, 3>& ratios) {
  if (data.size() == 0) throw Error(ErrorCode::kInvalidArgument, "empty dataset");
  const DataSplits s = SplitPositional(data, ratios);
  Rng rng(config.seed);
  auto model = Build<float>(Preset(PresetName::kMlpWarmstart), data.spec, rng);
  auto result = Train(std::move(model), s.train, s.val, config);
  return std::move(result.best.embeddings);
}

void InjectEmbeddings(TrainedModel& model, const EmbeddingTables& tables) {
  if (tables.size() != model.embeddings.size()) {
    throw Error(ErrorCode::kShapeMismatch, "embedding table count mismatch");
  }
  for (std::size_t f = 0; f < tables.size(); ++f) {
    if (tables[f].rows() != model.embeddings[f].rows() ||
        tables[f].cols() != model.embeddings[f].cols()) {
      throw Error(ErrorCode::kShapeMismatch, "embedding table shape mismatch");
    }
    model.embeddings[f] = tables[f];
  }
}

bool EvalRecord::ok() const { return !failed && std::isfinite(val_logloss); }

namespace {

EvalRecord TrainAndMeasure(const Architecture& arch, const DataSplits& splits,
                           const TrainConfig& train_cfg, const EmbeddingTables* warm,
                           std::uint64_t seed) {
  EvalRecord rec;
  rec.arch = arch;
  rec.seed = seed;
  const ComplexityReport cx = Complexity(arch, splits.train.spec);
  rec.flops = cx.flops;
  rec.n_params = cx.n_params;
  Rng rng(seed);
  TrainedModel model = Build<float>(arch, splits.train.spec, rng);
  if (warm) InjectEmbeddings(model, *warm);
  TrainConfig cfg = train_cfg;
  cfg.seed = seed;
  try {
    auto result = Train(std::move(model), splits.train, splits.val, cfg);
    rec.val_logloss = result.best_val_logloss;
    const Eigen::VectorXd p = PredictAll(result.best, splits.val);
    const auto labels = std::span(splits.val.labels.data(), splits.val.size());
    try {
      rec.val_auc = Auc(labels, std::span(p.data(), static_cast<std::size_t>(p.size())));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kSingleClass) throw;
      rec.val_auc = 0.5;
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDivergence) throw;
    rec.failed = true;
    rec.error = e.what();
    rec.val_logloss = std::numeric_limits<double>::infinity();
  }
  return rec;
}

DataSplits Prepare(const CtrDataset& data, const FidelityConfig& fidelity) {
  fidelity.Check(data.size());
  CtrDataset d = fidelity.subsample_rows
                     ? Subsample(data, *fidelity.subsample_rows, fidelity.subsample_mode,
                                 fidelity.subsample_seed)
                     : data;
  if (fidelity.hash_cap) d = HashSparse(d, *fidelity.hash_cap);
  return SplitPositional(d, fidelity.split);
}

}  // namespace

EvalRecord EvaluateArch(const Architecture& arch, const CtrDataset& data,
                        const FidelityConfig& fidelity, const TrainConfig& train_cfg,
                        const EmbeddingTables* warm_tables, std::uint64_t seed) {
  return TrainAndMeasure(arch, Prepare(data, fidelity), train_cfg, warm_tables, seed);
}

TrainingEvaluator::TrainingEvaluator(const CtrDataset& data, FidelityConfig fidelity,
                                     TrainConfig train_cfg)
    : fidelity_(std::move(fidelity)),
      train_cfg_(train_cfg),
      splits_(Prepare(data, fidelity_)) {
  if (fidelity_.warm_start) {
    const CtrDataset full = fidelity_.hash_cap ? HashSparse(data, *fidelity_.hash_cap) : data;
    warm_ = PretrainWarmEmbeddings(full, train_cfg_, fidelity_.split);
  }
}

EvalRecord TrainingEvaluator::Evaluate(const Architecture& arch, std::uint64_t seed) const {
  return TrainAndMeasure(arch, splits_, train_cfg_, warm_tables(), seed);
}

nlohmann::json TrainingEvaluator::Describe() const {
  return {{"kind", "training"},
          {"fidelity", fidelity_.ToJson()},
          {"train", train_cfg_.ToJson()},
          {"rows", {{"train", splits_.train.size()},
                    {"val", splits_.val.size()},
                    {"test", splits_.test.size()}}}};
}

FeatureSpec OracleEvaluator::ReferenceSpec() {
  FeatureSpec spec;
  spec.n_dense = 13;
  for (int f = 0; f < 26; ++f) {
    spec.sparse_fields.push_back({"C" + std::to_string(f + 1), 10000, std::nullopt});
  }
  spec.embedding_dim = 16;
  return spec;
}

EvalRecord OracleEvaluator::Evaluate(const Architecture& arch, std::uint64_t seed) const {
  EvalRecord rec;
  rec.arch = arch;
  rec.seed = seed;
  rec.val_logloss = ArchOracle(arch);
  const ComplexityReport cx = Complexity(arch, ReferenceSpec());
  rec.flops = cx.flops;
  rec.n_params = cx.n_params;
  return rec;
}

nlohmann::json OracleEvaluator::Describe() const {
  return {{"kind", "oracle"}, {"reference_spec", FeatureSpecToJson(ReferenceSpec())}};
}

std::uint64_t EvalSeed(std::uint64_t run_seed, std::uint64_t submission) {
  // splitmix64 of the pair.
  std::uint64_t z = run_seed * 0x9E3779B97F4A7C15ull + submission + 0x632BE59BD9B4E019ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

EvalPool::EvalPool(const ArchEvaluator& evaluator, int workers) : evaluator_(evaluator) {
  if (workers < 1) throw Error(ErrorCode::kInvalidArgument, "workers must be >= 1");
  for (int i = 0; i < workers; ++i) threads_.emplace_back([this] { Work(); });
}

EvalPool::~EvalPool() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
    jobs_.clear();
  }
  job_cv_.notify_all();
  for (auto& t : threads_) t.join();
}

void EvalPool::Submit(EvalJob job) {
  {
    std::lock_guard lock(mu_);
    jobs_.push_back(std::move(job));
    ++in_flight_;
  }
  job_cv_.notify_one();
}

EvalDone EvalPool::Next() {
  std::unique_lock lock(mu_);
  if (in_flight_ == 0) throw Error(ErrorCode::kInvalidArgument, "no evaluation in flight");
  done_cv_.wait(lock, [this] { return !done_.empty(); });
  EvalDone d = std::move(done_.front());
  done_.pop_front();
  --in_flight_;
  return d;
}

int EvalPool::in_flight() const {
  std::lock_guard lock(mu_);
  return in_flight_;
}

void EvalPool::Work() {
  for (;;) {
    EvalJob job;
    {
      std::unique_lock lock(mu_);
      job_cv_.wait(lock, [this] { return stopping_ || !jobs_.empty(); });
      if (stopping_) return;
      job = std::move(jobs_.front());
      jobs_.pop_front();
    }
    const auto start = std::chrono::steady_clock::now();
    EvalRecord rec;
    try {
      rec = evaluator_.Evaluate(job.arch, job.seed);
    } catch (const std::exception& e) {
      rec.arch = job.arch;
      rec.seed = job.seed;
      rec.failed = true;
      rec.error = e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    {
      std::lock_guard lock(mu_);
      done_.push_back({std::move(job), std::move(rec), secs});
    }
    done_cv_.notify_one();
  }
}

}  // namespace ctrnas

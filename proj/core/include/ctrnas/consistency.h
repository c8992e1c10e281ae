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


// Rank consistency of low-fidelity estimates.
//
// Every architecture is trained at every (subsample size, strategy, seed)
// cell. The reference fidelity is the largest size under plain subsampling,
// with logloss averaged over seeds; each cell is compared with it through
// global Kendall τ_b (median over seeds), sliding-window τ_b along the
// reference order, and NDCG@k of the cell's ordering against 32-level
// grades of the reference ranks.

#ifndef CTRNAS_CONSISTENCY_H_
#define CTRNAS_CONSISTENCY_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctrnas/ctr_model.h"
#include "ctrnas/data.h"
#include "ctrnas/evaluator.h"
#include "ctrnas/metrics.h"
#include "ctrnas/search_space.h"

namespace ctrnas {

// kEs: subsampling only; kEsHash: plus hashing; kEsWarm: plus warm-started
// embeddings (no hashing).
enum class FidelityStrategy { kEs, kEsHash, kEsWarm };

std::string_view FidelityStrategyName(FidelityStrategy s);  // "es", "es+hash", "es+warm"
FidelityStrategy ParseFidelityStrategy(std::string_view name);  // throws kUnknownName

struct ConsistencyConfig {
  std::vector<std::size_t> sizes;
  std::vector<FidelityStrategy> strategies = {FidelityStrategy::kEs};
  std::vector<std::uint64_t> seeds = {0};
  std::size_t window = 30;
  std::int64_t hash_cap = 10000;
  SubsampleMode subsample_mode = SubsampleMode::kRandom;
  std::array<double, 3> split = {0.8, 0.1, 0.1};
  TrainConfig train;
  int workers = 1;

  void Check(std::size_t data_size, std::size_t n_archs) const;
  nlohmann::json ToJson() const;
};

FidelityConfig CellFidelity(const ConsistencyConfig& cfg, std::size_t size,
                            FidelityStrategy strategy, std::uint64_t seed);

struct ConsistencyCell {
  std::size_t size = 0;
  FidelityStrategy strategy = FidelityStrategy::kEs;
  // [seed][arch] validation logloss (+inf when failed).
  std::vector<std::vector<double>> logloss;
  std::vector<double> mean_logloss;       // over seeds; +inf if any failed
  std::vector<std::optional<double>> tau;  // per seed, on commonly valid archs
  std::optional<double> tau_median;
  std::size_t n_valid = 0;
  std::size_t n_failed = 0;
  std::vector<WindowTau> windows;  // mean logloss vs reference
  std::vector<double> ndcg;        // ndcg[k − 1] = NDCG@k
};

struct ConsistencyResult {
  std::vector<double> reference;  // seed-averaged, largest size, kEs
  std::vector<ConsistencyCell> cells;  // sizes outer, strategies inner
};

ConsistencyResult RankConsistencyExperiment(const std::vector<Architecture>& archs,
                                            const CtrDataset& data,
                                            const ConsistencyConfig& cfg);

// CSV headers:
//   global_tau.csv      size,strategy,tau_b,n_valid,n_failed
//   sliding_window.csv  size,strategy,center,tau_b
//   ndcg.csv            size,strategy,k,ndcg
void WriteGlobalTauCsv(const std::filesystem::path& path, const ConsistencyResult& r);
void WriteSlidingWindowCsv(const std::filesystem::path& path, const ConsistencyResult& r);
void WriteNdcgCsv(const std::filesystem::path& path, const ConsistencyResult& r);

// n distinct random architectures drawn under `constraint`.
std::vector<Architecture> SampleDistinctArchs(std::size_t n, std::uint64_t seed,
                                              bool allow_empty = true,
                                              const ArchConstraint& constraint = {});

}  // namespace ctrnas

#endif  // CTRNAS_CONSISTENCY_H_

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

#ifndef CTRNAS_DATA_H_
#define CTRNAS_DATA_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "ctrnas/search_space.h"

namespace ctrnas {

using DenseMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using IndexMatrix =
    Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Immutable after construction; shared read-only across evaluation workers.
struct CtrDataset {
  FeatureSpec spec;
  DenseMatrix dense;     // N × n_dense
  IndexMatrix sparse;    // N × n_sparse, ordinal codes
  Eigen::VectorXd labels;  // N, values in {0, 1}

  std::size_t size() const { return static_cast<std::size_t>(labels.size()); }
  // Throws kShapeMismatch / kOutOfRange / kLabelDomain.
  void Check() const;
};

CtrDataset SliceRows(const CtrDataset& data, std::size_t begin,
                     std::size_t count);
CtrDataset SelectRows(const CtrDataset& data,
                      std::span<const std::size_t> rows);

enum class ColumnRole { kDense, kSparse, kLabel, kIgnore };

// Column name → role; the JSON schema file is a flat object of the same shape,
// e.g. {"label": "label", "I1": "dense", "C1": "sparse", "id": "ignore"}.
struct CsvSchema {
  std::map<std::string, ColumnRole> roles;
  char delimiter = ',';
  int embedding_dim = 16;

  static CsvSchema FromJson(const nlohmann::json& j);
  static CsvSchema FromFile(const std::filesystem::path& path);
};

// Header row required; no quoting. Dense: missing → 0, then ln(1 + x) for
// x >= 0 (negative values pass through). Sparse: codes assigned by first
// appearance starting at 1, missing → 0. Labels must be 0 or 1.
CtrDataset LoadCsv(const std::filesystem::path& path, const CsvSchema& schema);

struct PlantedPair {
  int field_a = 0;
  int field_b = 1;
  double strength = 1.0;
};

// Generative recipe for a synthetic CTR dataset. Every category of every
// field draws a latent vector ~ N(0, latent_dim^-1/2 I); the click logit is
//   bias + dense_weights · x + Σ_pairs strength · <latent_a, latent_b> + ε
// with x ~ N(0, I) and ε ~ N(0, noise_sd²).
struct SyntheticRecipe {
  int n_dense = 4;
  std::vector<std::int64_t> cardinalities = {50, 50, 40, 40, 30, 30};
  int embedding_dim = 16;
  int latent_dim = 4;
  double bias = -0.8;
  double dense_weight_sd = 0.5;
  std::vector<PlantedPair> pairs = {{0, 1, 1.0}, {2, 3, 1.0}, {4, 5, 1.0}};
  double noise_sd = 0.0;

  nlohmann::json ToJson() const;
  static SyntheticRecipe FromJson(const nlohmann::json& j);
  FeatureSpec Spec() const;
};

// The generating parameters, exposed so tests can recompute true click
// probabilities.
struct SyntheticTruth {
  Eigen::VectorXd dense_weights;
  std::vector<Eigen::MatrixXd> latents;  // per field: cardinality × latent_dim
};

SyntheticTruth DrawSyntheticTruth(std::uint64_t seed,
                                  const SyntheticRecipe& recipe);
// Noise-free click logit of one row under `truth`.
double SyntheticLogit(const SyntheticRecipe& recipe, const SyntheticTruth& truth,
                      std::span<const double> dense,
                      std::span<const std::int32_t> sparse);

CtrDataset SyntheticCtr(std::uint64_t seed, std::size_t n_rows,
                        const SyntheticRecipe& recipe);

}  // namespace ctrnas

#endif  // CTRNAS_DATA_H_

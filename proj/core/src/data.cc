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

#include "ctrnas/data.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>

#include "ctrnas/error.h"

namespace ctrnas {

void CtrDataset::Check() const {
  const auto n = labels.size();
  if (dense.rows() != n || sparse.rows() != n) {
    throw Error(ErrorCode::kShapeMismatch, "dataset components disagree on row count");
  }
  if (dense.cols() != spec.n_dense || sparse.cols() != spec.n_sparse()) {
    throw Error(ErrorCode::kShapeMismatch, "dataset columns disagree with feature spec");
  }
  for (int f = 0; f < spec.n_sparse(); ++f) {
    const auto card = spec.sparse_fields[f].effective_cardinality();
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto v = sparse(r, f);
      if (v < 0 || v >= card) {
        throw Error(ErrorCode::kOutOfRange,
                    "row " + std::to_string(r) + " field '" +
                        spec.sparse_fields[f].name + "' code " + std::to_string(v) +
                        " outside [0, " + std::to_string(card) + ")");
      }
    }
  }
  for (Eigen::Index r = 0; r < n; ++r) {
    if (labels[r] != 0.0 && labels[r] != 1.0) {
      throw Error(ErrorCode::kLabelDomain, "row " + std::to_string(r) + " label not in {0,1}");
    }
  }
}

CtrDataset SliceRows(const CtrDataset& data, std::size_t begin,
                     std::size_t count) {
  if (begin + count > data.size()) {
    throw Error(ErrorCode::kRowsExceedSize, "slice exceeds dataset size");
  }
  const auto b = static_cast<Eigen::Index>(begin);
  const auto c = static_cast<Eigen::Index>(count);
  CtrDataset out;
  out.spec = data.spec;
  out.dense = data.dense.middleRows(b, c);
  out.sparse = data.sparse.middleRows(b, c);
  out.labels = data.labels.segment(b, c);
  return out;
}

CtrDataset SelectRows(const CtrDataset& data,
                      std::span<const std::size_t> rows) {
  CtrDataset out;
  out.spec = data.spec;
  const auto n = static_cast<Eigen::Index>(rows.size());
  out.dense.resize(n, data.dense.cols());
  out.sparse.resize(n, data.sparse.cols());
  out.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(rows[i]);
    if (rows[i] >= data.size()) {
      throw Error(ErrorCode::kOutOfRange, "row index out of range");
    }
    out.dense.row(i) = data.dense.row(r);
    out.sparse.row(i) = data.sparse.row(r);
    out.labels[i] = data.labels[r];
  }
  return out;
}

CsvSchema CsvSchema::FromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kParse, "schema must be a JSON object");
  CsvSchema schema;
  const nlohmann::json* columns = &j;
  if (j.contains("columns")) {
    columns = &j["columns"];
    if (j.contains("delimiter")) {
      const auto d = j["delimiter"].get<std::string>();
      schema.delimiter = d == "\\t" || d == "tab" ? '\t' : d.at(0);
    }
    schema.embedding_dim = j.value("embedding_dim", 16);
  }
  for (const auto& [name, role] : columns->items()) {
    const auto r = role.get<std::string>();
    if (r == "dense") schema.roles[name] = ColumnRole::kDense;
    else if (r == "sparse") schema.roles[name] = ColumnRole::kSparse;
    else if (r == "label") schema.roles[name] = ColumnRole::kLabel;
    else if (r == "ignore") schema.roles[name] = ColumnRole::kIgnore;
    else throw Error(ErrorCode::kParse, "column '" + name + "' has unknown role '" + r + "'");
  }
  return schema;
}

CsvSchema CsvSchema::FromFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open schema " + path.string());
  try {
    return FromJson(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, "schema " + path.string() + ": " + e.what());
  }
}

namespace {

std::vector<std::string_view> SplitLine(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

}  // namespace

CtrDataset LoadCsv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kParse, path.string() + ": missing header row");
  }
  const auto header = SplitLine(Trim(line), schema.delimiter);
  std::vector<ColumnRole> roles;
  std::vector<std::string> names;
  int label_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name(Trim(header[c]));
    auto it = schema.roles.find(name);
    if (it == schema.roles.end()) {
      throw Error(ErrorCode::kParse, "column '" + name + "' not covered by schema");
    }
    roles.push_back(it->second);
    names.push_back(name);
    if (it->second == ColumnRole::kLabel) {
      if (label_col >= 0) throw Error(ErrorCode::kParse, "schema has more than one label column");
      label_col = static_cast<int>(c);
    }
  }
  if (label_col < 0) throw Error(ErrorCode::kParse, "schema has no label column");

  std::vector<int> dense_cols, sparse_cols;
  for (std::size_t c = 0; c < roles.size(); ++c) {
    if (roles[c] == ColumnRole::kDense) dense_cols.push_back(static_cast<int>(c));
    if (roles[c] == ColumnRole::kSparse) sparse_cols.push_back(static_cast<int>(c));
  }

  std::vector<double> dense_values;
  std::vector<std::int32_t> sparse_values;
  std::vector<double> labels;
  std::vector<std::unordered_map<std::string, std::int32_t>> vocab(sparse_cols.size());

  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const auto trimmed = Trim(line);
    if (trimmed.empty()) continue;
    const auto cells = SplitLine(trimmed, schema.delimiter);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::kParse, path.string() + ": row " + std::to_string(row) +
                                         " has " + std::to_string(cells.size()) +
                                         " cells, header has " +
                                         std::to_string(header.size()));
    }
    for (int c : dense_cols) {
      const auto cell = Trim(cells[c]);
      double x = 0.0;
      if (!cell.empty()) {
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), x);
        if (ec != std::errc() || ptr != cell.data() + cell.size()) {
          throw Error(ErrorCode::kParse, path.string() + ": row " + std::to_string(row) +
                                             " column '" + names[c] +
                                             "': not a number '" + std::string(cell) + "'");
        }
      }
      dense_values.push_back(x >= 0.0 ? std::log1p(x) : x);
    }
    for (std::size_t k = 0; k < sparse_cols.size(); ++k) {
      const auto cell = Trim(cells[sparse_cols[k]]);
      if (cell.empty()) {
        sparse_values.push_back(0);
        continue;
      }
      auto [it, inserted] = vocab[k].try_emplace(
          std::string(cell), static_cast<std::int32_t>(vocab[k].size() + 1));
      sparse_values.push_back(it->second);
    }
    const auto lab = Trim(cells[label_col]);
    if (lab == "0") labels.push_back(0.0);
    else if (lab == "1") labels.push_back(1.0);
    else {
      throw Error(ErrorCode::kLabelDomain, path.string() + ": row " + std::to_string(row) +
                                               " label '" + std::string(lab) +
                                               "' not in {0,1}");
    }
  }

  CtrDataset data;
  data.spec.n_dense = static_cast<int>(dense_cols.size());
  data.spec.embedding_dim = schema.embedding_dim;
  for (std::size_t k = 0; k < sparse_cols.size(); ++k) {
    data.spec.sparse_fields.push_back(
        {names[sparse_cols[k]], static_cast<std::int64_t>(vocab[k].size() + 1), std::nullopt});
  }
  const auto n = static_cast<Eigen::Index>(labels.size());
  data.dense = Eigen::Map<DenseMatrix>(dense_values.data(), n,
                                       static_cast<Eigen::Index>(dense_cols.size()));
  data.sparse = Eigen::Map<IndexMatrix>(sparse_values.data(), n,
                                        static_cast<Eigen::Index>(sparse_cols.size()));
  data.labels = Eigen::Map<Eigen::VectorXd>(labels.data(), n);
  return data;
}

nlohmann::json SyntheticRecipe::ToJson() const {
  nlohmann::json pj = nlohmann::json::array();
  for (const auto& p : pairs) {
    pj.push_back({{"field_a", p.field_a}, {"field_b", p.field_b}, {"strength", p.strength}});
  }
  return {{"n_dense", n_dense},
          {"cardinalities", cardinalities},
          {"embedding_dim", embedding_dim},
          {"latent_dim", latent_dim},
          {"bias", bias},
          {"dense_weight_sd", dense_weight_sd},
          {"pairs", pj},
          {"noise_sd", noise_sd}};
}

SyntheticRecipe SyntheticRecipe::FromJson(const nlohmann::json& j) {
  SyntheticRecipe r;
  try {
    r.n_dense = j.value("n_dense", r.n_dense);
    if (j.contains("cardinalities")) {
      r.cardinalities = j["cardinalities"].get<std::vector<std::int64_t>>();
    }
    r.embedding_dim = j.value("embedding_dim", r.embedding_dim);
    r.latent_dim = j.value("latent_dim", r.latent_dim);
    r.bias = j.value("bias", r.bias);
    r.dense_weight_sd = j.value("dense_weight_sd", r.dense_weight_sd);
    r.noise_sd = j.value("noise_sd", r.noise_sd);
    if (j.contains("pairs")) {
      r.pairs.clear();
      for (const auto& p : j["pairs"]) {
        r.pairs.push_back({p.at("field_a").get<int>(), p.at("field_b").get<int>(),
                           p.value("strength", 1.0)});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("synthetic recipe: ") + e.what());
  }
  const int n_fields = static_cast<int>(r.cardinalities.size());
  for (const auto& p : r.pairs) {
    if (p.field_a < 0 || p.field_a >= n_fields || p.field_b < 0 || p.field_b >= n_fields) {
      throw Error(ErrorCode::kInvalidArgument, "planted pair references unknown field");
    }
  }
  return r;
}

FeatureSpec SyntheticRecipe::Spec() const {
  FeatureSpec spec;
  spec.n_dense = n_dense;
  spec.embedding_dim = embedding_dim;
  for (std::size_t f = 0; f < cardinalities.size(); ++f) {
    spec.sparse_fields.push_back({"C" + std::to_string(f + 1), cardinalities[f], std::nullopt});
  }
  return spec;
}

SyntheticTruth DrawSyntheticTruth(std::uint64_t seed,
                                  const SyntheticRecipe& recipe) {
  Rng rng(seed);
  SyntheticTruth truth;
  std::normal_distribution<double> wdist(0.0, recipe.dense_weight_sd);
  truth.dense_weights.resize(recipe.n_dense);
  for (int k = 0; k < recipe.n_dense; ++k) truth.dense_weights[k] = wdist(rng);
  const double latent_sd = std::pow(static_cast<double>(recipe.latent_dim), -0.25);
  std::normal_distribution<double> ldist(0.0, latent_sd);
  for (auto card : recipe.cardinalities) {
    Eigen::MatrixXd lat(card, recipe.latent_dim);
    for (Eigen::Index r = 0; r < lat.rows(); ++r) {
      for (Eigen::Index c = 0; c < lat.cols(); ++c) lat(r, c) = ldist(rng);
    }
    truth.latents.push_back(std::move(lat));
  }
  return truth;
}

double SyntheticLogit(const SyntheticRecipe& recipe, const SyntheticTruth& truth,
                      std::span<const double> dense,
                      std::span<const std::int32_t> sparse) {
  double z = recipe.bias;
  for (int k = 0; k < recipe.n_dense; ++k) z += truth.dense_weights[k] * dense[k];
  for (const auto& p : recipe.pairs) {
    z += p.strength * truth.latents[p.field_a].row(sparse[p.field_a]).dot(
                          truth.latents[p.field_b].row(sparse[p.field_b]));
  }
  return z;
}

CtrDataset SyntheticCtr(std::uint64_t seed, std::size_t n_rows,
                        const SyntheticRecipe& recipe) {
  if (n_rows < 1) throw Error(ErrorCode::kInvalidArgument, "n_rows must be >= 1");
  const SyntheticTruth truth = DrawSyntheticTruth(seed, recipe);
  Rng rng(seed ^ 0x9E3779B97F4A7C15ULL);
  std::normal_distribution<double> xdist(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, recipe.noise_sd > 0 ? recipe.noise_sd : 1.0);
  std::uniform_real_distribution<double> udist(0.0, 1.0);

  CtrDataset data;
  data.spec = recipe.Spec();
  const auto n = static_cast<Eigen::Index>(n_rows);
  const auto n_fields = static_cast<Eigen::Index>(recipe.cardinalities.size());
  data.dense.resize(n, recipe.n_dense);
  data.sparse.resize(n, n_fields);
  data.labels.resize(n);
  std::vector<std::uniform_int_distribution<std::int32_t>> cdist;
  for (auto card : recipe.cardinalities) {
    cdist.emplace_back(0, static_cast<std::int32_t>(card - 1));
  }
  for (Eigen::Index r = 0; r < n; ++r) {
    for (int k = 0; k < recipe.n_dense; ++k) data.dense(r, k) = xdist(rng);
    for (Eigen::Index f = 0; f < n_fields; ++f) data.sparse(r, f) = cdist[f](rng);
    double z = SyntheticLogit(
        recipe, truth,
        std::span<const double>(data.dense.row(r).data(), recipe.n_dense),
        std::span<const std::int32_t>(data.sparse.row(r).data(), n_fields));
    if (recipe.noise_sd > 0) z += noise(rng);
    const double p = 1.0 / (1.0 + std::exp(-z));
    data.labels[r] = udist(rng) < p ? 1.0 : 0.0;
  }
  return data;
}

}  // namespace ctrnas

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


// Independent model oracles shared by unit and acceptance tests: a per-example
// reference forward pass and a central finite-difference gradient check.

#ifndef CTRNAS_TESTS_MODEL_ORACLES_H_
#define CTRNAS_TESTS_MODEL_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ctrnas/ctr_model.h"
#include "ctrnas/data.h"

namespace ctrnas::testing {

using Vec = std::vector<double>;

inline Vec NaiveAffine(const DenseLayer<double>& layer, const Vec& x, bool relu) {
  Vec y(layer.weight.rows());
  for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
    double s = layer.bias(r);
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) s += layer.weight(r, c) * x[c];
    y[r] = relu ? std::max(0.0, s) : s;
  }
  return y;
}

inline double Dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Click probability of one example, walking the DAG block by block.
inline double ReferenceForward(const Network<double>& m, const Batch& batch, Eigen::Index row) {
  const Wiring& w = m.wiring;
  const int dim = m.spec.embedding_dim;
  std::vector<Vec> emb;
  for (int f = 0; f < m.spec.n_sparse(); ++f) {
    Vec e(dim);
    for (int d = 0; d < dim; ++d) e[d] = m.embeddings[f](batch.sparse(row, f), d);
    emb.push_back(e);
  }
  Vec raw_dense(m.spec.n_dense);
  for (int d = 0; d < m.spec.n_dense; ++d) raw_dense[d] = batch.dense(row, d);

  std::vector<Vec> out(kNumBlocks);
  for (int i = 0; i < kNumBlocks; ++i) {
    const BlockWiring& bw = w.blocks[i];
    if (bw.type == BlockType::kEmpty) continue;
    Vec dense_side;
    if (bw.raw_dense) dense_side = raw_dense;
    for (int j : bw.preds) dense_side.insert(dense_side.end(), out[j].begin(), out[j].end());
    if (bw.type == BlockType::kMlp) {
      Vec in = dense_side;
      if (bw.raw_sparse) {
        for (const auto& e : emb) in.insert(in.end(), e.begin(), e.end());
      }
      out[i] = NaiveAffine(*m.blocks[i].mlp, in, true);
      continue;
    }
    std::vector<Vec> vecs;
    if (!dense_side.empty()) {
      vecs.push_back(m.blocks[i].align ? NaiveAffine(*m.blocks[i].align, dense_side, false)
                                       : dense_side);
    }
    if (bw.raw_sparse) vecs.insert(vecs.end(), emb.begin(), emb.end());
    const std::size_t k = vecs.size();
    if (bw.type == BlockType::kFm) {
      double s = 0.0;
      if (k == 1) {
        for (double v : vecs[0]) s += v;
      } else {
        for (std::size_t a = 0; a < k; ++a) {
          for (std::size_t b = a + 1; b < k; ++b) s += Dot(vecs[a], vecs[b]);
        }
      }
      out[i] = {s};
    } else if (bw.square_only) {
      for (double v : vecs[0]) out[i].push_back(v * v);
    } else {
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a; b < k; ++b) out[i].push_back(Dot(vecs[a], vecs[b]));
      }
    }
  }
  Vec final_in;
  for (int s : w.sinks) final_in.insert(final_in.end(), out[s].begin(), out[s].end());
  if (w.final_dense) final_in.insert(final_in.end(), raw_dense.begin(), raw_dense.end());
  if (w.final_sparse) {
    for (const auto& e : emb) final_in.insert(final_in.end(), e.begin(), e.end());
  }
  const double logit = NaiveAffine(m.final_layer, final_in, false)[0];
  return 1.0 / (1.0 + std::exp(-logit));
}

struct GradCheckResult {
  double worst_rel_error = 0.0;
  std::string worst_tensor;
  int tensors = 0;
};

// Relative error ‖a − n‖ / max(‖a‖ + ‖n‖, 1e-10) per parameter tensor, with
// n from central differences of the mean loss at step eps.
inline GradCheckResult CheckGradients(Network<double> model, const Batch& batch,
                                      double eps = 1e-4) {
  const auto analytic = ComputeLossAndGrads(model, batch).grads;
  GradCheckResult result;
  auto check = [&](const std::string& name, auto& param, const auto& grad) {
    double diff = 0.0, norm_a = 0.0, norm_n = 0.0;
    for (Eigen::Index i = 0; i < param.size(); ++i) {
      const double saved = param.data()[i];
      param.data()[i] = saved + eps;
      const double up = ComputeLossAndGrads(model, batch).loss;
      param.data()[i] = saved - eps;
      const double down = ComputeLossAndGrads(model, batch).loss;
      param.data()[i] = saved;
      const double numeric = (up - down) / (2 * eps);
      const double a = grad(i);
      diff += (a - numeric) * (a - numeric);
      norm_a += a * a;
      norm_n += numeric * numeric;
    }
    const double rel = std::sqrt(diff) / std::max(std::sqrt(norm_a) + std::sqrt(norm_n), 1e-10);
    ++result.tensors;
    if (rel >= result.worst_rel_error) {
      result.worst_rel_error = rel;
      result.worst_tensor = name;
    }
  };
  auto layer = [&](const std::string& name, DenseLayer<double>& p, const DenseLayer<double>& g) {
    check(name + ".weight", p.weight, [&](Eigen::Index i) { return g.weight.data()[i]; });
    check(name + ".bias", p.bias, [&](Eigen::Index i) { return g.bias.data()[i]; });
  };
  for (int i = 0; i < kNumBlocks; ++i) {
    if (model.blocks[i].mlp) {
      layer("mlp" + std::to_string(i), *model.blocks[i].mlp, *analytic.blocks[i].mlp);
    }
    if (model.blocks[i].align) {
      layer("align" + std::to_string(i), *model.blocks[i].align, *analytic.blocks[i].align);
    }
  }
  layer("final", model.final_layer, analytic.final_layer);
  for (std::size_t f = 0; f < model.embeddings.size(); ++f) {
    auto& table = model.embeddings[f];
    // Dense view of the sparse gradient; untouched rows must be zero.
    MatrixT<double> dense_grad = MatrixT<double>::Zero(table.rows(), table.cols());
    if (f < analytic.embeddings.size()) {
      const auto& eg = analytic.embeddings[f];
      for (std::size_t r = 0; r < eg.rows.size(); ++r) dense_grad.row(eg.rows[r]) = eg.values.row(r);
    }
    check("embedding" + std::to_string(f), table,
          [&](Eigen::Index i) { return dense_grad.data()[i]; });
  }
  return result;
}

struct LogisticFit {
  Eigen::VectorXd weights;  // intercept first
  double Logloss(const CtrDataset& d) const {
    const Eigen::ArrayXd z = (d.dense * weights.tail(weights.size() - 1)).array() + weights(0);
    const Eigen::ArrayXd p = 1.0 / (1.0 + (-z).exp());
    const Eigen::ArrayXd y = d.labels.array();
    return -(y * p.log() + (1 - y) * (1 - p).log()).mean();
  }
};

// Maximum-likelihood logistic regression on the dense features plus an
// intercept, by Newton's method.
inline LogisticFit FitDenseLogistic(const CtrDataset& d, int iterations = 30) {
  const Eigen::Index n = d.dense.rows(), k = d.dense.cols() + 1;
  Eigen::MatrixXd x(n, k);
  x.col(0).setOnes();
  x.rightCols(k - 1) = d.dense;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(k);
  for (int it = 0; it < iterations; ++it) {
    const Eigen::ArrayXd p = 1.0 / (1.0 + (-(x * w)).array().exp());
    const Eigen::VectorXd g = x.transpose() * (p.matrix() - d.labels);
    const Eigen::MatrixXd h = x.transpose() * (p * (1 - p)).matrix().asDiagonal() * x;
    w -= h.ldlt().solve(g);
  }
  return {w};
}

}  // namespace ctrnas::testing

#endif  // CTRNAS_TESTS_MODEL_ORACLES_H_

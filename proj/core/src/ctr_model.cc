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

#include "ctrnas/ctr_model.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_map>

#include "ctrnas/error.h"

namespace ctrnas {

Wiring ResolveWiring(const Architecture& arch, const FeatureSpec& spec) {
  const auto violations = Validate(arch);
  if (!violations.empty()) {
    throw Error(ErrorCode::kInvalidArchitecture, violations.front());
  }
  const int dim = spec.embedding_dim;
  Wiring w;
  for (int i = 0; i < kNumBlocks; ++i) {
    const BlockSpec& b = arch.blocks[i];
    BlockWiring& bw = w.blocks[i];
    bw.type = b.type;
    if (b.empty()) continue;
    bw.raw_dense = UsesDense(b.raw) && spec.n_dense > 0;
    bw.raw_sparse = UsesSparse(b.raw) && spec.n_sparse() > 0;
    bw.dense_width = bw.raw_dense ? spec.n_dense : 0;
    for (int j = 0; j < i; ++j) {
      if (b.has_pred(j)) {
        bw.preds.push_back(j);
        bw.dense_width += w.blocks[j].output_width;
      }
    }
    bw.sparse_inputs = bw.raw_sparse ? spec.n_sparse() : 0;
    if (bw.dense_width == 0 && bw.sparse_inputs == 0) {
      throw Error(ErrorCode::kInvalidArchitecture,
                  "block " + std::to_string(i + 1) +
                      " has no inputs under the feature spec");
    }
    switch (b.type) {
      case BlockType::kMlp:
        bw.input_width = bw.dense_width + bw.sparse_inputs * dim;
        bw.output_width = b.units;
        break;
      case BlockType::kFm:
      case BlockType::kDp: {
        bw.project = bw.dense_width > 0 && bw.dense_width != dim;
        bw.interaction_inputs = (bw.dense_width > 0 ? 1 : 0) + bw.sparse_inputs;
        if (b.type == BlockType::kFm) {
          bw.output_width = 1;
        } else {
          bw.square_only = bw.sparse_inputs == 0;
          const int k = bw.interaction_inputs;
          bw.output_width = bw.square_only ? dim : k * (k + 1) / 2;
        }
        break;
      }
      case BlockType::kEmpty:
        break;
    }
  }
  for (int i = 0; i < kNumBlocks; ++i) {
    if (arch.is_sink(i)) {
      w.sinks.push_back(i);
      w.final_width += w.blocks[i].output_width;
    }
  }
  w.final_dense = spec.n_dense > 0 && !arch.dense_consumed();
  w.final_sparse = spec.n_sparse() > 0 && !arch.sparse_consumed();
  if (w.final_dense) w.final_width += spec.n_dense;
  if (w.final_sparse) w.final_width += spec.n_sparse() * dim;
  return w;
}

template <typename Scalar>
std::int64_t Network<Scalar>::num_params() const {
  std::int64_t n = 0;
  for (const auto& e : embeddings) n += e.size();
  for (const auto& b : blocks) {
    if (b.mlp) n += b.mlp->weight.size() + b.mlp->bias.size();
    if (b.align) n += b.align->weight.size() + b.align->bias.size();
  }
  n += final_layer.weight.size() + final_layer.bias.size();
  return n;
}

namespace {

template <typename To, typename From>
DenseLayer<To> CastLayer(const DenseLayer<From>& l) {
  return {l.weight.template cast<To>(), l.bias.template cast<To>()};
}

}  // namespace

template <typename Scalar>
template <typename To>
Network<To> Network<Scalar>::Cast() const {
  Network<To> out;
  out.arch = arch;
  out.spec = spec;
  out.wiring = wiring;
  for (const auto& e : embeddings) out.embeddings.push_back(e.template cast<To>());
  for (int i = 0; i < kNumBlocks; ++i) {
    if (blocks[i].mlp) out.blocks[i].mlp = CastLayer<To>(*blocks[i].mlp);
    if (blocks[i].align) out.blocks[i].align = CastLayer<To>(*blocks[i].align);
  }
  out.final_layer = CastLayer<To>(final_layer);
  return out;
}

Batch MakeBatch(const CtrDataset& data, std::span<const std::size_t> rows) {
  Batch b;
  const auto n = static_cast<Eigen::Index>(rows.size());
  b.dense.resize(n, data.dense.cols());
  b.sparse.resize(n, data.sparse.cols());
  b.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(rows[i]);
    b.dense.row(i) = data.dense.row(r);
    b.sparse.row(i) = data.sparse.row(r);
    b.labels[i] = data.labels[r];
  }
  return b;
}

Batch MakeBatch(const CtrDataset& data) {
  return Batch{data.dense, data.sparse, data.labels};
}

namespace {

template <typename Scalar>
DenseLayer<Scalar> XavierLayer(int in, int out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  DenseLayer<Scalar> l;
  l.weight.resize(out, in);
  for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      l.weight(r, c) = static_cast<Scalar>(dist(rng));
    }
  }
  l.bias = VectorT<Scalar>::Zero(out);
  return l;
}

}  // namespace

template <typename Scalar>
Network<Scalar> Build(const Architecture& arch, const FeatureSpec& spec, Rng& rng) {
  spec.Check();
  Network<Scalar> m;
  m.arch = arch;
  m.spec = spec;
  m.wiring = ResolveWiring(arch, spec);
  const int dim = spec.embedding_dim;
  std::normal_distribution<double> emb_dist(0.0, 0.01);
  for (const auto& f : spec.sparse_fields) {
    MatrixT<Scalar> table(f.effective_cardinality(), dim);
    for (Eigen::Index c = 0; c < table.cols(); ++c) {
      for (Eigen::Index r = 0; r < table.rows(); ++r) {
        table(r, c) = static_cast<Scalar>(emb_dist(rng));
      }
    }
    m.embeddings.push_back(std::move(table));
  }
  for (int i = 0; i < kNumBlocks; ++i) {
    const BlockWiring& bw = m.wiring.blocks[i];
    if (bw.type == BlockType::kEmpty) continue;
    if (bw.project) m.blocks[i].align = XavierLayer<Scalar>(bw.dense_width, dim, rng);
    if (bw.type == BlockType::kMlp) {
      m.blocks[i].mlp = XavierLayer<Scalar>(bw.input_width, bw.output_width, rng);
    }
  }
  m.final_layer = XavierLayer<Scalar>(m.wiring.final_width, 1, rng);
  return m;
}

namespace {

template <typename Scalar>
struct Tape {
  MatrixT<Scalar> dense;  // b × n_dense
  MatrixT<Scalar> emb;    // b × n_sparse·dim
  std::array<MatrixT<Scalar>, kNumBlocks> dense_in;
  std::array<MatrixT<Scalar>, kNumBlocks> mlp_in;
  std::array<MatrixT<Scalar>, kNumBlocks> pre;      // MLP pre-activation
  std::array<MatrixT<Scalar>, kNumBlocks> aligned;  // FM/DP dense side
  std::array<MatrixT<Scalar>, kNumBlocks> out;
  MatrixT<Scalar> final_in;
  Eigen::VectorXd logit;
};

template <typename Scalar>
void CheckBatch(const Network<Scalar>& model, const Batch& batch) {
  const auto b = batch.labels.size();
  if (b < 1 || batch.dense.rows() != b || batch.sparse.rows() != b) {
    throw Error(ErrorCode::kShapeMismatch, "batch components disagree on size");
  }
  if (batch.dense.cols() != model.spec.n_dense ||
      batch.sparse.cols() != model.spec.n_sparse()) {
    throw Error(ErrorCode::kShapeMismatch, "batch columns disagree with feature spec");
  }
  for (int f = 0; f < model.spec.n_sparse(); ++f) {
    const auto card = model.embeddings[f].rows();
    for (Eigen::Index r = 0; r < b; ++r) {
      const auto v = batch.sparse(r, f);
      if (v < 0 || v >= card) {
        throw Error(ErrorCode::kOutOfRange,
                    "sparse code " + std::to_string(v) + " in field '" +
                        model.spec.sparse_fields[f].name + "' outside [0, " +
                        std::to_string(card) + ")");
      }
    }
  }
}

// Interaction inputs of an FM/DP block: aligned dense side first (if any),
// then one embedding per sparse field.
template <typename Scalar>
std::vector<MatrixT<Scalar>> InteractionInputs(const Tape<Scalar>& t,
                                               const BlockWiring& bw, int i,
                                               int dim) {
  std::vector<MatrixT<Scalar>> in;
  if (bw.dense_width > 0) in.push_back(t.aligned[i]);
  for (int f = 0; f < bw.sparse_inputs; ++f) {
    in.push_back(t.emb.middleCols(f * dim, dim));
  }
  return in;
}

template <typename Scalar>
void RunForward(const Network<Scalar>& model, const Batch& batch, Tape<Scalar>& t) {
  CheckBatch(model, batch);
  const Eigen::Index b = batch.size();
  const int dim = model.spec.embedding_dim;
  const int n_sparse = model.spec.n_sparse();
  t.dense = batch.dense.template cast<Scalar>();
  t.emb.resize(b, static_cast<Eigen::Index>(n_sparse) * dim);
  for (int f = 0; f < n_sparse; ++f) {
    for (Eigen::Index r = 0; r < b; ++r) {
      t.emb.block(r, f * dim, 1, dim) = model.embeddings[f].row(batch.sparse(r, f));
    }
  }

  for (int i = 0; i < kNumBlocks; ++i) {
    const BlockWiring& bw = model.wiring.blocks[i];
    if (bw.type == BlockType::kEmpty) continue;
    MatrixT<Scalar>& xd = t.dense_in[i];
    xd.resize(b, bw.dense_width);
    Eigen::Index col = 0;
    if (bw.raw_dense) {
      xd.leftCols(model.spec.n_dense) = t.dense;
      col = model.spec.n_dense;
    }
    for (int j : bw.preds) {
      const auto w = t.out[j].cols();
      xd.middleCols(col, w) = t.out[j];
      col += w;
    }

    if (bw.type == BlockType::kMlp) {
      MatrixT<Scalar>& in = t.mlp_in[i];
      in.resize(b, bw.input_width);
      in.leftCols(bw.dense_width) = xd;
      if (bw.sparse_inputs > 0) in.rightCols(t.emb.cols()) = t.emb;
      const auto& layer = *model.blocks[i].mlp;
      t.pre[i] = in * layer.weight.transpose();
      t.pre[i].rowwise() += layer.bias.transpose();
      t.out[i] = t.pre[i].cwiseMax(Scalar(0));
      continue;
    }

    if (bw.dense_width > 0) {
      if (bw.project) {
        const auto& layer = *model.blocks[i].align;
        t.aligned[i] = xd * layer.weight.transpose();
        t.aligned[i].rowwise() += layer.bias.transpose();
      } else {
        t.aligned[i] = xd;
      }
    }
    const auto inputs = InteractionInputs(t, bw, i, dim);
    const int k = static_cast<int>(inputs.size());
    if (bw.type == BlockType::kFm) {
      if (k == 1) {
        t.out[i] = inputs[0].rowwise().sum();
      } else {
        MatrixT<Scalar> sum = inputs[0];
        VectorT<Scalar> self = inputs[0].rowwise().squaredNorm();
        for (int a = 1; a < k; ++a) {
          sum += inputs[a];
          self += inputs[a].rowwise().squaredNorm();
        }
        t.out[i] = (Scalar(0.5) * (sum.rowwise().squaredNorm() - self));
      }
    } else if (bw.square_only) {
      t.out[i] = inputs[0].cwiseProduct(inputs[0]);
    } else {
      t.out[i].resize(b, bw.output_width);
      int c = 0;
      for (int a = 0; a < k; ++a) {
        for (int d = a; d < k; ++d) {
          t.out[i].col(c++) = inputs[a].cwiseProduct(inputs[d]).rowwise().sum();
        }
      }
    }
  }

  t.final_in.resize(b, model.wiring.final_width);
  Eigen::Index col = 0;
  for (int s : model.wiring.sinks) {
    const auto w = t.out[s].cols();
    t.final_in.middleCols(col, w) = t.out[s];
    col += w;
  }
  if (model.wiring.final_dense) {
    t.final_in.middleCols(col, model.spec.n_dense) = t.dense;
    col += model.spec.n_dense;
  }
  if (model.wiring.final_sparse) {
    t.final_in.middleCols(col, t.emb.cols()) = t.emb;
  }
  const VectorT<Scalar> z =
      (t.final_in * model.final_layer.weight.transpose()).col(0).array() +
      model.final_layer.bias[0];
  t.logit = z.template cast<double>();
}

double Sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Reported probabilities share the loss clamp, so they stay inside (0, 1).
double ClampedSigmoid(double z) {
  return std::clamp(Sigmoid(z), kProbClamp, 1.0 - kProbClamp);
}

}  // namespace

template <typename Scalar>
VectorT<Scalar> Forward(const Network<Scalar>& model, const Batch& batch) {
  Tape<Scalar> t;
  RunForward(model, batch, t);
  return t.logit.unaryExpr([](double z) { return ClampedSigmoid(z); }).template cast<Scalar>();
}

namespace {

template <typename Scalar>
void AccumulateLayerGrad(std::optional<DenseLayer<Scalar>>& slot,
                         const MatrixT<Scalar>& dz, const MatrixT<Scalar>& in) {
  slot = DenseLayer<Scalar>{dz.transpose() * in, dz.colwise().sum().transpose()};
}

}  // namespace

template <typename Scalar>
LossAndGrads<Scalar> ComputeLossAndGrads(const Network<Scalar>& model,
                                         const Batch& batch) {
  Tape<Scalar> t;
  RunForward(model, batch, t);
  const Eigen::Index b = batch.size();
  const int dim = model.spec.embedding_dim;
  const int n_dense = model.spec.n_dense;

  LossAndGrads<Scalar> result;
  VectorT<Scalar> dlogit(b);
  double loss = 0.0;
  for (Eigen::Index r = 0; r < b; ++r) {
    const double y = batch.labels[r];
    if (y != 0.0 && y != 1.0) {
      throw Error(ErrorCode::kLabelDomain, "label not in {0,1}");
    }
    const double raw_p = Sigmoid(t.logit[r]);
    const double p = std::clamp(raw_p, kProbClamp, 1.0 - kProbClamp);
    loss -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    const bool clamped = raw_p < kProbClamp || raw_p > 1.0 - kProbClamp;
    dlogit[r] = clamped ? Scalar(0) : static_cast<Scalar>((raw_p - y) / static_cast<double>(b));
  }
  result.loss = loss / static_cast<double>(b);

  auto& g = result.grads;
  g.final_layer.weight = dlogit.transpose() * t.final_in;
  g.final_layer.bias = VectorT<Scalar>::Constant(1, dlogit.sum());
  const MatrixT<Scalar> dfinal_in = dlogit * model.final_layer.weight;

  std::array<MatrixT<Scalar>, kNumBlocks> dout;
  for (int i = 0; i < kNumBlocks; ++i) {
    if (model.wiring.blocks[i].type != BlockType::kEmpty) {
      dout[i] = MatrixT<Scalar>::Zero(b, model.wiring.blocks[i].output_width);
    }
  }
  MatrixT<Scalar> demb = MatrixT<Scalar>::Zero(b, t.emb.cols());

  Eigen::Index col = 0;
  for (int s : model.wiring.sinks) {
    const auto w = dout[s].cols();
    dout[s] += dfinal_in.middleCols(col, w);
    col += w;
  }
  if (model.wiring.final_dense) col += n_dense;
  if (model.wiring.final_sparse) demb += dfinal_in.middleCols(col, t.emb.cols());

  for (int i = kNumBlocks - 1; i >= 0; --i) {
    const BlockWiring& bw = model.wiring.blocks[i];
    if (bw.type == BlockType::kEmpty) continue;
    MatrixT<Scalar> dxd;  // gradient w.r.t. the dense-side input

    if (bw.type == BlockType::kMlp) {
      const auto& layer = *model.blocks[i].mlp;
      const MatrixT<Scalar> dz =
          dout[i].cwiseProduct((t.pre[i].array() > Scalar(0)).matrix().template cast<Scalar>());
      AccumulateLayerGrad(g.blocks[i].mlp, dz, t.mlp_in[i]);
      const MatrixT<Scalar> din = dz * layer.weight;
      dxd = din.leftCols(bw.dense_width);
      if (bw.sparse_inputs > 0) demb += din.rightCols(t.emb.cols());
    } else {
      const auto inputs = InteractionInputs(t, bw, i, dim);
      const int k = static_cast<int>(inputs.size());
      std::vector<MatrixT<Scalar>> dinputs(k, MatrixT<Scalar>::Zero(b, dim));
      if (bw.type == BlockType::kFm) {
        const auto& d = dout[i].col(0);
        if (k == 1) {
          dinputs[0] = d.replicate(1, dim);
        } else {
          MatrixT<Scalar> sum = inputs[0];
          for (int a = 1; a < k; ++a) sum += inputs[a];
          for (int a = 0; a < k; ++a) {
            dinputs[a] = (sum - inputs[a]).array().colwise() * d.array();
          }
        }
      } else if (bw.square_only) {
        dinputs[0] = Scalar(2) * inputs[0].cwiseProduct(dout[i]);
      } else {
        int c = 0;
        for (int a = 0; a < k; ++a) {
          for (int e = a; e < k; ++e) {
            const auto& d = dout[i].col(c++);
            if (a == e) {
              dinputs[a] += Scalar(2) * (inputs[a].array().colwise() * d.array()).matrix();
            } else {
              dinputs[a] += (inputs[e].array().colwise() * d.array()).matrix();
              dinputs[e] += (inputs[a].array().colwise() * d.array()).matrix();
            }
          }
        }
      }
      int next = 0;
      if (bw.dense_width > 0) {
        const MatrixT<Scalar>& da = dinputs[next++];
        if (bw.project) {
          const auto& layer = *model.blocks[i].align;
          AccumulateLayerGrad(g.blocks[i].align, da, t.dense_in[i]);
          dxd = da * layer.weight;
        } else {
          dxd = da;
        }
      }
      for (int f = 0; f < bw.sparse_inputs; ++f) {
        demb.middleCols(f * dim, dim) += dinputs[next++];
      }
    }

    Eigen::Index c = bw.raw_dense ? n_dense : 0;
    for (int j : bw.preds) {
      const auto w = dout[j].cols();
      dout[j] += dxd.middleCols(c, w);
      c += w;
    }
  }

  for (int f = 0; f < model.spec.n_sparse(); ++f) {
    typename Gradients<Scalar>::EmbeddingGrad eg;
    std::unordered_map<std::int32_t, Eigen::Index> slot;
    std::vector<Eigen::Index> row_slot(b);
    for (Eigen::Index r = 0; r < b; ++r) {
      const auto code = batch.sparse(r, f);
      auto [it, inserted] = slot.try_emplace(code, static_cast<Eigen::Index>(eg.rows.size()));
      if (inserted) eg.rows.push_back(code);
      row_slot[r] = it->second;
    }
    eg.values = MatrixT<Scalar>::Zero(static_cast<Eigen::Index>(eg.rows.size()), dim);
    for (Eigen::Index r = 0; r < b; ++r) {
      eg.values.row(row_slot[r]) += demb.block(r, f * dim, 1, dim);
    }
    g.embeddings.push_back(std::move(eg));
  }
  return result;
}

Eigen::VectorXd MlpBlockForward(const Eigen::VectorXd& input,
                                const DenseLayer<double>& params) {
  if (params.weight.cols() != input.size() || params.bias.size() != params.weight.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "mlp input width does not match fan-in");
  }
  return (params.weight * input + params.bias).cwiseMax(0.0);
}

namespace {

void CheckInteractionInputs(std::span<const Eigen::VectorXd> inputs) {
  if (inputs.empty()) {
    throw Error(ErrorCode::kShapeMismatch, "interaction block needs at least one input");
  }
  for (const auto& v : inputs) {
    if (v.size() != inputs[0].size()) {
      throw Error(ErrorCode::kShapeMismatch, "interaction inputs differ in width");
    }
  }
}

}  // namespace

double FmBlockForward(std::span<const Eigen::VectorXd> inputs) {
  CheckInteractionInputs(inputs);
  if (inputs.size() == 1) return inputs[0].sum();
  double out = 0.0;
  for (std::size_t a = 0; a < inputs.size(); ++a) {
    for (std::size_t c = a + 1; c < inputs.size(); ++c) out += inputs[a].dot(inputs[c]);
  }
  return out;
}

Eigen::VectorXd DpBlockForward(std::span<const Eigen::VectorXd> inputs) {
  CheckInteractionInputs(inputs);
  const auto k = static_cast<Eigen::Index>(inputs.size());
  Eigen::VectorXd out(k * (k + 1) / 2);
  Eigen::Index c = 0;
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index d = a; d < k; ++d) out[c++] = inputs[a].dot(inputs[d]);
  }
  return out;
}

nlohmann::json TrainConfig::ToJson() const {
  return {{"batch_size", batch_size}, {"learning_rate", learning_rate},
          {"beta1", beta1},           {"beta2", beta2},
          {"epsilon", epsilon},       {"max_epochs", max_epochs},
          {"eval_interval", eval_interval}, {"patience", patience},
          {"seed", seed}};
}

TrainConfig TrainConfig::FromJson(const nlohmann::json& j) {
  TrainConfig c;
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.eval_interval = j.value("eval_interval", c.eval_interval);
  c.patience = j.value("patience", c.patience);
  c.seed = j.value("seed", c.seed);
  return c;
}

template <typename Scalar>
Eigen::VectorXd PredictAll(const Network<Scalar>& model, const CtrDataset& data) {
  constexpr std::size_t kChunk = 8192;
  Eigen::VectorXd out(static_cast<Eigen::Index>(data.size()));
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < data.size(); start += kChunk) {
    const std::size_t count = std::min(kChunk, data.size() - start);
    rows.resize(count);
    std::iota(rows.begin(), rows.end(), start);
    Tape<Scalar> t;
    RunForward(model, MakeBatch(data, rows), t);
    for (std::size_t r = 0; r < count; ++r) {
      out[static_cast<Eigen::Index>(start + r)] = ClampedSigmoid(t.logit[static_cast<Eigen::Index>(r)]);
    }
  }
  return out;
}

template <typename Scalar>
double EvaluateLogloss(const Network<Scalar>& model, const CtrDataset& data) {
  if (data.size() == 0) throw Error(ErrorCode::kInvalidArgument, "empty dataset");
  const Eigen::VectorXd p = PredictAll(model, data);
  double loss = 0.0;
  for (Eigen::Index r = 0; r < p.size(); ++r) {
    const double q = std::clamp(p[r], kProbClamp, 1.0 - kProbClamp);
    loss -= data.labels[r] * std::log(q) + (1.0 - data.labels[r]) * std::log(1.0 - q);
  }
  return loss / static_cast<double>(p.size());
}

namespace {

template <typename Scalar>
struct AdamMoments {
  MatrixT<Scalar> m;
  MatrixT<Scalar> v;
};

template <typename Scalar>
class AdamState {
 public:
  AdamState(const Network<Scalar>& model, const TrainConfig& cfg) : cfg_(cfg) {
    for (const auto& e : model.embeddings) {
      emb_.push_back({MatrixT<Scalar>::Zero(e.rows(), e.cols()),
                      MatrixT<Scalar>::Zero(e.rows(), e.cols())});
    }
  }

  void Step(Network<Scalar>& model, const Gradients<Scalar>& g) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
    std::size_t slot = 0;
    auto update_layer = [&](DenseLayer<Scalar>& p, const DenseLayer<Scalar>& d) {
      UpdateDense(p.weight, d.weight, slot++, c1, c2);
      MatrixT<Scalar> bias = p.bias;
      UpdateDense(bias, d.bias, slot++, c1, c2);
      p.bias = bias;
    };
    for (int i = 0; i < kNumBlocks; ++i) {
      if (model.blocks[i].align) update_layer(*model.blocks[i].align, *g.blocks[i].align);
      if (model.blocks[i].mlp) update_layer(*model.blocks[i].mlp, *g.blocks[i].mlp);
    }
    update_layer(model.final_layer, g.final_layer);

    const auto lr = static_cast<Scalar>(cfg_.learning_rate);
    const auto b1 = static_cast<Scalar>(cfg_.beta1);
    const auto b2 = static_cast<Scalar>(cfg_.beta2);
    const auto eps = static_cast<Scalar>(cfg_.epsilon);
    const auto ic1 = static_cast<Scalar>(1.0 / c1);
    const auto ic2 = static_cast<Scalar>(1.0 / c2);
    for (std::size_t f = 0; f < g.embeddings.size(); ++f) {
      const auto& eg = g.embeddings[f];
      auto& table = model.embeddings[f];
      auto& mom = emb_[f];
      for (std::size_t k = 0; k < eg.rows.size(); ++k) {
        const auto r = eg.rows[k];
        const auto grad = eg.values.row(static_cast<Eigen::Index>(k));
        mom.m.row(r) = b1 * mom.m.row(r) + (Scalar(1) - b1) * grad;
        mom.v.row(r) = b2 * mom.v.row(r) + (Scalar(1) - b2) * grad.cwiseAbs2();
        table.row(r).array() -=
            lr * (mom.m.row(r).array() * ic1) /
            ((mom.v.row(r).array() * ic2).sqrt() + eps);
      }
    }
  }

 private:
  template <typename P, typename G>
  void UpdateDense(P& param, const G& grad, std::size_t slot, double c1, double c2) {
    if (slot >= dense_.size()) {
      dense_.push_back({MatrixT<Scalar>::Zero(param.rows(), param.cols()),
                        MatrixT<Scalar>::Zero(param.rows(), param.cols())});
    }
    auto& mom = dense_[slot];
    const auto b1 = static_cast<Scalar>(cfg_.beta1);
    const auto b2 = static_cast<Scalar>(cfg_.beta2);
    mom.m = b1 * mom.m + (Scalar(1) - b1) * grad;
    mom.v = b2 * mom.v + (Scalar(1) - b2) * grad.cwiseAbs2();
    param.array() -= static_cast<Scalar>(cfg_.learning_rate) *
                     (mom.m.array() * static_cast<Scalar>(1.0 / c1)) /
                     ((mom.v.array() * static_cast<Scalar>(1.0 / c2)).sqrt() +
                      static_cast<Scalar>(cfg_.epsilon));
  }

  TrainConfig cfg_;
  long t_ = 0;
  std::vector<AdamMoments<Scalar>> dense_;
  std::vector<AdamMoments<Scalar>> emb_;
};

template <typename Scalar>
bool AllFinite(const Network<Scalar>& m) {
  auto ok = [](const auto& x) { return x.allFinite(); };
  for (const auto& e : m.embeddings) {
    if (!ok(e)) return false;
  }
  for (const auto& b : m.blocks) {
    if (b.mlp && !(ok(b.mlp->weight) && ok(b.mlp->bias))) return false;
    if (b.align && !(ok(b.align->weight) && ok(b.align->bias))) return false;
  }
  return ok(m.final_layer.weight) && ok(m.final_layer.bias);
}

}  // namespace

template <typename Scalar>
TrainResult<Scalar> Train(Network<Scalar> model, const CtrDataset& train,
                          const CtrDataset& val, const TrainConfig& config) {
  if (train.size() == 0 || val.size() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "train and val sets must be nonempty");
  }
  if (config.batch_size < 1 || config.max_epochs < 1 || config.patience < 1) {
    throw Error(ErrorCode::kInvalidArgument, "batch_size, max_epochs, patience must be >= 1");
  }
  Rng rng(config.seed);
  const std::size_t n = train.size();
  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  const int steps_per_epoch = static_cast<int>((n + bs - 1) / bs);
  const int eval_interval = config.eval_interval > 0 ? config.eval_interval : steps_per_epoch;

  TrainResult<Scalar> result;
  result.best = model;
  result.best_val_logloss = std::numeric_limits<double>::infinity();
  AdamState<Scalar> adam(model, config);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  int step = 0;
  int bad_evals = 0;
  double loss_sum = 0.0;
  int loss_steps = 0;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (int s = 0; s < steps_per_epoch; ++s) {
      const std::size_t begin = static_cast<std::size_t>(s) * bs;
      const std::size_t count = std::min(bs, n - begin);
      const Batch batch =
          MakeBatch(train, std::span<const std::size_t>(order.data() + begin, count));
      const auto lg = ComputeLossAndGrads(model, batch);
      if (!std::isfinite(lg.loss)) {
        throw Error(ErrorCode::kDivergence, "training loss became non-finite at step " +
                                                std::to_string(step));
      }
      adam.Step(model, lg.grads);
      ++step;
      loss_sum += lg.loss;
      ++loss_steps;
      if (step % eval_interval != 0) continue;

      if (!AllFinite(model)) {
        throw Error(ErrorCode::kDivergence, "weights became non-finite at step " +
                                                std::to_string(step));
      }
      const double v = EvaluateLogloss(model, val);
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kDivergence, "validation logloss became non-finite");
      }
      result.history.push_back({step, epoch, loss_sum / loss_steps, v});
      loss_sum = 0.0;
      loss_steps = 0;
      if (v < result.best_val_logloss) {
        result.best_val_logloss = v;
        result.best = model;
        bad_evals = 0;
      } else if (++bad_evals >= config.patience) {
        return result;
      }
    }
  }
  if (result.history.empty() || loss_steps > 0) {
    const double v = EvaluateLogloss(model, val);
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kDivergence, "validation logloss became non-finite");
    }
    result.history.push_back({step, config.max_epochs - 1,
                              loss_steps ? loss_sum / loss_steps : 0.0, v});
    if (v < result.best_val_logloss) {
      result.best_val_logloss = v;
      result.best = model;
    }
  }
  return result;
}

ComplexityReport Complexity(const Architecture& arch, const FeatureSpec& spec) {
  const Wiring w = ResolveWiring(arch, spec);
  const std::int64_t d = spec.embedding_dim;
  ComplexityReport rep;
  for (const auto& f : spec.sparse_fields) rep.n_params += f.effective_cardinality() * d;
  auto linear = [](std::int64_t in, std::int64_t out, bool activation) {
    return 2 * in * out + out + (activation ? out : 0);
  };
  for (int i = 0; i < kNumBlocks; ++i) {
    const BlockWiring& bw = w.blocks[i];
    std::int64_t fl = 0;
    switch (bw.type) {
      case BlockType::kEmpty:
        break;
      case BlockType::kMlp:
        fl = linear(bw.input_width, bw.output_width, true);
        rep.n_params += static_cast<std::int64_t>(bw.input_width) * bw.output_width +
                        bw.output_width;
        break;
      case BlockType::kFm:
      case BlockType::kDp: {
        if (bw.project) {
          fl += linear(bw.dense_width, d, false);
          rep.n_params += bw.dense_width * d + d;
        }
        const std::int64_t k = bw.interaction_inputs;
        const std::int64_t dot = 2 * d - 1;
        if (bw.type == BlockType::kFm) {
          if (k == 1) {
            fl += d - 1;
          } else {
            const std::int64_t pairs = k * (k - 1) / 2;
            fl += pairs * dot + (pairs - 1);
          }
        } else if (bw.square_only) {
          fl += d;
        } else {
          fl += k * (k + 1) / 2 * dot;
        }
        break;
      }
    }
    rep.block_flops[i] = fl;
    rep.flops += fl;
  }
  rep.final_flops = linear(w.final_width, 1, true);
  rep.flops += rep.final_flops;
  rep.n_params += w.final_width + 1;
  return rep;
}

nlohmann::json FeatureSpecToJson(const FeatureSpec& spec) {
  nlohmann::json fields = nlohmann::json::array();
  for (const auto& f : spec.sparse_fields) {
    nlohmann::json jf{{"name", f.name}, {"cardinality", f.cardinality}};
    jf["hash_cap"] = f.hash_cap ? nlohmann::json(*f.hash_cap) : nlohmann::json(nullptr);
    fields.push_back(std::move(jf));
  }
  return {{"n_dense", spec.n_dense},
          {"sparse_fields", std::move(fields)},
          {"embedding_dim", spec.embedding_dim}};
}

FeatureSpec FeatureSpecFromJson(const nlohmann::json& j) {
  FeatureSpec spec;
  try {
    spec.n_dense = j.at("n_dense").get<int>();
    spec.embedding_dim = j.value("embedding_dim", 16);
    for (const auto& jf : j.at("sparse_fields")) {
      SparseField f;
      f.name = jf.at("name").get<std::string>();
      f.cardinality = jf.at("cardinality").get<std::int64_t>();
      if (jf.contains("hash_cap") && !jf["hash_cap"].is_null()) {
        f.hash_cap = jf["hash_cap"].get<std::int64_t>();
      }
      spec.sparse_fields.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("feature spec: ") + e.what());
  }
  spec.Check();
  return spec;
}

namespace {

nlohmann::json MatrixToJson(const MatrixT<float>& m) {
  std::vector<float> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return {{"shape", {m.rows(), m.cols()}}, {"data", std::move(data)}};
}

void MatrixFromJson(const nlohmann::json& j, MatrixT<float>& m) {
  const auto shape = j.at("shape").get<std::vector<Eigen::Index>>();
  const auto data = j.at("data").get<std::vector<float>>();
  if (shape.size() != 2 || shape[0] != m.rows() || shape[1] != m.cols() ||
      static_cast<Eigen::Index>(data.size()) != m.size()) {
    throw Error(ErrorCode::kShapeMismatch, "checkpoint tensor shape mismatch");
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = data[static_cast<std::size_t>(r * m.cols() + c)];
    }
  }
}

}  // namespace

nlohmann::json CheckpointToJson(const TrainedModel& model) {
  nlohmann::json params = nlohmann::json::array();
  auto add = [&](nlohmann::json block, const std::string& name, const MatrixT<float>& m) {
    nlohmann::json p = MatrixToJson(m);
    p["block"] = std::move(block);
    p["name"] = name;
    params.push_back(std::move(p));
  };
  for (int i = 0; i < kNumBlocks; ++i) {
    const auto& b = model.blocks[i];
    if (b.align) {
      add(i + 1, "align.weight", b.align->weight);
      add(i + 1, "align.bias", b.align->bias);
    }
    if (b.mlp) {
      add(i + 1, "mlp.weight", b.mlp->weight);
      add(i + 1, "mlp.bias", b.mlp->bias);
    }
  }
  add("final", "weight", model.final_layer.weight);
  add("final", "bias", model.final_layer.bias);
  return {{"arch", ArchToJson(model.arch)},
          {"spec", FeatureSpecToJson(model.spec)},
          {"params", std::move(params)}};
}

nlohmann::json EmbeddingsToJson(const TrainedModel& model) {
  nlohmann::json fields = nlohmann::json::array();
  for (int f = 0; f < model.spec.n_sparse(); ++f) {
    nlohmann::json jf = MatrixToJson(model.embeddings[f]);
    jf["name"] = model.spec.sparse_fields[f].name;
    fields.push_back(std::move(jf));
  }
  return {{"fields", std::move(fields)}};
}

TrainedModel CheckpointFromJson(const nlohmann::json& params,
                                const nlohmann::json& embeddings) {
  Rng rng(0);
  TrainedModel m = Build<float>(ArchFromJson(params.at("arch")),
                                FeatureSpecFromJson(params.at("spec")), rng);
  for (const auto& p : params.at("params")) {
    const auto name = p.at("name").get<std::string>();
    MatrixT<float>* target = nullptr;
    MatrixT<float> bias_col;
    VectorT<float>* bias_target = nullptr;
    if (p.at("block").is_string()) {
      if (name == "weight") target = &m.final_layer.weight;
      else bias_target = &m.final_layer.bias;
    } else {
      const int i = p.at("block").get<int>() - 1;
      if (i < 0 || i >= kNumBlocks) throw Error(ErrorCode::kParse, "bad block index");
      auto& layer = name.starts_with("align") ? m.blocks[i].align : m.blocks[i].mlp;
      if (!layer) throw Error(ErrorCode::kShapeMismatch, "checkpoint has an unexpected tensor " + name);
      if (name.ends_with("weight")) target = &layer->weight;
      else bias_target = &layer->bias;
    }
    if (target) {
      MatrixFromJson(p, *target);
    } else {
      bias_col = *bias_target;
      MatrixFromJson(p, bias_col);
      *bias_target = bias_col;
    }
  }
  const auto& fields = embeddings.at("fields");
  if (fields.size() != m.embeddings.size()) {
    throw Error(ErrorCode::kShapeMismatch, "embedding table count mismatch");
  }
  for (std::size_t f = 0; f < fields.size(); ++f) MatrixFromJson(fields[f], m.embeddings[f]);
  return m;
}

#define CTRNAS_INSTANTIATE(S)                                                      \
  template struct Network<S>;                                                     \
  template Network<S> Build<S>(const Architecture&, const FeatureSpec&, Rng&);    \
  template VectorT<S> Forward<S>(const Network<S>&, const Batch&);                \
  template LossAndGrads<S> ComputeLossAndGrads<S>(const Network<S>&, const Batch&); \
  template TrainResult<S> Train<S>(Network<S>, const CtrDataset&, const CtrDataset&, \
                                   const TrainConfig&);                           \
  template double EvaluateLogloss<S>(const Network<S>&, const CtrDataset&);       \
  template Eigen::VectorXd PredictAll<S>(const Network<S>&, const CtrDataset&);

CTRNAS_INSTANTIATE(float)
CTRNAS_INSTANTIATE(double)
#undef CTRNAS_INSTANTIATE

template Network<double> Network<float>::Cast<double>() const;
template Network<float> Network<double>::Cast<float>() const;
template Network<float> Network<float>::Cast<float>() const;
template Network<double> Network<double>::Cast<double>() const;

}  // namespace ctrnas

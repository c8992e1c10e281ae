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


#include <cmath>
#include <map>
#include <random>
#include <utility>

#include <gtest/gtest.h>

#include "ctrnas/ctr_model.h"
#include "ctrnas/data.h"
#include "ctrnas/error.h"
#include "model_oracles.h"

namespace ctrnas {
namespace {

SyntheticRecipe TinyRecipe() {
  SyntheticRecipe r;
  r.n_dense = 2;
  r.cardinalities = {3, 4};
  r.embedding_dim = 3;
  r.latent_dim = 2;
  r.pairs = {{0, 1, 1.0}};
  return r;
}

// Small spec used by the closed-form complexity counts below.
FeatureSpec SmallSpec() {
  FeatureSpec s;
  s.n_dense = 3;
  s.sparse_fields = {{"c0", 5, std::nullopt}, {"c1", 7, std::nullopt}};
  s.embedding_dim = 4;
  return s;
}

ArchConstraint TinyConstraint() {
  ArchConstraint c;
  c.max_blocks = 3;
  c.units = {32};
  return c;
}

template <typename Scalar>
void ZeroAll(Network<Scalar>& m) {
  for (auto& e : m.embeddings) e.setZero();
  for (auto& b : m.blocks) {
    if (b.mlp) b.mlp->weight.setZero(), b.mlp->bias.setZero();
    if (b.align) b.align->weight.setZero(), b.align->bias.setZero();
  }
  m.final_layer.weight.setZero();
  m.final_layer.bias.setZero();
}

TEST(BlockForwardTest, Mlp) {
  DenseLayer<double> id{Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2)};
  EXPECT_EQ(MlpBlockForward(Eigen::Vector2d(1, -2), id), Eigen::VectorXd(Eigen::Vector2d(1, 0)));
  DenseLayer<double> zero{Eigen::MatrixXd::Zero(3, 2), Eigen::Vector3d(0.5, -1, 2)};
  EXPECT_EQ(MlpBlockForward(Eigen::Vector2d(4, 5), zero),
            Eigen::VectorXd(Eigen::Vector3d(0.5, 0, 2)));
  Rng rng(1);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 20; ++t) {
    DenseLayer<double> layer{Eigen::MatrixXd(7, 5), Eigen::VectorXd(7)};
    Eigen::VectorXd x(5);
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = n01(rng);
    for (auto& v : layer.bias) v = n01(rng);
    for (auto& v : x) v = n01(rng);
    const auto y = MlpBlockForward(x, layer);
    const auto ref = testing::NaiveAffine(layer, testing::Vec(x.begin(), x.end()), true);
    for (int i = 0; i < 7; ++i) EXPECT_NEAR(y(i), ref[i], 1e-6);
  }
  EXPECT_THROW(MlpBlockForward(Eigen::Vector3d(1, 2, 3), id), Error);
}

TEST(BlockForwardTest, Fm) {
  const std::vector<Eigen::VectorXd> three = {Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1),
                                              Eigen::Vector2d(1, 1)};
  EXPECT_EQ(FmBlockForward(three), 2.0);
  const std::vector<Eigen::VectorXd> one = {Eigen::Vector2d(2, 3)};
  EXPECT_EQ(FmBlockForward(one), 5.0);
  const std::vector<Eigen::VectorXd> zeros = {Eigen::Vector2d(0, 0), Eigen::Vector2d(0, 0)};
  EXPECT_EQ(FmBlockForward(zeros), 0.0);
  const std::vector<Eigen::VectorXd> ragged = {Eigen::Vector2d(1, 0), Eigen::Vector3d(1, 0, 0)};
  EXPECT_THROW(FmBlockForward(ragged), Error);
  EXPECT_THROW(FmBlockForward({}), Error);
}

TEST(BlockForwardTest, Dp) {
  const std::vector<Eigen::VectorXd> two = {Eigen::Vector2d(1, 2), Eigen::Vector2d(3, 4)};
  EXPECT_EQ(DpBlockForward(two), Eigen::VectorXd(Eigen::Vector3d(5, 11, 25)));
  const std::vector<Eigen::VectorXd> one = {Eigen::VectorXd::Constant(1, 3.0)};
  EXPECT_EQ(DpBlockForward(one), Eigen::VectorXd::Constant(1, 9.0));
  const std::vector<Eigen::VectorXd> zeros(3, Eigen::VectorXd::Zero(4));
  EXPECT_EQ(DpBlockForward(zeros), Eigen::VectorXd::Zero(6));
}

TEST(BlockForwardTest, Permutations) {
  Rng rng(2);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 30; ++t) {
    std::vector<Eigen::VectorXd> in(4, Eigen::VectorXd(3));
    for (auto& v : in) {
      for (auto& x : v) x = n01(rng);
    }
    std::vector<int> perm = {0, 1, 2, 3};
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Eigen::VectorXd> shuffled;
    for (int p : perm) shuffled.push_back(in[p]);
    EXPECT_NEAR(FmBlockForward(shuffled), FmBlockForward(in), 1e-12);
    // DP entry (a, b) of the shuffled input is entry (perm[a], perm[b]).
    const auto base = DpBlockForward(in);
    const auto moved = DpBlockForward(shuffled);
    std::map<std::pair<int, int>, double> by_pair;
    int idx = 0;
    for (int a = 0; a < 4; ++a) {
      for (int b = a; b < 4; ++b) by_pair[{a, b}] = base(idx++);
    }
    idx = 0;
    for (int a = 0; a < 4; ++a) {
      for (int b = a; b < 4; ++b) {
        const auto key = std::minmax(perm[a], perm[b]);
        EXPECT_EQ(moved(idx++), by_pair.at(key));
      }
    }
  }
}

TEST(BuildTest, EmbeddingParameterCount) {
  FeatureSpec spec;
  spec.n_dense = 13;
  for (int f = 0; f < 26; ++f) spec.sparse_fields.push_back({"C" + std::to_string(f), 10000, {}});
  spec.embedding_dim = 16;
  Rng rng(0);
  const auto m = Build<float>(Preset(PresetName::kMlpWarmstart), spec, rng);
  std::int64_t n = 0;
  for (const auto& e : m.embeddings) n += e.size();
  EXPECT_EQ(n, 4160000);
}

TEST(BuildTest, DeterministicAndMinimal) {
  Architecture a;
  a.blocks[0] = {BlockType::kMlp, RawInput::kDense, 0, 64};
  Rng r1(5), r2(5);
  const auto m1 = Build<float>(a, SmallSpec(), r1);
  const auto m2 = Build<float>(a, SmallSpec(), r2);
  for (std::size_t f = 0; f < m1.embeddings.size(); ++f) EXPECT_EQ(m1.embeddings[f], m2.embeddings[f]);
  EXPECT_EQ(*m1.blocks[0].mlp, *m2.blocks[0].mlp);
  EXPECT_EQ(m1.final_layer, m2.final_layer);
  for (const auto& b : m1.blocks) EXPECT_FALSE(b.align.has_value());
}

TEST(BuildTest, RejectsInvalid) {
  Rng rng(0);
  EXPECT_THROW(Build<float>(Architecture{}, SmallSpec(), rng), Error);
}

TEST(WiringTest, EveryFeatureConsumedExactlyOnce) {
  Rng rng(3);
  const FeatureSpec spec = SmallSpec();
  for (int t = 0; t < 500; ++t) {
    const Architecture a = RandomArch(rng, true);
    const Wiring w = ResolveWiring(a, spec);
    std::array<int, kNumBlocks> downstream{};
    bool dense_by_block = false, sparse_by_block = false;
    for (int i = 0; i < kNumBlocks; ++i) {
      const auto& bw = w.blocks[i];
      if (bw.type == BlockType::kEmpty) continue;
      dense_by_block |= bw.raw_dense;
      sparse_by_block |= bw.raw_sparse;
      for (int j : bw.preds) ++downstream[j];
    }
    for (int i = 0; i < kNumBlocks; ++i) {
      if (w.blocks[i].type == BlockType::kEmpty) continue;
      const bool to_final = std::count(w.sinks.begin(), w.sinks.end(), i) == 1;
      EXPECT_NE(downstream[i] > 0, to_final) << "block " << i;
    }
    EXPECT_NE(dense_by_block, w.final_dense);
    EXPECT_NE(sparse_by_block, w.final_sparse);
  }
}

TEST(ForwardTest, ZeroWeightsAndBias) {
  Rng rng(4);
  const auto data = SyntheticCtr(1, 16, TinyRecipe());
  const Batch batch = MakeBatch(data);
  auto m = Build<double>(Preset(PresetName::kDeepFmLike), data.spec, rng);
  ZeroAll(m);
  for (double p : Forward(m, batch)) EXPECT_EQ(p, 0.5);
  m.final_layer.bias(0) = 10.0;
  for (double p : Forward(m, batch)) EXPECT_NEAR(p, 1.0 / (1.0 + std::exp(-10.0)), 1e-15);
}

TEST(ForwardTest, MatchesReferenceWalk) {
  Rng rng(5);
  const auto data = SyntheticCtr(2, 8, TinyRecipe());
  const Batch batch = MakeBatch(data);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 100; ++t) {
    const Architecture a = RandomArch(rng, true);
    auto m = Build<double>(a, data.spec, rng);
    for (auto& e : m.embeddings) {
      for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = 0.5 * n01(rng);
    }
    const auto p = Forward(m, batch);
    for (Eigen::Index r = 0; r < batch.size(); ++r) {
      const double ref = std::clamp(testing::ReferenceForward(m, batch, r), kProbClamp,
                                    1.0 - kProbClamp);
      EXPECT_NEAR(p(r), ref, 1e-6);
      EXPECT_GT(p(r), 0.0);
      EXPECT_LT(p(r), 1.0);
    }
  }
}

TEST(LossTest, AnalyticValues) {
  Rng rng(6);
  auto data = SyntheticCtr(3, 1, TinyRecipe());
  data.labels(0) = 1.0;
  const Batch batch = MakeBatch(data);
  auto m = Build<double>(Preset(PresetName::kDeepFmLike), data.spec, rng);
  ZeroAll(m);
  EXPECT_NEAR(ComputeLossAndGrads(m, batch).loss, std::log(2.0), 1e-12);
  m.final_layer.bias(0) = 40.0;
  EXPECT_NEAR(ComputeLossAndGrads(m, batch).loss, -std::log(1.0 - kProbClamp), 1e-15);
}

TEST(GradientTest, MatchesFiniteDifferences) {
  Rng rng(7);
  const auto data = SyntheticCtr(4, 6, TinyRecipe());
  const Batch batch = MakeBatch(data);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 20; ++t) {
    const Architecture a = RandomArchWithin(rng, true, TinyConstraint());
    auto m = Build<double>(a, data.spec, rng);
    for (auto& e : m.embeddings) {
      for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = 0.5 * n01(rng);
    }
    const auto r = testing::CheckGradients(m, batch);
    EXPECT_LT(r.worst_rel_error, 1e-3) << ArchToJson(a).dump() << " " << r.worst_tensor;
  }
}

CtrDataset Separable(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::normal_distribution<double> n01;
  CtrDataset d;
  d.spec.n_dense = 2;
  d.spec.embedding_dim = 4;
  d.dense.resize(static_cast<Eigen::Index>(n), 2);
  d.sparse.resize(static_cast<Eigen::Index>(n), 0);
  d.labels.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n;) {
    const double x0 = 2 * n01(rng), x1 = 2 * n01(rng);
    if (std::abs(x0 + x1) < 1.0) continue;  // keep a margin of at least 1
    d.dense(i, 0) = x0;
    d.dense(i, 1) = x1;
    d.labels(i) = x0 + x1 > 0 ? 1.0 : 0.0;
    ++i;
  }
  return d;
}

TEST(TrainTest, SeparableSetReachesLowLoss) {
  const auto train = Separable(1, 2000), val = Separable(2, 500);
  Architecture a;
  a.blocks[0] = {BlockType::kMlp, RawInput::kDense, 0, 32};
  Rng rng(0);
  TrainConfig cfg;
  cfg.batch_size = 64;
  cfg.learning_rate = 1e-2;
  cfg.max_epochs = 30;
  cfg.patience = 5;
  const auto r = Train(Build<float>(a, train.spec, rng), train, val, cfg);
  EXPECT_LT(r.best_val_logloss, 0.1);
}

TEST(TrainTest, ZeroLearningRateLeavesWeights) {
  const auto data = SyntheticCtr(5, 600, TinyRecipe());
  const auto train = SliceRows(data, 0, 400), val = SliceRows(data, 400, 200);
  Rng rng(1);
  const auto init = Build<float>(Preset(PresetName::kDlrmLike), data.spec, rng);
  TrainConfig cfg;
  cfg.batch_size = 64;
  cfg.learning_rate = 0.0;
  cfg.max_epochs = 3;
  cfg.patience = 10;
  const auto r = Train(init, train, val, cfg);
  EXPECT_EQ(r.best.final_layer, init.final_layer);
  for (std::size_t f = 0; f < init.embeddings.size(); ++f) {
    EXPECT_EQ(r.best.embeddings[f], init.embeddings[f]);
  }
  for (const auto& h : r.history) EXPECT_EQ(h.val_logloss, r.history.front().val_logloss);
}

TEST(TrainTest, Deterministic) {
  const auto data = SyntheticCtr(6, 1000, TinyRecipe());
  const auto train = SliceRows(data, 0, 800), val = SliceRows(data, 800, 200);
  TrainConfig cfg;
  cfg.batch_size = 32;
  cfg.learning_rate = 3e-3;
  cfg.max_epochs = 3;
  cfg.seed = 9;
  auto run = [&] {
    Rng rng(2);
    return Train(Build<float>(Preset(PresetName::kDeepFmLike), data.spec, rng), train, val, cfg);
  };
  const auto a = run(), b = run();
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].train_loss, b.history[i].train_loss);
    EXPECT_EQ(a.history[i].val_logloss, b.history[i].val_logloss);
  }
}

TEST(ComplexityTest, SingleMlpBlock) {
  FeatureSpec spec;
  spec.n_dense = 10;
  Architecture a;
  a.blocks[0] = {BlockType::kMlp, RawInput::kDense, 0, 32};
  const auto c = Complexity(a, spec);
  EXPECT_EQ(c.block_flops[0], 704);
  // Additivity: the block plus a 32→1 final layer with sigmoid.
  EXPECT_EQ(c.final_flops, 2 * 32 + 1 + 1);
  EXPECT_EQ(c.flops, c.block_flops[0] + c.final_flops);
}

// Hand counts under SmallSpec (3 dense, sparse cardinalities 5 and 7,
// embedding_dim 4; 48 embedding parameters).
//
// dlrm_like:
//   b1 MLP 3→256:        1024 params, 2·3·256 + 256 + 256 = 2048 flops
//   b2 MLP 256→64:      16448 params, 2·256·64 + 64 + 64 = 32896 flops
//   b3 DP, align 64→4:    260 params, 2·64·4 + 4 = 516 flops;
//      3 inputs → 6 dots of width 4: 6·7 = 42 flops, 6 outputs
//   b4 MLP 70→512:      36352 params, 2·70·512 + 512 + 512 = 72704 flops
//   b5 MLP 512→256:    131328 params, 2·512·256 + 256 + 256 = 262656 flops
//   final 256→1:          257 params, 2·256 + 1 + 1 = 514 flops
//   total 185717 params, 371376 flops.
// deepfm_like:
//   b1 FM over 2 embeddings: one dot, 7 flops
//   b2 MLP 11→256:       3072 params, 2·11·256 + 256 + 256 = 6144 flops
//   b3 MLP 256→128:     32896 params, 2·256·128 + 128 + 128 = 65792 flops
//   final 129→1:          130 params, 2·129 + 1 + 1 = 260 flops
//   total 36146 params, 72203 flops.
TEST(ComplexityTest, PresetClosedForms) {
  const auto dlrm = Complexity(Preset(PresetName::kDlrmLike), SmallSpec());
  EXPECT_EQ(dlrm.n_params, 185717);
  EXPECT_EQ(dlrm.flops, 371376);
  EXPECT_EQ(dlrm.block_flops[2], 516 + 42);
  const auto deepfm = Complexity(Preset(PresetName::kDeepFmLike), SmallSpec());
  EXPECT_EQ(deepfm.n_params, 36146);
  EXPECT_EQ(deepfm.flops, 72203);
  EXPECT_EQ(deepfm.block_flops[0], 7);
}

TEST(ComplexityTest, PureAndConsistentWithBuild) {
  Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    const Architecture a = RandomArch(rng, true);
    const auto c = Complexity(a, SmallSpec());
    EXPECT_EQ(c, Complexity(a, SmallSpec()));
    std::int64_t sum = c.final_flops;
    for (auto f : c.block_flops) sum += f;
    EXPECT_EQ(sum, c.flops);
    EXPECT_EQ(c.n_params, Build<float>(a, SmallSpec(), rng).num_params());
  }
}

TEST(CheckpointTest, RoundTrip) {
  Rng rng(9);
  const auto m = Build<float>(Preset(PresetName::kDlrmLike), SmallSpec(), rng);
  const auto back = CheckpointFromJson(CheckpointToJson(m), EmbeddingsToJson(m));
  EXPECT_EQ(back.arch, m.arch);
  EXPECT_EQ(back.spec, m.spec);
  EXPECT_EQ(back.final_layer, m.final_layer);
  for (int i = 0; i < kNumBlocks; ++i) {
    EXPECT_EQ(back.blocks[i].mlp, m.blocks[i].mlp);
    EXPECT_EQ(back.blocks[i].align, m.blocks[i].align);
  }
  for (std::size_t f = 0; f < m.embeddings.size(); ++f) EXPECT_EQ(back.embeddings[f], m.embeddings[f]);
}

}  // namespace
}  // namespace ctrnas

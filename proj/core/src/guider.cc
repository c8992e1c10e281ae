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

#include "ctrnas/guider.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "ctrnas/error.h"
#include "ctrnas/eval_log.h"
#include "ctrnas/metrics.h"

namespace ctrnas {

nlohmann::json GuiderConfig::ToJson() const {
  return {{"max_rounds", max_rounds},     {"max_leaves", max_leaves},
          {"shrinkage", shrinkage},       {"min_leaf", min_leaf},
          {"holdout_fraction", holdout_fraction}, {"patience", patience},
          {"early_stop_k", early_stop_k}, {"truncation_k", truncation_k},
          {"sigma", sigma},               {"seed", seed}};
}

GuiderConfig GuiderConfig::FromJson(const nlohmann::json& j) {
  GuiderConfig d;
  d.max_rounds = j.value("max_rounds", d.max_rounds);
  d.max_leaves = j.value("max_leaves", d.max_leaves);
  d.shrinkage = j.value("shrinkage", d.shrinkage);
  d.min_leaf = j.value("min_leaf", d.min_leaf);
  d.holdout_fraction = j.value("holdout_fraction", d.holdout_fraction);
  d.patience = j.value("patience", d.patience);
  d.early_stop_k = j.value("early_stop_k", d.early_stop_k);
  d.truncation_k = j.value("truncation_k", d.truncation_k);
  d.sigma = j.value("sigma", d.sigma);
  d.seed = j.value("seed", d.seed);
  return d;
}

double RegressionTree::Predict(std::span<const double> x) const {
  if (nodes.empty()) return 0.0;
  int i = 0;
  while (nodes[i].feature >= 0) {
    i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
  }
  return nodes[i].value;
}

double GuiderModel::Score(const ArchVector& x) const {
  double s = base_score;
  for (const auto& t : trees) s += shrinkage * t.Predict(x);
  return s;
}

std::vector<double> GuiderModel::Score(std::span<const Architecture> archs) const {
  std::vector<double> out;
  out.reserve(archs.size());
  for (const auto& a : archs) out.push_back(Score(Encode(a)));
  return out;
}

nlohmann::json GuiderModel::ToJson() const {
  nlohmann::json trees_json = nlohmann::json::array();
  for (const auto& t : trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes) {
      nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold},
                       {"left", n.left},       {"right", n.right},
                       {"value", n.value},     {"gain", n.gain}});
    }
    trees_json.push_back({{"nodes", std::move(nodes)}});
  }
  return {{"mode", mode == GuiderMode::kRank ? "rank" : "regression"},
          {"shrinkage", shrinkage},
          {"base_score", base_score},
          {"trees", std::move(trees_json)},
          {"feature_gain", feature_gain}};
}

GuiderModel GuiderModel::FromJson(const nlohmann::json& j) {
  GuiderModel m;
  try {
    const auto mode = j.at("mode").get<std::string>();
    if (mode != "rank" && mode != "regression") {
      throw Error(ErrorCode::kUnknownName, "guider mode '" + mode + "'");
    }
    m.mode = mode == "rank" ? GuiderMode::kRank : GuiderMode::kRegression;
    m.shrinkage = j.at("shrinkage").get<double>();
    m.base_score = j.value("base_score", 0.0);
    for (const auto& jt : j.at("trees")) {
      RegressionTree t;
      for (const auto& jn : jt.at("nodes")) {
        RegressionTree::Node n;
        n.feature = jn.at("feature").get<int>();
        n.threshold = jn.at("threshold").get<double>();
        n.left = jn.at("left").get<int>();
        n.right = jn.at("right").get<int>();
        n.value = jn.at("value").get<double>();
        n.gain = jn.value("gain", 0.0);
        t.nodes.push_back(n);
      }
      const int size = static_cast<int>(t.nodes.size());
      for (const auto& n : t.nodes) {
        if (n.feature >= kVectorLength ||
            (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || n.left >= size || n.right >= size))) {
          throw Error(ErrorCode::kParse, "malformed tree node");
        }
      }
      m.trees.push_back(std::move(t));
    }
    if (j.contains("feature_gain")) {
      m.feature_gain = j["feature_gain"].get<std::array<double, kVectorLength>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("guider model: ") + e.what());
  }
  return m;
}

RankTrainingSet MakeRelevance(std::span<const EvalRecord> records) {
  std::vector<const EvalRecord*> usable;
  for (const auto& r : records) {
    if (r.ok()) usable.push_back(&r);
  }
  if (usable.size() < 2) {
    throw Error(ErrorCode::kTooFewRecords, "need at least two records with finite logloss");
  }
  std::vector<double> losses;
  for (const auto* r : usable) losses.push_back(r->val_logloss);
  RankTrainingSet set;
  set.relevance = GradesFromAscending(losses);
  for (const auto* r : usable) set.features.push_back(Encode(r->arch));
  return set;
}

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

constexpr double kMinHessian = 1e-3;

class TreeBuilder {
 public:
  TreeBuilder(std::span<const ArchVector> x, std::span<const double> g,
              std::span<const double> h, const GuiderConfig& cfg)
      : x_(x), g_(g), h_(h), cfg_(cfg) {}

  RegressionTree Build(std::vector<std::size_t> rows) {
    RegressionTree tree;
    tree.nodes.push_back(LeafNode(rows));
    std::vector<Open> open;
    open.push_back({0, std::move(rows), Split{}});
    open.back().split = FindSplit(open.back().rows);
    int leaves = 1;
    while (leaves < cfg_.max_leaves) {
      int best = -1;
      for (int i = 0; i < static_cast<int>(open.size()); ++i) {
        if (open[i].split.feature < 0) continue;
        if (best < 0 || open[i].split.gain > open[best].split.gain) best = i;
      }
      if (best < 0) break;
      Open cur = std::move(open[best]);
      open.erase(open.begin() + best);

      std::vector<std::size_t> left, right;
      for (std::size_t r : cur.rows) {
        (x_[r][cur.split.feature] <= cur.split.threshold ? left : right).push_back(r);
      }
      const int li = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back(LeafNode(left));
      tree.nodes.push_back(LeafNode(right));
      auto& node = tree.nodes[cur.node];
      node.feature = cur.split.feature;
      node.threshold = cur.split.threshold;
      node.gain = cur.split.gain;
      node.left = li;
      node.right = li + 1;
      node.value = 0.0;
      ++leaves;
      Split ls = FindSplit(left);
      Split rs = FindSplit(right);
      open.push_back({li, std::move(left), ls});
      open.push_back({li + 1, std::move(right), rs});
    }
    return tree;
  }

 private:
  struct Open {
    int node;
    std::vector<std::size_t> rows;
    Split split;
  };

  RegressionTree::Node LeafNode(const std::vector<std::size_t>& rows) const {
    double G = 0.0, H = 0.0;
    for (std::size_t r : rows) {
      G += g_[r];
      H += h_[r];
    }
    RegressionTree::Node n;
    n.value = H > 1e-12 ? -G / H : 0.0;
    return n;
  }

  Split FindSplit(const std::vector<std::size_t>& rows) const {
    Split best;
    const auto n = static_cast<int>(rows.size());
    if (n < 2 * cfg_.min_leaf) return best;
    double G = 0.0, H = 0.0;
    for (std::size_t r : rows) {
      G += g_[r];
      H += h_[r];
    }
    const double parent = H > 1e-12 ? G * G / H : 0.0;
    std::vector<std::size_t> sorted(rows);
    for (int f = 0; f < kVectorLength; ++f) {
      std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
        return x_[a][f] < x_[b][f];
      });
      if (x_[sorted.front()][f] == x_[sorted.back()][f]) continue;
      double gl = 0.0, hl = 0.0;
      for (int i = 0; i + 1 < n; ++i) {
        gl += g_[sorted[i]];
        hl += h_[sorted[i]];
        const double v = x_[sorted[i]][f];
        const double next = x_[sorted[i + 1]][f];
        if (v == next) continue;
        const int n_left = i + 1;
        if (n_left < cfg_.min_leaf || n - n_left < cfg_.min_leaf) continue;
        const double gr = G - gl, hr = H - hl;
        if (hl < kMinHessian || hr < kMinHessian) continue;
        const double gain = gl * gl / hl + gr * gr / hr - parent;
        if (gain > 1e-12 && gain > best.gain) {
          best = {f, 0.5 * (v + next), gain};
        }
      }
    }
    return best;
  }

  std::span<const ArchVector> x_;
  std::span<const double> g_;
  std::span<const double> h_;
  const GuiderConfig& cfg_;
};

// Pairwise LambdaRank gradients/hessians of the single query group `rows`.
// Only pairs with at least one member in the top `k` positions of the
// current ranking carry a nonzero |ΔNDCG@k|.
void LambdaGradients(std::span<const std::size_t> rows, std::span<const double> rel,
                     std::span<const double> scores, const GuiderConfig& cfg,
                     std::vector<double>& g, std::vector<double>& h) {
  for (std::size_t r : rows) g[r] = h[r] = 0.0;
  const std::size_t n = rows.size();
  const auto k = static_cast<std::size_t>(cfg.truncation_k);
  std::vector<std::size_t> order(rows.begin(), rows.end());
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<double> ideal;
  for (std::size_t r : rows) ideal.push_back(rel[r]);
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, n); ++i) {
    idcg += (std::exp2(ideal[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
  }
  if (idcg <= 0.0) return;
  auto discount = [k](std::size_t pos) {
    return pos < k ? 1.0 / std::log2(static_cast<double>(pos) + 2.0) : 0.0;
  };
  const double sigma = cfg.sigma;
  for (std::size_t p = 0; p < std::min(k, n); ++p) {
    for (std::size_t q = p + 1; q < n; ++q) {
      const std::size_t a = order[p], b = order[q];
      if (rel[a] == rel[b]) continue;
      const std::size_t hi = rel[a] > rel[b] ? a : b;
      const std::size_t lo = hi == a ? b : a;
      const double delta = std::abs((std::exp2(rel[a]) - std::exp2(rel[b])) *
                                    (discount(p) - discount(q))) / idcg;
      const double rho = 1.0 / (1.0 + std::exp(sigma * (scores[hi] - scores[lo])));
      const double lambda = sigma * rho * delta;
      g[hi] -= lambda;
      g[lo] += lambda;
      const double w = sigma * sigma * rho * (1.0 - rho) * delta;
      h[hi] += w;
      h[lo] += w;
    }
  }
}

double HoldoutNdcg(std::span<const std::size_t> rows, std::span<const double> rel,
                   std::span<const double> scores, int k) {
  std::vector<double> r, s;
  for (std::size_t i : rows) {
    r.push_back(rel[i]);
    s.push_back(scores[i]);
  }
  return NdcgOfScores(r, s, k);
}

double HoldoutNegMse(std::span<const std::size_t> rows, std::span<const double> target,
                     std::span<const double> scores) {
  double sse = 0.0;
  for (std::size_t i : rows) sse += (scores[i] - target[i]) * (scores[i] - target[i]);
  return -sse / static_cast<double>(rows.size());
}

// Shared boosting loop. `target` is relevance (rank) or the regression target.
GuiderModel Boost(std::span<const ArchVector> x, std::span<const double> target,
                  GuiderMode mode, const GuiderConfig& cfg) {
  const std::size_t n = x.size();
  GuiderModel model;
  model.mode = mode;
  model.shrinkage = cfg.shrinkage;

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::size_t> train = all, holdout;
  const auto n_hold = static_cast<std::size_t>(std::floor(cfg.holdout_fraction * static_cast<double>(n)));
  if (n_hold >= 2 && n - n_hold >= 2) {
    Rng rng(cfg.seed);
    std::vector<std::size_t> perm = all;
    std::shuffle(perm.begin(), perm.end(), rng);
    holdout.assign(perm.begin(), perm.begin() + static_cast<long>(n_hold));
    train.assign(perm.begin() + static_cast<long>(n_hold), perm.end());
    std::sort(holdout.begin(), holdout.end());
    std::sort(train.begin(), train.end());
  }

  if (mode == GuiderMode::kRegression) {
    double sum = 0.0;
    for (std::size_t i : train) sum += target[i];
    model.base_score = sum / static_cast<double>(train.size());
  }
  std::vector<double> scores(n, model.base_score);
  std::vector<double> g(n, 0.0), h(n, 0.0);

  auto metric = [&] {
    return mode == GuiderMode::kRank ? HoldoutNdcg(holdout, target, scores, cfg.early_stop_k)
                                     : HoldoutNegMse(holdout, target, scores);
  };
  std::optional<double> best_metric;
  std::size_t best_rounds = 0;
  if (!holdout.empty()) best_metric = metric();
  int stale = 0;

  for (int round = 0; round < cfg.max_rounds; ++round) {
    if (mode == GuiderMode::kRank) {
      LambdaGradients(train, target, scores, cfg, g, h);
    } else {
      for (std::size_t i : train) {
        g[i] = scores[i] - target[i];
        h[i] = 1.0;
      }
    }
    TreeBuilder builder(x, g, h, cfg);
    RegressionTree tree = builder.Build(train);
    for (std::size_t i = 0; i < n; ++i) scores[i] += cfg.shrinkage * tree.Predict(x[i]);
    model.trees.push_back(std::move(tree));

    if (holdout.empty()) {
      best_rounds = model.trees.size();
      continue;
    }
    const double m = metric();
    if (m > *best_metric) {
      best_metric = m;
      best_rounds = model.trees.size();
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  model.trees.resize(best_rounds);
  model.holdout_metric = best_metric;
  for (const auto& t : model.trees) {
    for (const auto& node : t.nodes) {
      if (node.feature >= 0) model.feature_gain[node.feature] += node.gain;
    }
  }
  return model;
}

}  // namespace

GuiderModel TrainRankGuider(const RankTrainingSet& set, const GuiderConfig& cfg) {
  if (set.features.size() != set.relevance.size()) {
    throw Error(ErrorCode::kLengthMismatch, "features and relevance differ in length");
  }
  std::set<double> distinct(set.relevance.begin(), set.relevance.end());
  if (distinct.size() < 2) {
    throw Error(ErrorCode::kDegenerateLabels, "relevance has fewer than two distinct grades");
  }
  for (double r : set.relevance) {
    if (r < 0 || r > 31 || r != std::floor(r)) {
      throw Error(ErrorCode::kInvalidArgument, "relevance grades must be integers in 0..31");
    }
  }
  return Boost(set.features, set.relevance, GuiderMode::kRank, cfg);
}

GuiderModel TrainRegressionGuider(std::span<const ArchVector> features,
                                  std::span<const double> targets, const GuiderConfig& cfg) {
  if (features.size() != targets.size()) {
    throw Error(ErrorCode::kLengthMismatch, "features and targets differ in length");
  }
  if (features.size() < 2) throw Error(ErrorCode::kTooFewRecords, "need at least two records");
  return Boost(features, targets, GuiderMode::kRegression, cfg);
}

GuiderModel TrainRegressionGuider(std::span<const EvalRecord> records, const GuiderConfig& cfg) {
  std::vector<ArchVector> x;
  std::vector<double> y;
  for (const auto& r : records) {
    if (!r.ok()) continue;
    x.push_back(Encode(r.arch));
    y.push_back(-r.val_logloss);
  }
  return TrainRegressionGuider(x, y, cfg);
}

std::string CoordinateLabel(int coordinate) {
  if (coordinate < 0 || coordinate >= kVectorLength) {
    throw Error(ErrorCode::kOutOfRange, "coordinate outside 0..104");
  }
  const int block = coordinate / kSlotsPerBlock + 1;
  const int slot = coordinate % kSlotsPerBlock;
  std::string name;
  if (slot < kRawSlot) {
    name = BlockTypeName(static_cast<BlockType>(slot - kTypeSlot));
  } else if (slot < kPredSlot) {
    name = "raw_" + std::string(RawInputName(static_cast<RawInput>(slot - kRawSlot)));
  } else if (slot < kUnitsSlot) {
    name = "pred" + std::to_string(slot - kPredSlot + 1);
  } else {
    name = "units";
  }
  return std::to_string(block) + "_" + name;
}

std::vector<Importance> FeatureImportance(const GuiderModel& model, int top_k) {
  double total = 0.0;
  for (double g : model.feature_gain) total += g;
  std::vector<Importance> out;
  if (total <= 0.0 || top_k <= 0) return out;
  for (int c = 0; c < kVectorLength; ++c) {
    if (model.feature_gain[c] > 0.0) {
      out.push_back({c, CoordinateLabel(c), model.feature_gain[c] / total});
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Importance& a, const Importance& b) { return a.gain > b.gain; });
  if (static_cast<int>(out.size()) > top_k) out.resize(top_k);
  return out;
}

void WriteImportanceCsv(const std::filesystem::path& path, std::span<const Importance> rows) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "label,gain\n";
  for (const auto& r : rows) out << r.label << ',' << FormatFixed(r.gain) << '\n';
}

}  // namespace ctrnas

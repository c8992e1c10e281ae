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

#include "ctrnas/lanas.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Cholesky>

#include "ctrnas/error.h"

namespace ctrnas {

void LanasConfig::Check() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kInvalidArgument, m); };
  if (depth < 1 || depth > 12) fail("depth must be in 1..12");
  if (ridge < 0) fail("ridge must be >= 0");
  if (ucb_c < 0) fail("ucb c must be >= 0");
  if (init_size < 2) fail("init size must be >= 2");
  if (budget < init_size) fail("budget must be >= init size");
  if (refit_every < 1 || retry_cap < 1 || workers < 1) {
    fail("refit cadence, retry cap and workers must be >= 1");
  }
}

nlohmann::json LanasConfig::ToJson() const {
  return {{"depth", depth},         {"ridge", ridge},
          {"ucb_c", ucb_c},         {"init_size", init_size},
          {"budget", budget},       {"refit_every", refit_every},
          {"retry_cap", retry_cap}, {"workers", workers},
          {"allow_empty", allow_empty}, {"constraint", constraint.ToJson()}};
}

LanasConfig LanasConfig::FromJson(const nlohmann::json& j) {
  LanasConfig c;
  c.depth = j.value("depth", c.depth);
  c.ridge = j.value("ridge", c.ridge);
  c.ucb_c = j.value("ucb_c", c.ucb_c);
  c.init_size = j.value("init_size", c.init_size);
  c.budget = j.value("budget", c.budget);
  c.refit_every = j.value("refit_every", c.refit_every);
  c.retry_cap = j.value("retry_cap", c.retry_cap);
  c.workers = j.value("workers", c.workers);
  c.allow_empty = j.value("allow_empty", c.allow_empty);
  if (j.contains("constraint")) c.constraint = ArchConstraint::FromJson(j["constraint"]);
  c.Check();
  return c;
}

double RidgeModel::Predict(const ArchVector& x) const {
  return intercept + Eigen::Map<const Eigen::VectorXd>(x.data(), kVectorLength).dot(weights);
}

RidgeModel FitRidge(std::span<const ArchVector> x, std::span<const double> y, double ridge) {
  if (x.size() != y.size()) throw Error(ErrorCode::kLengthMismatch, "x and y differ in length");
  if (x.empty()) throw Error(ErrorCode::kTooFewRecords, "ridge needs at least one record");
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd X(n, kVectorLength);
  Eigen::VectorXd Y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X.row(i) = Eigen::Map<const Eigen::RowVectorXd>(x[i].data(), kVectorLength);
    Y[i] = y[i];
  }
  const Eigen::RowVectorXd x_mean = X.colwise().mean();
  const double y_mean = Y.mean();
  X.rowwise() -= x_mean;
  Y.array() -= y_mean;
  Eigen::MatrixXd A = X.transpose() * X;
  A.diagonal().array() += ridge;
  RidgeModel m;
  // With ridge = 0 the system may be singular; LDLT still yields a solution.
  m.weights = A.ldlt().solve(X.transpose() * Y);
  if (!m.weights.allFinite()) m.weights.setZero();
  m.intercept = y_mean - x_mean.dot(m.weights);
  return m;
}

std::vector<int> LeafChoice::nodes() const {
  std::vector<int> out;
  for (const auto& s : steps) out.push_back(s.node);
  out.push_back(leaf);
  return out;
}

namespace {

// Predictions within rounding distance of the threshold go left, so a
// regressor that is numerically flat does not split on noise.
bool AboveThreshold(double prediction, double threshold) {
  return prediction - threshold > 1e-12 * std::max(1.0, std::abs(threshold));
}

bool GoesRight(const PartitionTree::Node& n, const ArchVector& x) {
  return !n.degenerate && AboveThreshold(n.regressor.Predict(x), n.threshold);
}

}  // namespace

PartitionTree PartitionTree::Fit(std::span<const EvalRecord> log, int depth, double ridge) {
  PartitionTree t;
  t.depth_ = depth;
  t.ridge_ = ridge;
  t.nodes_.resize(static_cast<std::size_t>((2 << depth) - 1));
  std::vector<ArchVector> enc(log.size());
  auto& root = t.nodes_[0];
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (!log[i].ok()) continue;
    enc[i] = Encode(log[i].arch);
    root.members.push_back(i);
    root.member_loss.push_back(log[i].val_logloss);
  }
  if (root.members.size() < 2) {
    throw Error(ErrorCode::kTooFewRecords, "tree needs at least two finite records");
  }
  for (int i = 0; i < t.num_internal(); ++i) {
    Node& node = t.nodes_[i];
    Node& left = t.nodes_[2 * i + 1];
    Node& right = t.nodes_[2 * i + 2];
    if (node.members.empty()) {
      node.degenerate = true;
      continue;
    }
    std::vector<ArchVector> xs;
    for (std::size_t m : node.members) xs.push_back(enc[m]);
    node.regressor = FitRidge(xs, node.member_loss, ridge);
    std::vector<double> pred(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) pred[k] = node.regressor.Predict(xs[k]);
    node.threshold = std::accumulate(pred.begin(), pred.end(), 0.0) / static_cast<double>(pred.size());
    const auto n_left = std::count_if(pred.begin(), pred.end(), [&](double p) {
      return !AboveThreshold(p, node.threshold);
    });
    node.degenerate = n_left == 0 || n_left == static_cast<long>(pred.size());
    for (std::size_t k = 0; k < node.members.size(); ++k) {
      Node& child = (!node.degenerate && AboveThreshold(pred[k], node.threshold)) ? right : left;
      child.members.push_back(node.members[k]);
      child.member_loss.push_back(node.member_loss[k]);
    }
  }
  for (auto& n : t.nodes_) {
    n.visits = static_cast<long>(n.members.size());
    n.loss_sum = std::accumulate(n.member_loss.begin(), n.member_loss.end(), 0.0);
  }
  return t;
}

void PartitionTree::Refit(std::span<const EvalRecord> log) {
  PartitionTree fresh = Fit(log, depth_, ridge_);
  fresh.slots_ = std::move(slots_);
  fresh.next_slot_ = next_slot_;
  *this = std::move(fresh);
}

int PartitionTree::Route(const ArchVector& x) const {
  int i = 0;
  while (!is_leaf(i)) i = GoesRight(nodes_[i], x) ? 2 * i + 2 : 2 * i + 1;
  return i;
}

bool PartitionTree::SatisfiesPath(const ArchVector& x, const LeafChoice& path) const {
  for (const auto& s : path.steps) {
    if (GoesRight(nodes_[s.node], x) != s.right) return false;
  }
  return true;
}

long PartitionTree::EffectiveVisits(int node) const {
  long v = nodes_.at(node).visits;
  for (const auto& [id, slot] : slots_) {
    for (int n : slot.path.nodes()) {
      if (n == node) ++v;
    }
  }
  return v;
}

double PartitionTree::EffectiveLossSum(int node) const {
  double s = nodes_.at(node).loss_sum;
  for (const auto& [id, slot] : slots_) {
    for (int n : slot.path.nodes()) {
      if (n == node) s += slot.value;
    }
  }
  return s;
}

LeafChoice PartitionTree::SelectLeaf(double ucb_c) const {
  LeafChoice choice;
  int i = 0;
  while (!is_leaf(i)) {
    const double n_parent = static_cast<double>(EffectiveVisits(i));
    auto ucb = [&](int child) {
      const long n = EffectiveVisits(child);
      if (n == 0) return std::numeric_limits<double>::infinity();
      const double value = -EffectiveLossSum(child) / static_cast<double>(n);
      const double explore =
          n_parent > 0 ? std::sqrt(2.0 * std::log(n_parent) / static_cast<double>(n)) : 0.0;
      return value + ucb_c * explore;
    };
    const bool right = ucb(2 * i + 2) > ucb(2 * i + 1);
    choice.steps.push_back({i, right});
    i = right ? 2 * i + 2 : 2 * i + 1;
  }
  choice.leaf = i;
  return choice;
}

void PartitionTree::AddMember(std::size_t position, const ArchVector& x, double loss) {
  int i = 0;
  for (;;) {
    nodes_[i].members.push_back(position);
    nodes_[i].member_loss.push_back(loss);
    if (is_leaf(i)) break;
    i = GoesRight(nodes_[i], x) ? 2 * i + 2 : 2 * i + 1;
  }
}

void PartitionTree::Backprop(const LeafChoice& path, double loss) {
  for (int n : path.nodes()) {
    nodes_.at(n).visits += 1;
    nodes_.at(n).loss_sum += loss;
  }
}

double PartitionTree::VirtualValue(int leaf) const {
  for (int n : {leaf, 0}) {
    const auto& l = nodes_.at(n).member_loss;
    if (!l.empty()) return std::accumulate(l.begin(), l.end(), 0.0) / static_cast<double>(l.size());
  }
  return 0.0;
}

int PartitionTree::AddVirtual(const LeafChoice& path, double value) {
  const int id = next_slot_++;
  slots_.emplace(id, Slot{path, value});
  return id;
}

void PartitionTree::ClearVirtual(int slot, std::optional<double> real_loss) {
  auto it = slots_.find(slot);
  if (it == slots_.end()) {
    throw Error(ErrorCode::kDoubleClear, "virtual slot " + std::to_string(slot) + " is not outstanding");
  }
  const LeafChoice path = std::move(it->second.path);
  slots_.erase(it);
  if (real_loss) Backprop(path, *real_loss);
}

nlohmann::json PartitionTree::ToJson() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (int i = 0; i < num_nodes(); ++i) {
    const Node& n = nodes_[i];
    nlohmann::json j{{"id", i},
                     {"leaf", is_leaf(i)},
                     {"members", n.members.size()},
                     {"visits", n.visits},
                     {"loss_sum", n.loss_sum},
                     {"effective_visits", EffectiveVisits(i)}};
    if (!is_leaf(i)) {
      j["threshold"] = n.threshold;
      j["degenerate"] = n.degenerate;
      j["intercept"] = n.regressor.intercept;
      j["weights"] = std::vector<double>(n.regressor.weights.data(),
                                         n.regressor.weights.data() + n.regressor.weights.size());
    }
    nodes.push_back(std::move(j));
  }
  return {{"depth", depth_}, {"ridge", ridge_}, {"outstanding", outstanding()}, {"nodes", nodes}};
}

Architecture RolloutEvolutionary(const PartitionTree& tree, const LeafChoice& path,
                                 std::span<const EvalRecord> log, Rng& rng, int retry_cap,
                                 bool allow_empty, const ArchConstraint& constraint) {
  const auto& members = tree.node(path.leaf).members;
  if (members.empty()) return RandomArchWithin(rng, allow_empty, constraint);
  std::vector<std::size_t> pool(members.begin(), members.end());
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize((pool.size() + 1) / 2);
  const EvalRecord* parent = nullptr;
  for (std::size_t m : pool) {
    const EvalRecord& r = log[m];
    if (!parent || r.val_logloss < parent->val_logloss ||
        (r.val_logloss == parent->val_logloss && r.birth_index < parent->birth_index)) {
      parent = &r;
    }
  }
  Architecture candidate;
  for (int attempt = 0; attempt < retry_cap; ++attempt) {
    candidate = NeighborsWithin(parent->arch, 1, rng, constraint).front();
    if (tree.SatisfiesPath(Encode(candidate), path)) break;
  }
  return candidate;
}

SearchResult LanasSearch(const ArchEvaluator& evaluator, const LanasConfig& cfg,
                         std::uint64_t seed, const SearchHooks& hooks,
                         PartitionTree* final_tree) {
  cfg.Check();
  Rng rng(seed);
  RunRecorder recorder(hooks);
  EvalPool pool(evaluator, cfg.workers);
  Dispatcher dispatch(pool, recorder, seed);

  for (int i = 0; i < cfg.init_size && !hooks.stopped(); ++i) {
    if (dispatch.full()) dispatch.CompleteOne();
    dispatch.Submit(RandomArchWithin(rng, cfg.allow_empty, cfg.constraint));
  }
  dispatch.Drain();
  if (hooks.stopped()) {
    SearchResult r = std::move(recorder.result());
    r.truncated = true;
    return r;
  }

  PartitionTree tree = PartitionTree::Fit(recorder.log(), cfg.depth, cfg.ridge);
  std::map<std::int64_t, int> slot_of_tag;
  int since_fit = 0;
  auto complete = [&] {
    const auto [rec, tag] = dispatch.CompleteOne();
    const std::size_t position = recorder.size() - 1;
    const int slot = slot_of_tag.at(tag);
    slot_of_tag.erase(tag);
    if (rec->ok()) {
      const double loss = rec->val_logloss;
      tree.ClearVirtual(slot, loss);
      tree.AddMember(position, Encode(rec->arch), loss);
    } else {
      tree.ClearVirtual(slot, std::nullopt);
    }
    if (++since_fit >= cfg.refit_every) {
      tree.Refit(recorder.log());
      since_fit = 0;
    }
  };

  while (static_cast<int>(dispatch.submitted()) < cfg.budget && !hooks.stopped()) {
    if (dispatch.full()) {
      complete();
      continue;
    }
    const LeafChoice choice = tree.SelectLeaf(cfg.ucb_c);
    const Architecture arch = RolloutEvolutionary(tree, choice, recorder.log(), rng,
                                                  cfg.retry_cap, cfg.allow_empty, cfg.constraint);
    slot_of_tag[static_cast<std::int64_t>(dispatch.submitted())] =
        tree.AddVirtual(choice, tree.VirtualValue(choice.leaf));
    dispatch.Submit(arch);
  }
  while (pool.in_flight() > 0) complete();
  if (final_tree) *final_tree = tree;
  SearchResult result = std::move(recorder.result());
  result.truncated = static_cast<int>(result.log.size()) < cfg.budget;
  return result;
}

}  // namespace ctrnas

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

// Latent-action tree search with evolutionary rollout.
//
// A complete binary tree partitions evaluated architectures: every internal
// node holds a ridge regression of logloss on the ArchVector, and a record
// goes left when the node predicts at most the mean prediction of the
// node's members. Leaves are picked by UCB on −mean loss. In-flight
// evaluations pad the statistics with virtual losses, kept as outstanding
// slots rather than folded into the sums, so clearing them is exact.
//
// Nodes use heap layout: node i has children 2i+1 and 2i+2; the depth-d tree
// has 2^d − 1 internal nodes followed by 2^d leaves.

#ifndef CTRNAS_LANAS_H_
#define CTRNAS_LANAS_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "ctrnas/evaluator.h"
#include "ctrnas/search_common.h"
#include "ctrnas/search_space.h"

namespace ctrnas {

struct LanasConfig {
  int depth = 5;
  double ridge = 0.1;
  double ucb_c = 0.5;
  int init_size = 100;
  int budget = 1500;
  int refit_every = 20;
  int retry_cap = 50;
  int workers = 1;
  bool allow_empty = true;
  ArchConstraint constraint;

  void Check() const;
  nlohmann::json ToJson() const;
  static LanasConfig FromJson(const nlohmann::json& j);
};

struct RidgeModel {
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(kVectorLength);
  double intercept = 0.0;

  double Predict(const ArchVector& x) const;
};

// Ridge regression with an unpenalized intercept: minimizes
// ‖y − b − Xw‖² + ridge·‖w‖². Throws kTooFewRecords for empty input.
RidgeModel FitRidge(std::span<const ArchVector> x, std::span<const double> y, double ridge);

struct PathStep {
  int node = 0;
  bool right = false;
};

struct LeafChoice {
  std::vector<PathStep> steps;  // root first
  int leaf = 0;

  // Every node on the path, root to leaf inclusive.
  std::vector<int> nodes() const;
};

class PartitionTree {
 public:
  struct Node {
    RidgeModel regressor;
    double threshold = 0.0;
    bool degenerate = false;  // all members routed left
    std::vector<std::size_t> members;  // positions in the fitting log
    std::vector<double> member_loss;
    long visits = 0;
    double loss_sum = 0.0;
  };

  // Fits on the finite-loss records of `log`; visit counts start at member
  // counts. Throws kTooFewRecords with fewer than two usable records.
  static PartitionTree Fit(std::span<const EvalRecord> log, int depth = 5, double ridge = 0.1);

  // Refits on `log`, keeping outstanding virtual slots.
  void Refit(std::span<const EvalRecord> log);

  int depth() const { return depth_; }
  int num_internal() const { return (1 << depth_) - 1; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  bool is_leaf(int node) const { return node >= num_internal(); }
  const Node& node(int i) const { return nodes_.at(i); }

  // Leaf reached by routing x through the regressors.
  int Route(const ArchVector& x) const;
  // Whether x routes to the stated side at every step.
  bool SatisfiesPath(const ArchVector& x, const LeafChoice& path) const;

  // UCB descent on effective statistics; unvisited children score +inf and
  // ties go left.
  LeafChoice SelectLeaf(double ucb_c) const;

  // Registers record `position` (finite loss) as a member along its route.
  void AddMember(std::size_t position, const ArchVector& x, double loss);

  void Backprop(const LeafChoice& path, double loss);
  // Mean member loss of `leaf`, falling back to the root mean (0 if none).
  double VirtualValue(int leaf) const;
  int AddVirtual(const LeafChoice& path, double value);
  // Removes the slot, then backpropagates `real_loss` if given. Throws
  // kDoubleClear for unknown or already cleared slots.
  void ClearVirtual(int slot, std::optional<double> real_loss);
  int outstanding() const { return static_cast<int>(slots_.size()); }

  long EffectiveVisits(int node) const;
  double EffectiveLossSum(int node) const;

  // For tests: direct statistics access.
  Node& mutable_node(int i) { return nodes_.at(i); }

  nlohmann::json ToJson() const;

 private:
  struct Slot {
    LeafChoice path;
    double value;
  };

  int depth_ = 5;
  double ridge_ = 0.1;
  std::vector<Node> nodes_;
  std::map<int, Slot> slots_;
  int next_slot_ = 0;
};

// Parent = best of a random half of the leaf members; the candidate is a
// mutation of the parent, retried until it satisfies every path constraint
// (the last candidate is returned after retry_cap rejections). An empty leaf
// falls back to a random architecture.
Architecture RolloutEvolutionary(const PartitionTree& tree, const LeafChoice& path,
                                 std::span<const EvalRecord> log, Rng& rng,
                                 int retry_cap = 50, bool allow_empty = true,
                                 const ArchConstraint& constraint = {});

// `final_tree` receives the tree after the last completion when non-null.
SearchResult LanasSearch(const ArchEvaluator& evaluator, const LanasConfig& cfg,
                         std::uint64_t seed, const SearchHooks& hooks = {},
                         PartitionTree* final_tree = nullptr);

}  // namespace ctrnas

#endif  // CTRNAS_LANAS_H_

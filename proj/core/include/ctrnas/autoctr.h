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

// Evolutionary search: multi-objective survivor selection, rank-based parent
// selection, and guider-filtered mutation.
//
// Survival. Among records with age <= q and finite logloss, each gets
//   μ1·age + μ2·r + μ3·c      (lower survives)
// where r and c rank logloss and flops ascending inside that window (ties
// share the smaller rank). The p lowest scores survive; equal scores go to
// the younger record.
//
// Parents. Members are ordered worst to best (equal logloss: older first) and
// the member at position r* ∈ 1..p is drawn with probability
//   C(r* + λ − 1, λ) / C(p + λ, λ + 1),
// which is uniform at λ = 0 and proportional to rank at λ = 1.

#ifndef CTRNAS_AUTOCTR_H_
#define CTRNAS_AUTOCTR_H_

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctrnas/evaluator.h"
#include "ctrnas/guider.h"
#include "ctrnas/search_common.h"
#include "ctrnas/search_space.h"

namespace ctrnas {

// kRandom: no surrogate, one neighbor per mutation.
enum class GuiderKind { kRandom, kRegression, kRank };

std::string_view GuiderKindName(GuiderKind kind);
GuiderKind ParseGuiderKind(std::string_view name);  // throws kUnknownName

struct SearchConfig {
  int population = 100;
  int q_window = 200;
  std::array<double, 3> mu = {1.0, 0.1, 0.1};
  bool age_filter = true;  // false drops the age <= q eligibility filter
  int lambda = 10;
  int n_neighbors = 100;
  int init_size = 100;
  int budget = 1500;
  int workers = 1;
  GuiderKind guider = GuiderKind::kRank;
  // Retrain every iteration while the log holds at most this many records,
  // then every `guider_every` iterations.
  int guider_full_until = 500;
  int guider_every = 10;
  bool allow_empty = true;
  ArchConstraint constraint;
  GuiderConfig guider_cfg;

  void Check() const;  // throws kInvalidArgument
  nlohmann::json ToJson() const;
  static SearchConfig FromJson(const nlohmann::json& j);
};

// Post-init records: count − birth_index; init records share count − init_size.
long AgeOf(const EvalRecord& record, long current_eval_count, long init_size);

struct PopulationMember {
  const EvalRecord* record = nullptr;
  long age = 0;
  int fitness_rank = 0;     // r^q
  int complexity_rank = 0;  // c^q
  double score = 0.0;
};

struct PopulationView {
  std::vector<PopulationMember> members;  // ascending survival score
};

// μ1·age + μ2·r + μ3·c, or nullopt when age > q.
std::optional<double> SurvivalScore(long age, int fitness_rank, int complexity_rank,
                                    const std::array<double, 3>& mu, int q);

// Scores every eligible record of `log` (all of them, unsorted).
std::vector<PopulationMember> ScoreWindow(std::span<const EvalRecord> log,
                                          const SearchConfig& cfg,
                                          long current_eval_count);

PopulationView SurvivorSelect(std::span<const EvalRecord> log, const SearchConfig& cfg,
                              long current_eval_count);

// Throws kDomain when r_star is outside 1..p or lambda < 0.
double ParentProb(int r_star, int p, int lambda);

// Throws kEmptyPopulation.
const EvalRecord& ParentSelect(const PopulationView& pop, int lambda, Rng& rng);

// Scores candidate architectures; higher is better.
using ArchScorer = std::function<std::vector<double>(std::span<const Architecture>)>;

// Draws up to n unique neighbors and returns the best-scored one (first on
// ties). With n == 1 or no scorer, returns the first neighbor.
Architecture GuidedOffspring(const Architecture& parent, const ArchScorer& scorer,
                             int n_neighbors, Rng& rng,
                             const ArchConstraint& constraint = {});

// Full search. Throws kTooFewRecords if every initial evaluation fails.
SearchResult AutoCtrSearch(const ArchEvaluator& evaluator, const SearchConfig& cfg,
                           std::uint64_t seed, const SearchHooks& hooks = {});

}  // namespace ctrnas

#endif  // CTRNAS_AUTOCTR_H_

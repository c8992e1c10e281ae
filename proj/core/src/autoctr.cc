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

#include "ctrnas/autoctr.h"

#include <algorithm>
#include <numeric>

#include "ctrnas/error.h"

namespace ctrnas {

std::string_view GuiderKindName(GuiderKind kind) {
  switch (kind) {
    case GuiderKind::kRandom:
      return "random";
    case GuiderKind::kRegression:
      return "regression";
    case GuiderKind::kRank:
      return "rank";
  }
  return "?";
}

GuiderKind ParseGuiderKind(std::string_view name) {
  for (auto k : {GuiderKind::kRandom, GuiderKind::kRegression, GuiderKind::kRank}) {
    if (GuiderKindName(k) == name) return k;
  }
  throw Error(ErrorCode::kUnknownName, "guider '" + std::string(name) + "'");
}

void SearchConfig::Check() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kInvalidArgument, m); };
  if (population < 1) fail("population must be >= 1");
  if (q_window < population) fail("q must be >= population");
  if (lambda < 0) fail("lambda must be >= 0");
  for (double m : mu) {
    if (m < 0) fail("objective weights must be >= 0");
  }
  if (n_neighbors < 1) fail("n_neighbors must be >= 1");
  if (init_size < 1) fail("init size must be >= 1");
  if (budget < init_size) fail("budget must be >= init size");
  if (workers < 1) fail("workers must be >= 1");
  if (guider_every < 1) fail("guider cadence must be >= 1");
}

nlohmann::json SearchConfig::ToJson() const {
  return {{"population", population},
          {"q_window", q_window},
          {"mu", mu},
          {"age_filter", age_filter},
          {"lambda", lambda},
          {"n_neighbors", n_neighbors},
          {"init_size", init_size},
          {"budget", budget},
          {"workers", workers},
          {"guider", GuiderKindName(guider)},
          {"guider_full_until", guider_full_until},
          {"guider_every", guider_every},
          {"allow_empty", allow_empty},
          {"constraint", constraint.ToJson()},
          {"guider_cfg", guider_cfg.ToJson()}};
}

SearchConfig SearchConfig::FromJson(const nlohmann::json& j) {
  SearchConfig c;
  c.population = j.value("population", c.population);
  c.q_window = j.value("q_window", c.q_window);
  if (j.contains("mu")) c.mu = j["mu"].get<std::array<double, 3>>();
  c.age_filter = j.value("age_filter", c.age_filter);
  c.lambda = j.value("lambda", c.lambda);
  c.n_neighbors = j.value("n_neighbors", c.n_neighbors);
  c.init_size = j.value("init_size", c.init_size);
  c.budget = j.value("budget", c.budget);
  c.workers = j.value("workers", c.workers);
  if (j.contains("guider")) c.guider = ParseGuiderKind(j["guider"].get<std::string>());
  c.guider_full_until = j.value("guider_full_until", c.guider_full_until);
  c.guider_every = j.value("guider_every", c.guider_every);
  c.allow_empty = j.value("allow_empty", c.allow_empty);
  if (j.contains("constraint")) c.constraint = ArchConstraint::FromJson(j["constraint"]);
  if (j.contains("guider_cfg")) c.guider_cfg = GuiderConfig::FromJson(j["guider_cfg"]);
  c.Check();
  return c;
}

long AgeOf(const EvalRecord& record, long current_eval_count, long init_size) {
  const long birth = record.birth_index <= init_size ? init_size : record.birth_index;
  return std::max(0L, current_eval_count - birth);
}

std::optional<double> SurvivalScore(long age, int fitness_rank, int complexity_rank,
                                    const std::array<double, 3>& mu, int q) {
  if (age > q) return std::nullopt;
  return mu[0] * static_cast<double>(age) + mu[1] * fitness_rank + mu[2] * complexity_rank;
}

namespace {

// Competition ranks (1-based, ties share the smaller rank) of `key` over
// `items`.
template <typename Key>
std::vector<int> CompetitionRanks(std::size_t n, Key key) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  std::vector<int> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    rank[order[i]] = (i > 0 && key(order[i]) == key(order[i - 1]))
                         ? rank[order[i - 1]]
                         : static_cast<int>(i) + 1;
  }
  return rank;
}

}  // namespace

std::vector<PopulationMember> ScoreWindow(std::span<const EvalRecord> log,
                                          const SearchConfig& cfg,
                                          long current_eval_count) {
  std::vector<PopulationMember> window;
  for (const auto& r : log) {
    if (!r.ok()) continue;
    const long age = AgeOf(r, current_eval_count, cfg.init_size);
    if (cfg.age_filter && age > cfg.q_window) continue;
    window.push_back({&r, age, 0, 0, 0.0});
  }
  const auto fit = CompetitionRanks(window.size(),
                                    [&](std::size_t i) { return window[i].record->val_logloss; });
  const auto cx = CompetitionRanks(window.size(),
                                   [&](std::size_t i) { return window[i].record->flops; });
  for (std::size_t i = 0; i < window.size(); ++i) {
    auto& m = window[i];
    m.fitness_rank = fit[i];
    m.complexity_rank = cx[i];
    m.score = cfg.mu[0] * static_cast<double>(m.age) + cfg.mu[1] * m.fitness_rank +
              cfg.mu[2] * m.complexity_rank;
  }
  return window;
}

PopulationView SurvivorSelect(std::span<const EvalRecord> log, const SearchConfig& cfg,
                              long current_eval_count) {
  PopulationView view;
  view.members = ScoreWindow(log, cfg, current_eval_count);
  std::sort(view.members.begin(), view.members.end(),
            [](const PopulationMember& a, const PopulationMember& b) {
              if (a.score != b.score) return a.score < b.score;
              return a.record->birth_index > b.record->birth_index;
            });
  if (static_cast<int>(view.members.size()) > cfg.population) {
    view.members.resize(cfg.population);
  }
  return view;
}

double ParentProb(int r_star, int p, int lambda) {
  if (p < 1 || r_star < 1 || r_star > p || lambda < 0) {
    throw Error(ErrorCode::kDomain, "parent rank " + std::to_string(r_star) +
                                        " outside 1.." + std::to_string(p));
  }
  // C(r+λ−1, λ) / C(p+λ, λ+1) = (λ+1)/p · Π_{i=1..λ} (r−1+i)/(p+i).
  double prob = static_cast<double>(lambda + 1) / p;
  for (int i = 1; i <= lambda; ++i) {
    prob *= static_cast<double>(r_star - 1 + i) / static_cast<double>(p + i);
  }
  return prob;
}

const EvalRecord& ParentSelect(const PopulationView& pop, int lambda, Rng& rng) {
  if (pop.members.empty()) throw Error(ErrorCode::kEmptyPopulation, "population is empty");
  std::vector<const EvalRecord*> ordered;
  for (const auto& m : pop.members) ordered.push_back(m.record);
  // Worst first, so the best member sits at r* = p.
  std::sort(ordered.begin(), ordered.end(), [](const EvalRecord* a, const EvalRecord* b) {
    if (a->val_logloss != b->val_logloss) return a->val_logloss > b->val_logloss;
    return a->birth_index < b->birth_index;
  });
  const int p = static_cast<int>(ordered.size());
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  double cum = 0.0;
  for (int r = 1; r <= p; ++r) {
    cum += ParentProb(r, p, lambda);
    if (u < cum) return *ordered[r - 1];
  }
  return *ordered.back();
}

Architecture GuidedOffspring(const Architecture& parent, const ArchScorer& scorer,
                             int n_neighbors, Rng& rng, const ArchConstraint& constraint) {
  const auto candidates = NeighborsWithin(parent, n_neighbors, rng, constraint);
  if (n_neighbors == 1 || !scorer || candidates.size() == 1) return candidates.front();
  const auto scores = scorer(candidates);
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return candidates[best];
}

namespace {

std::optional<GuiderModel> TrainGuider(const std::vector<EvalRecord>& log,
                                       const SearchConfig& cfg, std::uint64_t seed) {
  GuiderConfig gc = cfg.guider_cfg;
  gc.seed = seed;
  try {
    if (cfg.guider == GuiderKind::kRank) return TrainRankGuider(MakeRelevance(log), gc);
    return TrainRegressionGuider(log, gc);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kTooFewRecords || e.code() == ErrorCode::kDegenerateLabels) {
      return std::nullopt;
    }
    throw;
  }
}

}  // namespace

SearchResult AutoCtrSearch(const ArchEvaluator& evaluator, const SearchConfig& cfg,
                           std::uint64_t seed, const SearchHooks& hooks) {
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
  if (!hooks.stopped() &&
      std::none_of(recorder.log().begin(), recorder.log().end(),
                   [](const EvalRecord& r) { return r.ok(); })) {
    throw Error(ErrorCode::kTooFewRecords, "every initial evaluation failed");
  }

  const int n_neighbors = cfg.guider == GuiderKind::kRandom ? 1 : cfg.n_neighbors;
  std::optional<GuiderModel> guider;
  long iteration = 0;
  while (static_cast<int>(dispatch.submitted()) < cfg.budget && !hooks.stopped()) {
    if (dispatch.full()) {
      dispatch.CompleteOne();
      continue;
    }
    const auto& log = recorder.log();
    const long count = static_cast<long>(log.size());
    const PopulationView pop = SurvivorSelect(log, cfg, count);
    Architecture child;
    if (pop.members.empty()) {
      child = RandomArchWithin(rng, cfg.allow_empty, cfg.constraint);
    } else {
      const Architecture parent = ParentSelect(pop, cfg.lambda, rng).arch;
      if (n_neighbors > 1 &&
          (count <= cfg.guider_full_until || iteration % cfg.guider_every == 0)) {
        guider = TrainGuider(log, cfg, rng());
      }
      ArchScorer scorer;
      if (guider) {
        scorer = [&g = *guider](std::span<const Architecture> archs) { return g.Score(archs); };
      }
      child = GuidedOffspring(parent, scorer, n_neighbors, rng, cfg.constraint);
    }
    dispatch.Submit(child);
    ++iteration;
  }
  dispatch.Drain();
  SearchResult result = std::move(recorder.result());
  result.truncated = static_cast<int>(result.log.size()) < cfg.budget;
  return result;
}

}  // namespace ctrnas

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


#include "ctrnas/consistency.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include "ctrnas/eval_log.h"
#include "ctrnas/error.h"

namespace ctrnas {

std::string_view FidelityStrategyName(FidelityStrategy s) {
  switch (s) {
    case FidelityStrategy::kEs:
      return "es";
    case FidelityStrategy::kEsHash:
      return "es+hash";
    case FidelityStrategy::kEsWarm:
      return "es+warm";
  }
  return "es";
}

FidelityStrategy ParseFidelityStrategy(std::string_view name) {
  for (auto s : {FidelityStrategy::kEs, FidelityStrategy::kEsHash, FidelityStrategy::kEsWarm}) {
    if (FidelityStrategyName(s) == name) return s;
  }
  throw Error(ErrorCode::kUnknownName, "unknown strategy '" + std::string(name) + "'");
}

void ConsistencyConfig::Check(std::size_t data_size, std::size_t n_archs) const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kInvalidArgument, m); };
  if (sizes.empty()) fail("at least one size is required");
  if (strategies.empty()) fail("at least one strategy is required");
  if (seeds.empty()) fail("at least one seed is required");
  if (n_archs < 2) fail("at least two architectures are required");
  if (hash_cap < 1) fail("hash cap must be >= 1");
  if (workers < 1) fail("workers must be >= 1");
  if (window < 2) fail("window must be >= 2");
  if (window > n_archs) {
    throw Error(ErrorCode::kWindowTooLarge, "window exceeds the number of architectures");
  }
  for (std::size_t s : sizes) {
    if (s > data_size) throw Error(ErrorCode::kRowsExceedSize, "size exceeds the dataset");
  }
}

nlohmann::json ConsistencyConfig::ToJson() const {
  std::vector<std::string> names;
  for (auto s : strategies) names.emplace_back(FidelityStrategyName(s));
  return {{"sizes", sizes},
          {"strategies", names},
          {"seeds", seeds},
          {"window", window},
          {"hash_cap", hash_cap},
          {"subsample_mode", subsample_mode == SubsampleMode::kHead ? "head" : "random"},
          {"split", split},
          {"train", train.ToJson()},
          {"workers", workers}};
}

FidelityConfig CellFidelity(const ConsistencyConfig& cfg, std::size_t size,
                            FidelityStrategy strategy, std::uint64_t seed) {
  FidelityConfig f;
  f.subsample_rows = size;
  f.subsample_mode = cfg.subsample_mode;
  f.subsample_seed = seed;
  f.split = cfg.split;
  f.hash_cap = strategy == FidelityStrategy::kEsHash ? std::optional<std::int64_t>(cfg.hash_cap)
                                                     : std::nullopt;
  f.warm_start = strategy == FidelityStrategy::kEsWarm;
  return f;
}

namespace {

std::vector<double> EvaluateAll(const std::vector<Architecture>& archs, const CtrDataset& data,
                                const FidelityConfig& fidelity, const ConsistencyConfig& cfg,
                                std::uint64_t seed) {
  TrainingEvaluator evaluator(data, fidelity, cfg.train);
  EvalPool pool(evaluator, cfg.workers);
  std::vector<double> out(archs.size(), std::numeric_limits<double>::infinity());
  std::size_t next = 0;
  auto collect = [&] {
    EvalDone d = pool.Next();
    if (d.record.ok()) out[static_cast<std::size_t>(d.job.tag)] = d.record.val_logloss;
  };
  while (next < archs.size()) {
    if (pool.in_flight() >= pool.workers()) collect();
    pool.Submit({archs[next], EvalSeed(seed, next), static_cast<std::int64_t>(next)});
    ++next;
  }
  while (pool.in_flight() > 0) collect();
  return out;
}

std::vector<double> SeedMean(const std::vector<std::vector<double>>& per_seed) {
  std::vector<double> mean(per_seed.front().size(), 0.0);
  for (const auto& run : per_seed) {
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += run[i];
  }
  for (double& m : mean) m /= static_cast<double>(per_seed.size());
  return mean;  // +inf propagates from any failed seed
}

std::optional<double> Median(std::vector<double> v) {
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

ConsistencyResult RankConsistencyExperiment(const std::vector<Architecture>& archs,
                                            const CtrDataset& data,
                                            const ConsistencyConfig& cfg) {
  cfg.Check(data.size(), archs.size());
  const std::size_t ref_size = *std::max_element(cfg.sizes.begin(), cfg.sizes.end());
  auto run_cell = [&](std::size_t size, FidelityStrategy strategy) {
    std::vector<std::vector<double>> runs;
    for (std::uint64_t seed : cfg.seeds) {
      runs.push_back(EvaluateAll(archs, data, CellFidelity(cfg, size, strategy, seed), cfg, seed));
    }
    return runs;
  };

  ConsistencyResult result;
  const auto reference_runs = run_cell(ref_size, FidelityStrategy::kEs);
  result.reference = SeedMean(reference_runs);

  for (std::size_t size : cfg.sizes) {
    for (FidelityStrategy strategy : cfg.strategies) {
      ConsistencyCell cell;
      cell.size = size;
      cell.strategy = strategy;
      cell.logloss = (size == ref_size && strategy == FidelityStrategy::kEs)
                         ? reference_runs
                         : run_cell(size, strategy);
      cell.mean_logloss = SeedMean(cell.logloss);

      std::vector<std::size_t> valid;
      for (std::size_t i = 0; i < archs.size(); ++i) {
        if (std::isfinite(result.reference[i]) && std::isfinite(cell.mean_logloss[i])) {
          valid.push_back(i);
        }
      }
      cell.n_valid = valid.size();
      cell.n_failed = archs.size() - valid.size();
      std::vector<double> ref, mean;
      for (std::size_t i : valid) {
        ref.push_back(result.reference[i]);
        mean.push_back(cell.mean_logloss[i]);
      }

      std::vector<double> taus;
      for (const auto& run : cell.logloss) {
        std::vector<double> est;
        for (std::size_t i : valid) est.push_back(run[i]);
        std::optional<double> tau;
        if (valid.size() >= 2) tau = KendallTauB(ref, est);
        cell.tau.push_back(tau);
        if (tau) taus.push_back(*tau);
      }
      cell.tau_median = Median(taus);

      if (valid.size() >= cfg.window) cell.windows = SlidingWindowTau(ref, mean, cfg.window);
      if (!valid.empty()) {
        const std::vector<double> grades = GradesFromAscending(ref);
        std::vector<double> scores;
        for (double m : mean) scores.push_back(-m);
        for (std::size_t k = 1; k <= valid.size(); ++k) {
          cell.ndcg.push_back(NdcgOfScores(grades, scores, static_cast<int>(k)));
        }
      }
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

namespace {

std::ofstream OpenCsv(const std::filesystem::path& path, const char* header) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << header << '\n';
  return out;
}

std::string FormatTau(const std::optional<double>& tau) {
  return tau ? FormatFixed(*tau) : "nan";
}

}  // namespace

void WriteGlobalTauCsv(const std::filesystem::path& path, const ConsistencyResult& r) {
  auto out = OpenCsv(path, "size,strategy,tau_b,n_valid,n_failed");
  for (const auto& c : r.cells) {
    out << c.size << ',' << FidelityStrategyName(c.strategy) << ',' << FormatTau(c.tau_median)
        << ',' << c.n_valid << ',' << c.n_failed << '\n';
  }
}

void WriteSlidingWindowCsv(const std::filesystem::path& path, const ConsistencyResult& r) {
  auto out = OpenCsv(path, "size,strategy,center,tau_b");
  for (const auto& c : r.cells) {
    for (const auto& w : c.windows) {
      out << c.size << ',' << FidelityStrategyName(c.strategy) << ',' << w.center << ','
          << FormatTau(w.tau) << '\n';
    }
  }
}

void WriteNdcgCsv(const std::filesystem::path& path, const ConsistencyResult& r) {
  auto out = OpenCsv(path, "size,strategy,k,ndcg");
  for (const auto& c : r.cells) {
    for (std::size_t k = 0; k < c.ndcg.size(); ++k) {
      out << c.size << ',' << FidelityStrategyName(c.strategy) << ',' << (k + 1) << ','
          << FormatFixed(c.ndcg[k]) << '\n';
    }
  }
}

std::vector<Architecture> SampleDistinctArchs(std::size_t n, std::uint64_t seed, bool allow_empty,
                                              const ArchConstraint& constraint) {
  Rng rng(seed);
  std::vector<Architecture> out;
  std::set<ArchVector> seen;
  const std::size_t max_draws = 1000 * n + 1000;
  for (std::size_t draws = 0; out.size() < n; ++draws) {
    if (draws >= max_draws) {
      throw Error(ErrorCode::kExhausted, "could not draw enough distinct architectures");
    }
    Architecture a = RandomArchWithin(rng, allow_empty, constraint);
    if (seen.insert(Encode(a)).second) out.push_back(std::move(a));
  }
  return out;
}

}  // namespace ctrnas

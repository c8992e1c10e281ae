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


// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned
// below. Usage: acceptance [criterion numbers...] (default: all).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cli.h"
#include "ctrnas/ablation.h"
#include "ctrnas/arch_oracle.h"
#include "ctrnas/autoctr.h"
#include "ctrnas/consistency.h"
#include "ctrnas/ctr_model.h"
#include "ctrnas/data.h"
#include "ctrnas/evaluator.h"
#include "ctrnas/guider.h"
#include "ctrnas/lanas.h"
#include "ctrnas/metrics.h"
#include "ctrnas/random_search.h"
#include "ctrnas/search_space.h"
#include "model_oracles.h"
#include "oracles.h"

namespace ctrnas {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string Fmt(double v, int digits = 6) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

// 1. Parent-selection probabilities.
Outcome ParentProbExactness() {
  constexpr double kTol = 1e-12;
  double worst_sum = 0.0, worst_uniform = 0.0, worst_linear = 0.0;
  for (int lambda : {0, 1, 5, 10, 25, 50}) {
    for (int p = 1; p <= 1000; ++p) {
      long double sum = 0.0;
      for (int r = 1; r <= p; ++r) {
        const double pr = ParentProb(r, p, lambda);
        sum += pr;
        if (lambda == 0) worst_uniform = std::max(worst_uniform, std::abs(pr - 1.0 / p));
        if (lambda == 1) {
          const double expect = 2.0 * r / (static_cast<double>(p) * (p + 1));
          worst_linear = std::max(worst_linear, std::abs(pr - expect) / expect);
        }
      }
      worst_sum = std::max(worst_sum, std::abs(static_cast<double>(sum) - 1.0));
    }
  }
  const bool pass = worst_sum <= kTol && worst_uniform == 0.0 && worst_linear <= kTol;
  return {pass, "max |Σ−1| = " + Fmt(worst_sum) + ", λ=0 max dev = " + Fmt(worst_uniform) +
                    ", λ=1 max rel dev from 2r/(p(p+1)) = " + Fmt(worst_linear)};
}

// 2. Survivor selection against brute force.
Outcome SurvivorOracle() {
  Rng rng(2);
  std::uniform_int_distribution<int> size(1, 500), pop(1, 150), win(0, 400), mu_level(0, 4);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto log = testing::RandomSurvivalLog(rng, size(rng));
    SearchConfig cfg;
    cfg.population = pop(rng);
    cfg.q_window = win(rng);
    cfg.mu = {0.25 * mu_level(rng), 0.25 * mu_level(rng), 0.25 * mu_level(rng)};
    cfg.age_filter = trial % 5 != 0;
    cfg.init_size = std::min<int>(100, static_cast<int>(log.size()));
    const auto view = SurvivorSelect(log, cfg, static_cast<long>(log.size()));
    const auto brute = testing::BruteSurvivors(log, cfg.population, cfg.q_window, cfg.mu,
                                               cfg.age_filter, cfg.init_size);
    bool same = view.members.size() == brute.size();
    for (std::size_t i = 0; same && i < brute.size(); ++i) {
      same = view.members[i].record->birth_index == brute[i];
    }
    mismatches += !same;
  }
  return {mismatches == 0, std::to_string(mismatches) + "/1000 logs disagree with brute force"};
}

// 3. Encoding soundness and space size.
Outcome EncodingSoundness() {
  Rng rng(3);
  int bad_roundtrip = 0;
  for (int i = 0; i < 10000; ++i) {
    const Architecture a = RandomArch(rng, true);
    bad_roundtrip += Decode(Encode(a)) != a;
  }
  bool sizes_ok = true;
  std::string sizes;
  for (int k = 1; k <= 3; ++k) {
    const std::uint64_t enumerated = testing::EnumerateSpace(k, true);
    sizes += " k=" + std::to_string(k) + ": " + std::to_string(SpaceSize(k, true)) + "/" +
             std::to_string(enumerated);
    sizes_ok &= enumerated == SpaceSize(k, true);
  }
  const std::uint64_t full = SpaceSize(7, true);
  const bool pass = bad_roundtrip == 0 && sizes_ok && full >= 100000000000ull;
  return {pass, std::to_string(bad_roundtrip) + " round-trip failures;" + sizes +
                    "; space_size(7) = " + std::to_string(full)};
}

// 4. Analytic vs finite-difference gradients.
Outcome GradientCorrectness() {
  constexpr double kTol = 1e-3;
  SyntheticRecipe recipe;
  recipe.n_dense = 2;
  recipe.cardinalities = {3, 4};
  recipe.embedding_dim = 3;
  recipe.latent_dim = 2;
  recipe.pairs = {{0, 1, 1.0}};
  const auto data = SyntheticCtr(4, 6, recipe);
  const Batch batch = MakeBatch(data);
  ArchConstraint tiny;
  tiny.max_blocks = 3;
  tiny.units = {32};
  Rng rng(4);
  std::normal_distribution<double> n01;
  std::map<std::string, int> covered;
  int models = 0;
  double worst = 0.0;
  std::string worst_where;
  auto enough = [&] {
    for (const char* k : {"mlp", "fm", "dp", "align", "embedding", "final"}) {
      if (covered[k] < 3) return false;
    }
    return models >= 20;
  };
  while (!enough() && models < 200) {
    const Architecture a = RandomArchWithin(rng, true, tiny);
    auto m = Build<double>(a, data.spec, rng);
    for (auto& e : m.embeddings) {
      for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = 0.5 * n01(rng);
    }
    for (int i = 0; i < kNumBlocks; ++i) {
      if (a.blocks[i].type == BlockType::kMlp) ++covered["mlp"];
      if (a.blocks[i].type == BlockType::kFm) ++covered["fm"];
      if (a.blocks[i].type == BlockType::kDp) ++covered["dp"];
      if (m.blocks[i].align) ++covered["align"];
    }
    ++covered["embedding"];
    ++covered["final"];
    const auto r = testing::CheckGradients(m, batch);
    if (r.worst_rel_error >= worst) {
      worst = r.worst_rel_error;
      worst_where = r.worst_tensor;
    }
    ++models;
  }
  std::string cov;
  for (const auto& [k, v] : covered) cov += " " + k + "=" + std::to_string(v);
  return {enough() && worst < kTol, std::to_string(models) + " models, worst rel error " +
                                        Fmt(worst) + " (" + worst_where + "); coverage" + cov};
}

// 5. Metric oracles.
Outcome MetricOracles() {
  constexpr double kTol = 1e-12;
  Rng rng(5);
  double worst_tau = 0.0, worst_auc = 0.0, worst_ndcg = 0.0;
  int inputs = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t n = 2 + trial * 2;
    std::uniform_int_distribution<int> lv(0, 6), lab(0, 1);
    std::vector<double> x(n), y(n), labels(n), rel(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = lv(rng);
      y[i] = lv(rng) * 0.5;
      labels[i] = lab(rng);
      rel[i] = lv(rng) % 4;
    }
    labels[0] = 0;
    labels[1] = 1;
    const auto tau = KendallTauB(x, y);
    const auto ref = testing::BruteTauB(x, y);
    if (tau.has_value() != ref.has_value()) worst_tau = 1.0;
    if (tau && ref) worst_tau = std::max(worst_tau, std::abs(*tau - *ref));
    worst_auc = std::max(worst_auc, std::abs(Auc(labels, y) - testing::BruteAuc(labels, y)));
    for (int k : {1, 3, 10}) {
      worst_ndcg = std::max(worst_ndcg,
                            std::abs(NdcgOfScores(rel, x, k) - testing::BruteNdcg(rel, x, k)));
    }
    ++inputs;
  }
  const bool pass = worst_tau <= kTol && worst_auc <= kTol && worst_ndcg <= kTol;
  return {pass, std::to_string(inputs) + " tie-heavy inputs; max |Δτ_b| = " + Fmt(worst_tau) +
                    ", |ΔAUC| = " + Fmt(worst_auc) + ", |ΔNDCG| = " + Fmt(worst_ndcg)};
}

// 6. Searcher efficacy on the architecture oracle.
Outcome SearcherEfficacy() {
  OracleEvaluator oracle;
  std::vector<double> autoctr, random, lanas;
  int strictly_better = 0;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SearchConfig sc;
    sc.init_size = 100;
    sc.budget = 400;
    const double a = AutoCtrSearch(oracle, sc, seed).best()->val_logloss;
    RandomSearchConfig rc;
    rc.budget = 400;
    const double r = RandomSearch(oracle, rc, seed).best()->val_logloss;
    LanasConfig lc;
    lc.init_size = 100;
    lc.budget = 400;
    const double l = LanasSearch(oracle, lc, seed).best()->val_logloss;
    autoctr.push_back(a);
    random.push_back(r);
    lanas.push_back(l);
    strictly_better += a < r;
    per_seed += " [" + Fmt(a) + " " + Fmt(r) + " " + Fmt(l) + "]";
  }
  const bool pass = Median(autoctr) <= Median(random) && strictly_better >= 4 &&
                    Median(lanas) <= Median(random);
  return {pass, "median autoctr " + Fmt(Median(autoctr)) + ", random " + Fmt(Median(random)) +
                    ", lanas+ " + Fmt(Median(lanas)) + "; autoctr strictly better in " +
                    std::to_string(strictly_better) + "/5; per seed [autoctr random lanas+]" +
                    per_seed};
}

// 7. Desk-scale CTR analog.
Outcome DeskScaleCtr() {
  constexpr double kMargin = 0.01;
  const CtrDataset data = SyntheticCtr(7, 100000, SyntheticRecipe{});
  const DataSplits full = SplitPositional(data, {0.8, 0.1, 0.1});
  const double baseline = testing::FitDenseLogistic(full.train).Logloss(full.val);

  TrainConfig search_train;
  search_train.batch_size = 256;
  search_train.learning_rate = 3e-3;
  search_train.max_epochs = 2;
  search_train.patience = 1;
  TrainConfig retrain = search_train;
  retrain.max_epochs = 5;
  retrain.patience = 2;

  std::vector<double> retrained, best_any, best_mlp;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    FidelityConfig fid;
    fid.subsample_rows = 20000;
    fid.subsample_mode = SubsampleMode::kRandom;
    fid.subsample_seed = seed;
    fid.hash_cap.reset();
    TrainConfig tc = search_train;
    tc.seed = seed;
    TrainingEvaluator ev(data, fid, tc);
    SearchConfig sc;
    sc.init_size = 50;
    sc.budget = 150;
    const auto any = AutoCtrSearch(ev, sc, seed).best();
    sc.constraint = ArchConstraint::MlpOnly();
    const auto mlp = AutoCtrSearch(ev, sc, seed).best();
    FidelityConfig full_fid;
    full_fid.hash_cap.reset();
    TrainConfig rt = retrain;
    rt.seed = seed;
    const auto final_rec = EvaluateArch(any->arch, data, full_fid, rt, nullptr, seed);
    retrained.push_back(final_rec.val_logloss);
    best_any.push_back(any->val_logloss);
    best_mlp.push_back(mlp->val_logloss);
    per_seed += " [" + Fmt(any->val_logloss) + " " + Fmt(mlp->val_logloss) + " " +
                Fmt(final_rec.val_logloss) + "]";
  }
  const bool beats_baseline = Median(retrained) <= baseline - kMargin;
  const bool mlp_not_better = Median(best_mlp) >= Median(best_any);
  return {beats_baseline && mlp_not_better,
          "dense-only logistic val logloss " + Fmt(baseline) + ", median retrained best " +
              Fmt(Median(retrained)) + " (need ≤ baseline − " + Fmt(kMargin) +
              "); median search best unrestricted " + Fmt(Median(best_any)) + " vs MLP-only " +
              Fmt(Median(best_mlp)) + "; per seed [unrestricted mlp-only retrained]" + per_seed};
}

// 8. Guider quality on a monotone ranking set, plus the guider ablation.
Outcome GuiderQuality() {
  constexpr double kNdcg = 0.8, kTau = 0.9;
  // Ground truth is monotone in an injective mixed-radix key of block 1's
  // type, block 1's raw input and block 2's type.
  auto key = [](const Architecture& a) {
    return 16 * static_cast<int>(a.blocks[0].type) + 4 * static_cast<int>(a.blocks[0].raw) +
           static_cast<int>(a.blocks[1].type);
  };
  Rng rng(8);
  std::vector<EvalRecord> train, held;
  for (int i = 0; i < 500; ++i) {
    EvalRecord r;
    r.arch = RandomArch(rng, true);
    r.val_logloss = 0.5 - 0.001 * key(r.arch);
    r.birth_index = i + 1;
    (i < 400 ? train : held).push_back(r);
  }
  const GuiderModel model = TrainRankGuider(MakeRelevance(train), GuiderConfig{});
  std::vector<double> truth, score;
  for (const auto& r : held) {
    truth.push_back(-r.val_logloss);
    score.push_back(model.Score(Encode(r.arch)));
  }
  // Held-out architectures graded by their ground-truth rank.
  const RankTrainingSet held_rel = MakeRelevance(held);
  const double ndcg = NdcgOfScores(held_rel.relevance, score, 3);
  const double tau = KendallTauB(truth, score).value_or(-1.0);

  OracleEvaluator oracle;
  SearchConfig base;
  base.init_size = 30;
  base.budget = 60;
  base.population = 20;
  base.n_neighbors = 20;
  const auto abl = RunAblation(oracle, AblationAxis::kGuider, base, {0});
  bool abl_ok = abl.runs.size() == 3;
  std::string modes;
  for (const auto& run : abl.runs) {
    abl_ok &= run.result.log.size() == 60u && !run.result.truncated;
    modes += " " + run.setting + "=" + Fmt(run.result.best()->val_logloss);
  }
  return {ndcg >= kNdcg && tau >= kTau && abl_ok,
          "held-out NDCG@3 " + Fmt(ndcg) + " (≥ " + Fmt(kNdcg) + "), held-out τ_b " + Fmt(tau) +
              " (≥ " + Fmt(kTau) + "); early-stopping holdout NDCG@3 " +
              Fmt(model.holdout_metric.value_or(0.0)) + ", " + std::to_string(model.trees.size()) +
              " trees" +
              "; ablation runs completed:" + modes};
}

// 9. Rank-consistency trend and window shape.
Outcome RankConsistency() {
  const CtrDataset data = SyntheticCtr(9, 100000, SyntheticRecipe{});
  ArchConstraint cons;
  cons.max_blocks = 5;
  cons.units = {128};
  const auto archs = SampleDistinctArchs(20, 9, true, cons);
  ConsistencyConfig cfg;
  cfg.sizes = {5000, 20000, 80000};
  cfg.seeds = {0, 1, 2};
  cfg.window = 10;
  cfg.train.batch_size = 256;
  cfg.train.learning_rate = 3e-3;
  cfg.train.max_epochs = 2;
  cfg.train.patience = 1;
  const auto r = RankConsistencyExperiment(archs, data, cfg);
  std::vector<double> taus;
  bool windows_ok = true;
  std::string series;
  for (const auto& cell : r.cells) {
    taus.push_back(cell.tau_median.value_or(-2.0));
    series += " " + std::to_string(cell.size) + ":" + Fmt(taus.back()) + "(valid " +
              std::to_string(cell.n_valid) + ")";
    const std::size_t expect = cell.n_valid >= cfg.window ? cell.n_valid - cfg.window + 1 : 0;
    windows_ok &= cell.windows.size() == expect;
    windows_ok &= !cell.windows.empty() && cell.windows.front().center == cfg.window / 2;
  }
  const bool increasing = std::is_sorted(taus.begin(), taus.end());
  return {increasing && windows_ok,
          "median global τ_b by size" + series + (increasing ? " (weakly increasing)" : " (not monotone)") +
              "; sliding windows " + (windows_ok ? "n − w + 1 rows, first center w/2" : "WRONG SHAPE")};
}

// 10. Complexity closed forms (derivation in ctr_model_test.cc).
Outcome ComplexityClosedForms() {
  FeatureSpec spec;
  spec.n_dense = 3;
  spec.sparse_fields = {{"c0", 5, std::nullopt}, {"c1", 7, std::nullopt}};
  spec.embedding_dim = 4;
  const auto dlrm = Complexity(Preset(PresetName::kDlrmLike), spec);
  const auto deepfm = Complexity(Preset(PresetName::kDeepFmLike), spec);
  const bool pass = dlrm.n_params == 185717 && dlrm.flops == 371376 &&
                    deepfm.n_params == 36146 && deepfm.flops == 72203;
  return {pass, "dlrm_like " + std::to_string(dlrm.n_params) + "/" + std::to_string(dlrm.flops) +
                    " (hand 185717/371376), deepfm_like " + std::to_string(deepfm.n_params) +
                    "/" + std::to_string(deepfm.flops) + " (hand 36146/72203)"};
}

// 11. Byte-identical replay of single-worker runs.
Outcome Replay() {
  const fs::path root = fs::temp_directory_path() / "ctrnas_acceptance_replay";
  fs::remove_all(root);
  struct Case {
    std::string name;
    cli::SearchOptions options;
  };
  std::vector<Case> cases;
  {
    cli::SearchOptions o;
    o.searcher = "autoctr";
    o.seed = 11;
    o.data.kind = "synthetic";
    o.data.rows = 5000;
    o.data.seed = 11;
    o.search.init_size = 8;
    o.search.budget = 16;
    o.search.workers = 1;
    o.search.n_neighbors = 10;
    o.train.batch_size = 256;
    o.train.max_epochs = 1;
    o.train.seed = 11;
    o.fidelity.hash_cap.reset();
    cases.push_back({"autoctr-synthetic", o});
  }
  for (const char* searcher : {"random", "lanas+", "autoctr"}) {
    cli::SearchOptions o;
    o.searcher = searcher;
    o.seed = 12;
    o.data.kind = "oracle";
    o.search.init_size = 40;
    o.search.budget = 120;
    o.search.workers = 1;
    o.lanas.init_size = 40;
    o.lanas.budget = 120;
    cases.push_back({std::string(searcher) + "-oracle", o});
  }
  bool pass = true;
  std::string detail;
  for (const auto& c : cases) {
    const fs::path run = root / c.name;
    std::ostringstream log, out, err;
    const int code = cli::RunSearch(c.options, run, log);
    const std::string manifest = (run / "manifest.json").string();
    const char* argv[] = {"ctrnas", "replay", "--manifest", manifest.c_str()};
    const int replay_code = cli::Main(4, argv, out, err);
    auto slurp = [](const fs::path& p) {
      std::ifstream in(p, std::ios::binary);
      return std::string(std::istreambuf_iterator<char>(in), {});
    };
    const std::string a = slurp(run / "eval_log.jsonl");
    const std::string b = slurp(run / "replay" / "eval_log.jsonl");
    const bool ok = code == 0 && replay_code == 0 && !a.empty() && a == b;
    pass &= ok;
    detail += " " + c.name + (ok ? "=identical(" + std::to_string(a.size()) + "B)" : "=MISMATCH");
  }
  fs::remove_all(root);
  return {pass, "eval logs:" + detail};
}

// Oracle scores with random latency so completions interleave.
class JitteredEvaluator : public ArchEvaluator {
 public:
  EvalRecord Evaluate(const Architecture& arch, std::uint64_t seed) const override {
    std::this_thread::sleep_for(std::chrono::microseconds(200 + seed % 3000));
    EvalRecord r = oracle_.Evaluate(arch, seed);
    if (seed % 11 == 0) {
      r.failed = true;
      r.error = "injected failure";
      r.val_logloss = std::numeric_limits<double>::infinity();
    }
    return r;
  }
  nlohmann::json Describe() const override { return "jittered-oracle"; }

 private:
  OracleEvaluator oracle_;
};

// 12. Virtual-loss accounting under parallel completion.
Outcome VirtualLossAccounting() {
  JitteredEvaluator ev;
  Rng rng(12);
  std::vector<EvalRecord> init(60);
  for (int i = 0; i < 60; ++i) {
    init[i].arch = RandomArch(rng, true);
    init[i].val_logloss = ArchOracle(init[i].arch);
    init[i].birth_index = i + 1;
  }
  PartitionTree parallel = PartitionTree::Fit(init, 5);
  PartitionTree serial = parallel;
  EvalPool pool(ev, 3);
  std::map<std::int64_t, std::pair<int, LeafChoice>> in_flight;  // tag → (slot, path)
  int completed = 0, failed = 0, out_of_order = 0;
  std::int64_t last_tag = -1;
  auto complete = [&] {
    const EvalDone done = pool.Next();
    auto [slot, path] = in_flight.at(done.job.tag);
    in_flight.erase(done.job.tag);
    std::optional<double> loss;
    if (done.record.ok()) loss = done.record.val_logloss;
    parallel.ClearVirtual(slot, loss);
    if (loss) serial.Backprop(path, *loss);
    failed += !loss;
    out_of_order += done.job.tag < last_tag;
    last_tag = std::max(last_tag, done.job.tag);
    ++completed;
  };
  Rng rollout(13);
  std::uniform_int_distribution<std::uint64_t> seeds;
  for (std::int64_t tag = 0; tag < 200; ++tag) {
    if (pool.in_flight() >= pool.workers()) complete();
    const LeafChoice path = parallel.SelectLeaf(0.5);
    const Architecture arch = RolloutEvolutionary(parallel, path, init, rollout);
    const int slot = parallel.AddVirtual(path, parallel.VirtualValue(path.leaf));
    in_flight[tag] = {slot, path};
    pool.Submit({arch, seeds(rollout), tag});
  }
  while (pool.in_flight() > 0) complete();

  int mismatched_nodes = 0;
  for (int i = 0; i < parallel.num_nodes(); ++i) {
    mismatched_nodes += parallel.node(i).visits != serial.node(i).visits ||
                        parallel.node(i).loss_sum != serial.node(i).loss_sum ||
                        parallel.EffectiveVisits(i) != parallel.node(i).visits;
  }
  // The full searcher with three workers must also drain every slot.
  LanasConfig lc;
  lc.init_size = 40;
  lc.budget = 120;
  lc.workers = 3;
  PartitionTree final_tree;
  LanasSearch(ev, lc, 14, {}, &final_tree);
  const bool pass = mismatched_nodes == 0 && parallel.outstanding() == 0 &&
                    final_tree.outstanding() == 0 && completed == 200;
  return {pass, std::to_string(completed) + " completions (" + std::to_string(failed) +
                    " failed, " + std::to_string(out_of_order) + " out of submission order); " +
                    std::to_string(mismatched_nodes) + "/" + std::to_string(parallel.num_nodes()) +
                    " nodes differ from the serial replay; outstanding after drain: " +
                    std::to_string(parallel.outstanding()) + " (simulation), " +
                    std::to_string(final_tree.outstanding()) + " (3-worker search)"};
}

struct Criterion {
  int id;
  const char* name;
  double time_limit_s;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace ctrnas

int main(int argc, char** argv) {
  using namespace ctrnas;
  const std::vector<Criterion> all = {
      {1, "parent-selection probabilities", 1, ParentProbExactness},
      {2, "survivor selection vs brute force", 10, SurvivorOracle},
      {3, "encoding soundness and space size", 60, EncodingSoundness},
      {4, "gradient correctness", 60, GradientCorrectness},
      {5, "metric oracles", 10, MetricOracles},
      {6, "searcher efficacy on the architecture oracle", 120, SearcherEfficacy},
      {7, "desk-scale CTR analog", 1800, DeskScaleCtr},
      {8, "guider quality", 60, GuiderQuality},
      {9, "rank-consistency harness", 1200, RankConsistency},
      {10, "complexity closed forms", 1, ComplexityClosedForms},
      {11, "byte-identical replay", 600, Replay},
      {12, "virtual-loss accounting", 600, VirtualLossAccounting},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.time_limit_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("criterion %2d %s: %s — %s [%.2f s, limit %.0f s%s]\n", c.id, c.name,
                pass ? "PASS" : "FAIL", o.detail.c_str(), secs, c.time_limit_s,
                in_time ? "" : ", OVER TIME");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

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


#include "cli.h"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "ctrnas/ablation.h"
#include "ctrnas/arch_oracle.h"
#include "ctrnas/consistency.h"
#include "ctrnas/error.h"
#include "ctrnas/eval_log.h"
#include "ctrnas/guider.h"
#include "ctrnas/random_search.h"
#include "ctrnas/search_common.h"

#ifndef CTRNAS_VERSION
#define CTRNAS_VERSION "unknown"
#endif

namespace ctrnas::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::atomic<bool>& StopFlag() {
  static std::atomic<bool> flag{false};
  return flag;
}

namespace {

json ReadJsonFile(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

void WriteJsonFile(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

std::string UtcNow() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool SameBytes(const fs::path& a, const fs::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  return sa.str() == sb.str();
}

// Manifest written at start (status "running") and again on exit.
class Manifest {
 public:
  Manifest(std::string command, json options, fs::path dir)
      : dir_(std::move(dir)),
        j_{{"command", std::move(command)},
           {"version", CTRNAS_VERSION},
           {"options", std::move(options)},
           {"started_at", UtcNow()},
           {"finished_at", nullptr},
           {"status", "running"},
           {"outputs", json::object()}} {
    Write();
  }

  void Output(const std::string& name, const fs::path& file) {
    j_["outputs"][name] = (dir_ / file).string();
  }

  void Finish(bool truncated) {
    j_["finished_at"] = UtcNow();
    j_["status"] = truncated ? "truncated" : "complete";
    Write();
  }

 private:
  void Write() const { WriteJsonFile(dir_ / "manifest.json", j_); }

  fs::path dir_;
  json j_;
};

fs::path DefaultOutDir(const std::string& command, std::uint64_t seed) {
  const char* root = std::getenv("CTRNAS_OUT_ROOT");
  return fs::path(root && *root ? root : "runs") / (command + "-seed" + std::to_string(seed));
}

std::unique_ptr<ArchEvaluator> MakeEvaluator(const DataSource& source,
                                             std::optional<CtrDataset>& storage,
                                             const FidelityConfig& fidelity,
                                             const TrainConfig& train) {
  if (source.kind == "oracle") return std::make_unique<OracleEvaluator>();
  storage = source.Load();
  return std::make_unique<TrainingEvaluator>(*storage, fidelity, train);
}

// Flag groups shared between subcommands.
struct DataFlags {
  std::string data = "synthetic";
  std::string schema;
  std::size_t rows = 100000;
  std::uint64_t data_seed = 0;

  void Add(CLI::App* app, const std::string& default_data) {
    data = default_data;
    app->add_option("--data", data, "oracle | synthetic[:recipe.json] | <file.csv>")
        ->capture_default_str();
    app->add_option("--schema", schema, "column-role schema JSON for CSV data");
    app->add_option("--rows", rows, "rows of synthetic data")->capture_default_str();
    app->add_option("--data-seed", data_seed, "seed of synthetic data")->capture_default_str();
  }
  DataSource Build() const { return DataSource::Parse(data, schema, rows, data_seed); }
};

struct TrainFlags {
  TrainConfig cfg;

  void Add(CLI::App* app) {
    app->add_option("--batch-size", cfg.batch_size)->capture_default_str();
    app->add_option("--lr", cfg.learning_rate)->capture_default_str();
    app->add_option("--epochs", cfg.max_epochs)->capture_default_str();
    app->add_option("--patience", cfg.patience)->capture_default_str();
    app->add_option("--eval-interval", cfg.eval_interval, "steps between validations; 0 = epoch")
        ->capture_default_str();
  }
};

struct FidelityFlags {
  std::optional<std::size_t> subsample;
  std::string mode = "head";
  std::int64_t hash_cap = 10000;
  bool warm_start = false;

  void Add(CLI::App* app) {
    app->add_option("--subsample", subsample, "rows kept before splitting");
    app->add_option("--subsample-mode", mode)
        ->check(CLI::IsMember({"head", "random"}))
        ->capture_default_str();
    app->add_option("--hash-cap", hash_cap, "hash size; 0 disables hashing")
        ->capture_default_str();
    app->add_flag("--warm-start", warm_start, "warm-start embeddings");
  }
  FidelityConfig Build(std::uint64_t seed) const {
    FidelityConfig f;
    f.subsample_rows = subsample;
    f.subsample_mode = mode == "random" ? SubsampleMode::kRandom : SubsampleMode::kHead;
    f.subsample_seed = seed;
    f.hash_cap = hash_cap > 0 ? std::optional<std::int64_t>(hash_cap) : std::nullopt;
    f.warm_start = warm_start;
    return f;
  }
};

struct ConstraintFlags {
  bool mlp_only = false;
  int max_blocks = kNumBlocks;
  std::vector<int> units;
  bool no_empty = false;

  void Add(CLI::App* app) {
    app->add_flag("--mlp-only", mlp_only, "restrict blocks to MLP");
    app->add_option("--max-blocks", max_blocks, "blocks beyond this count stay Empty")
        ->check(CLI::Range(1, kNumBlocks))
        ->capture_default_str();
    app->add_option("--units", units, "allowed MLP widths")->delimiter(',');
    app->add_flag("--no-empty", no_empty, "disallow Empty blocks");
  }
  ArchConstraint Build() const {
    ArchConstraint c = mlp_only ? ArchConstraint::MlpOnly() : ArchConstraint{};
    c.max_blocks = max_blocks;
    c.units = units;
    return c;
  }
};

struct SearchFlags {
  std::string searcher = "autoctr";
  std::uint64_t seed = 0;
  SearchConfig cfg;
  std::string guider = "rank";
  std::vector<double> mu = {1.0, 0.1, 0.1};
  bool no_age_filter = false;

  void Add(CLI::App* app, bool with_searcher) {
    cfg.workers = 3;
    if (with_searcher) {
      app->add_option("--searcher", searcher)
          ->check(CLI::IsMember({"autoctr", "random", "lanas+"}))
          ->capture_default_str();
    }
    app->add_option("--seed", seed)->capture_default_str();
    app->add_option("--budget", cfg.budget, "total evaluations")->capture_default_str();
    app->add_option("--init", cfg.init_size, "random initial evaluations")->capture_default_str();
    app->add_option("--workers", cfg.workers)->capture_default_str();
    app->add_option("--lambda", cfg.lambda)->capture_default_str();
    app->add_option("--population", cfg.population)->capture_default_str();
    app->add_option("--q-window", cfg.q_window)->capture_default_str();
    app->add_option("--mu", mu, "survival weights for age, fitness rank, complexity rank")
        ->expected(3)
        ->capture_default_str();
    app->add_flag("--no-age-filter", no_age_filter, "drop the age <= q window");
    app->add_option("--guider", guider)
        ->check(CLI::IsMember({"random", "regression", "rank"}))
        ->capture_default_str();
    app->add_option("--neighbors", cfg.n_neighbors, "mutations scored per offspring")
        ->capture_default_str();
  }
  SearchConfig Build(const ConstraintFlags& constraint) const {
    SearchConfig c = cfg;
    c.mu = {mu[0], mu[1], mu[2]};
    c.age_filter = !no_age_filter;
    c.guider = ParseGuiderKind(guider);
    c.constraint = constraint.Build();
    c.allow_empty = !constraint.no_empty;
    c.Check();
    return c;
  }
};

int Fail(std::ostream& err, const std::exception& e) {
  err << "error: " << e.what() << '\n';
  return 1;
}

}  // namespace

DataSource DataSource::Parse(const std::string& spec, const std::string& schema_path,
                             std::size_t rows, std::uint64_t seed) {
  DataSource d;
  d.rows = rows;
  d.seed = seed;
  if (spec == "oracle") {
    d.kind = "oracle";
  } else if (spec == "synthetic" || spec.rfind("synthetic:", 0) == 0) {
    d.kind = "synthetic";
    if (spec.size() > 10) d.recipe = SyntheticRecipe::FromJson(ReadJsonFile(spec.substr(10)));
    if (rows < 1) throw Error(ErrorCode::kInvalidArgument, "--rows must be >= 1");
  } else {
    if (schema_path.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "CSV data requires --schema");
    }
    d.kind = "csv";
    d.path = spec;
    d.schema = ReadJsonFile(schema_path);
  }
  return d;
}

json DataSource::ToJson() const {
  if (kind == "oracle") return {{"kind", kind}};
  if (kind == "csv") return {{"kind", kind}, {"path", path}, {"schema", schema}};
  return {{"kind", kind}, {"rows", rows}, {"seed", seed}, {"recipe", recipe.ToJson()}};
}

DataSource DataSource::FromJson(const json& j) {
  DataSource d;
  d.kind = j.at("kind").get<std::string>();
  if (d.kind == "csv") {
    d.path = j.at("path").get<std::string>();
    d.schema = j.at("schema");
  } else if (d.kind == "synthetic") {
    d.rows = j.at("rows").get<std::size_t>();
    d.seed = j.at("seed").get<std::uint64_t>();
    d.recipe = SyntheticRecipe::FromJson(j.at("recipe"));
  } else if (d.kind != "oracle") {
    throw Error(ErrorCode::kUnknownName, "data kind '" + d.kind + "'");
  }
  return d;
}

CtrDataset DataSource::Load() const {
  if (kind == "synthetic") return SyntheticCtr(seed, rows, recipe);
  if (kind == "csv") return LoadCsv(path, CsvSchema::FromJson(schema));
  throw Error(ErrorCode::kInvalidArgument, "the oracle has no dataset");
}

json SearchOptions::ToJson() const {
  return {{"searcher", searcher},          {"data", data.ToJson()},
          {"seed", seed},                  {"search", search.ToJson()},
          {"lanas", lanas.ToJson()},       {"fidelity", fidelity.ToJson()},
          {"train", train.ToJson()}};
}

SearchOptions SearchOptions::FromJson(const json& j) {
  SearchOptions o;
  o.searcher = j.at("searcher").get<std::string>();
  o.data = DataSource::FromJson(j.at("data"));
  o.seed = j.at("seed").get<std::uint64_t>();
  o.search = SearchConfig::FromJson(j.at("search"));
  o.lanas = LanasConfig::FromJson(j.at("lanas"));
  o.fidelity = FidelityConfig::FromJson(j.at("fidelity"));
  o.train = TrainConfig::FromJson(j.at("train"));
  return o;
}

int RunSearch(const SearchOptions& options, const fs::path& out_dir, std::ostream& log) {
  fs::create_directories(out_dir);
  Manifest manifest("search", options.ToJson(), out_dir);
  std::optional<CtrDataset> storage;
  const auto evaluator = MakeEvaluator(options.data, storage, options.fidelity, options.train);

  EvalLogWriter writer(out_dir / "eval_log.jsonl", out_dir / "timings.csv",
                       evaluator->Describe());
  manifest.Output("eval_log", "eval_log.jsonl");
  manifest.Output("timings", "timings.csv");
  SearchHooks hooks;
  hooks.stop = &StopFlag();
  double best = std::numeric_limits<double>::infinity();
  hooks.sink = [&](const EvalRecord& rec, double seconds) {
    writer.Append(rec, seconds);
    if (rec.ok() && rec.val_logloss < best) best = rec.val_logloss;
    if (rec.birth_index % 10 == 0) {
      log << "eval " << rec.birth_index << " best " << FormatFixed(best) << '\n';
    }
  };

  const SearchConfig& s = options.search;
  SearchResult result;
  std::optional<PartitionTree> tree;
  if (options.searcher == "autoctr") {
    result = AutoCtrSearch(*evaluator, s, options.seed, hooks);
  } else if (options.searcher == "random") {
    RandomSearchConfig r{s.budget, s.workers, s.allow_empty, s.constraint};
    result = RandomSearch(*evaluator, r, options.seed, hooks);
  } else if (options.searcher == "lanas+") {
    tree.emplace();
    result = LanasSearch(*evaluator, options.lanas, options.seed, hooks, &*tree);
  } else {
    throw Error(ErrorCode::kUnknownName, "searcher '" + options.searcher + "'");
  }

  if (const auto b = result.best()) {
    WriteJsonFile(out_dir / "best_arch.json", {{"arch", ArchToJson(b->arch)},
                                               {"birth_index", b->birth_index},
                                               {"val_logloss", b->val_logloss},
                                               {"val_auc", b->val_auc},
                                               {"flops", b->flops},
                                               {"n_params", b->n_params}});
  } else {
    WriteJsonFile(out_dir / "best_arch.json", json(nullptr));
  }
  manifest.Output("best_arch", "best_arch.json");
  WriteBestCurveCsv(out_dir / "best_curve.csv", result);
  manifest.Output("best_curve", "best_curve.csv");
  if (tree && tree->num_nodes() > 0) {
    WriteJsonFile(out_dir / "tree.json", tree->ToJson());
    manifest.Output("tree", "tree.json");
  }
  manifest.Finish(result.truncated && StopFlag().load());
  log << "evaluations " << result.log.size() << " best " << FormatFixed(best) << '\n';
  return StopFlag().load() ? 130 : 0;
}

namespace {

int RunReplay(const fs::path& manifest_path, std::optional<fs::path> out_dir, std::ostream& out) {
  const json m = ReadJsonFile(manifest_path);
  if (m.at("command") != "search") {
    throw Error(ErrorCode::kInvalidArgument, "only search runs can be replayed");
  }
  const SearchOptions options = SearchOptions::FromJson(m.at("options"));
  const fs::path dir = out_dir ? *out_dir : manifest_path.parent_path() / "replay";
  const int code = RunSearch(options, dir, out);
  if (code != 0) return code;
  const fs::path original = m.at("outputs").value("eval_log", std::string());
  if (original.empty() || !fs::exists(original)) {
    out << "replay: original eval log missing; nothing to compare\n";
    return 0;
  }
  const bool same = SameBytes(original, dir / "eval_log.jsonl");
  out << "replay: eval log " << (same ? "identical" : "differs") << '\n';
  if (!same && options.search.workers > 1) {
    out << "replay: multi-worker runs log completion order and are not replayable\n";
  }
  return same ? 0 : 3;
}

Architecture LoadArch(const std::string& spec) {
  if (ParsePresetName(spec)) return Preset(spec);
  json j = ReadJsonFile(spec);
  if (j.contains("arch")) j = j["arch"];
  return ArchFromJson(j);
}

std::vector<Architecture> LoadArchList(const fs::path& path) {
  const json j = ReadJsonFile(path);
  std::vector<Architecture> archs;
  for (const auto& a : j) archs.push_back(ArchFromJson(a.contains("arch") ? a["arch"] : a));
  return archs;
}

}  // namespace

int Main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Architecture search for CTR prediction models", "ctrnas"};
  app.require_subcommand(1);
  app.set_version_flag("--version", CTRNAS_VERSION);
  std::function<int()> action;
  std::optional<std::string> out_flag;

  // search
  auto* search = app.add_subcommand("search", "run a searcher and log every evaluation");
  DataFlags search_data;
  TrainFlags search_train;
  FidelityFlags search_fid;
  ConstraintFlags search_cons;
  SearchFlags search_flags;
  search_data.Add(search, "synthetic");
  search_train.Add(search);
  search_fid.Add(search);
  search_cons.Add(search);
  search_flags.Add(search, true);
  search->add_option("--out", out_flag, "output directory");
  search->callback([&] {
    action = [&] {
      SearchOptions o;
      o.searcher = search_flags.searcher;
      o.seed = search_flags.seed;
      o.data = search_data.Build();
      if (o.searcher == "random") {
        // No initial phase: keep --init from failing the budget check.
        search_flags.cfg.init_size = std::min(search_flags.cfg.init_size, search_flags.cfg.budget);
      }
      o.search = search_flags.Build(search_cons);
      o.lanas.init_size = o.search.init_size;
      o.lanas.budget = o.search.budget;
      o.lanas.workers = o.search.workers;
      o.lanas.allow_empty = o.search.allow_empty;
      o.lanas.constraint = o.search.constraint;
      o.lanas.Check();
      o.fidelity = search_fid.Build(o.seed);
      o.train = search_train.cfg;
      o.train.seed = o.seed;
      const fs::path dir = out_flag ? fs::path(*out_flag) : DefaultOutDir("search", o.seed);
      const int code = RunSearch(o, dir, out);
      out << "outputs in " << dir.string() << '\n';
      return code;
    };
  });

  // replay
  auto* replay = app.add_subcommand("replay", "re-run a search from its manifest");
  std::string manifest_path;
  replay->add_option("--manifest", manifest_path, "manifest.json of a search run")->required();
  replay->add_option("--out", out_flag, "output directory (default <run>/replay)");
  replay->callback([&] {
    action = [&] {
      return RunReplay(manifest_path, out_flag ? std::optional<fs::path>(*out_flag) : std::nullopt,
                       out);
    };
  });

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "train and score one architecture");
  DataFlags eval_data;
  TrainFlags eval_train;
  FidelityFlags eval_fid;
  std::string arch_spec;
  std::uint64_t eval_seed = 0;
  evaluate->add_option("--arch", arch_spec, "preset name or architecture JSON file")->required();
  evaluate->add_option("--seed", eval_seed)->capture_default_str();
  eval_data.Add(evaluate, "synthetic");
  eval_train.Add(evaluate);
  eval_fid.Add(evaluate);
  evaluate->add_option("--out", out_flag, "output directory");
  evaluate->callback([&] {
    action = [&] {
      const Architecture arch = LoadArch(arch_spec);
      const DataSource source = eval_data.Build();
      const FidelityConfig fidelity = eval_fid.Build(eval_seed);
      const fs::path dir = out_flag ? fs::path(*out_flag) : DefaultOutDir("evaluate", eval_seed);
      fs::create_directories(dir);
      Manifest manifest("evaluate",
                        {{"arch", ArchToJson(arch)}, {"seed", eval_seed},
                         {"data", source.ToJson()}, {"fidelity", fidelity.ToJson()},
                         {"train", eval_train.cfg.ToJson()}},
                        dir);
      std::optional<CtrDataset> storage;
      const auto evaluator = MakeEvaluator(source, storage, fidelity, eval_train.cfg);
      EvalRecord rec = evaluator->Evaluate(arch, eval_seed);
      rec.birth_index = 1;
      const json j = EvalRecordToJson(rec);
      WriteJsonFile(dir / "record.json", j);
      manifest.Output("record", "record.json");
      manifest.Finish(false);
      out << j.dump() << '\n';
      return 0;
    };
  });

  // rank-consistency
  auto* rank = app.add_subcommand("rank-consistency",
                                  "compare low-fidelity rankings with a reference fidelity");
  DataFlags rank_data;
  TrainFlags rank_train;
  ConstraintFlags rank_cons;
  std::string archs_spec = "100";
  std::uint64_t arch_seed = 0;
  std::vector<std::size_t> sizes;
  std::vector<std::string> strategies = {"es"};
  std::vector<std::uint64_t> rank_seeds = {0};
  std::size_t window = 30;
  std::int64_t rank_hash_cap = 10000;
  std::string rank_mode = "random";
  int rank_workers = 1;
  rank->add_option("--archs", archs_spec, "count of random architectures, or a JSON list file")
      ->capture_default_str();
  rank->add_option("--arch-seed", arch_seed, "seed for random architectures")
      ->capture_default_str();
  rank->add_option("--sizes", sizes, "subsample sizes; the largest is the reference")
      ->delimiter(',')
      ->required();
  rank->add_option("--strategies", strategies, "es, es+hash, es+warm")
      ->delimiter(',')
      ->check(CLI::IsMember({"es", "es+hash", "es+warm"}))
      ->capture_default_str();
  rank->add_option("--seeds", rank_seeds)->delimiter(',')->capture_default_str();
  rank->add_option("--window", window)->capture_default_str();
  rank->add_option("--hash-cap", rank_hash_cap)->capture_default_str();
  rank->add_option("--subsample-mode", rank_mode)
      ->check(CLI::IsMember({"head", "random"}))
      ->capture_default_str();
  rank->add_option("--workers", rank_workers)->capture_default_str();
  rank_data.Add(rank, "synthetic");
  rank_train.Add(rank);
  rank_cons.Add(rank);
  rank->add_option("--out", out_flag, "output directory");
  rank->callback([&] {
    action = [&] {
      const DataSource source = rank_data.Build();
      if (source.kind == "oracle") {
        throw Error(ErrorCode::kInvalidArgument, "rank consistency needs a dataset");
      }
      std::vector<Architecture> archs;
      if (!archs_spec.empty() &&
          archs_spec.find_first_not_of("0123456789") == std::string::npos) {
        archs = SampleDistinctArchs(std::stoul(archs_spec), arch_seed, !rank_cons.no_empty,
                                    rank_cons.Build());
      } else {
        archs = LoadArchList(archs_spec);
      }
      ConsistencyConfig cfg;
      cfg.sizes = sizes;
      cfg.strategies.clear();
      for (const auto& s : strategies) cfg.strategies.push_back(ParseFidelityStrategy(s));
      cfg.seeds = rank_seeds;
      cfg.window = window;
      cfg.hash_cap = rank_hash_cap;
      cfg.subsample_mode = rank_mode == "head" ? SubsampleMode::kHead : SubsampleMode::kRandom;
      cfg.train = rank_train.cfg;
      cfg.workers = rank_workers;
      const fs::path dir =
          out_flag ? fs::path(*out_flag) : DefaultOutDir("rank-consistency", rank_seeds.front());
      fs::create_directories(dir);
      json arch_json = json::array();
      for (const auto& a : archs) arch_json.push_back(ArchToJson(a));
      Manifest manifest("rank-consistency",
                        {{"data", source.ToJson()}, {"archs", arch_json}, {"config", cfg.ToJson()}},
                        dir);
      const CtrDataset data = source.Load();
      cfg.Check(data.size(), archs.size());
      const ConsistencyResult r = RankConsistencyExperiment(archs, data, cfg);
      WriteJsonFile(dir / "archs.json", arch_json);
      manifest.Output("archs", "archs.json");
      WriteGlobalTauCsv(dir / "global_tau.csv", r);
      manifest.Output("global_tau", "global_tau.csv");
      WriteSlidingWindowCsv(dir / "sliding_window.csv", r);
      manifest.Output("sliding_window", "sliding_window.csv");
      WriteNdcgCsv(dir / "ndcg.csv", r);
      manifest.Output("ndcg", "ndcg.csv");
      manifest.Finish(false);
      for (const auto& c : r.cells) {
        out << "size " << c.size << ' ' << FidelityStrategyName(c.strategy) << " tau_b "
            << (c.tau_median ? FormatFixed(*c.tau_median) : "nan") << '\n';
      }
      return 0;
    };
  });

  // ablation
  auto* ablation = app.add_subcommand("ablation", "sweep one searcher component");
  DataFlags abl_data;
  TrainFlags abl_train;
  FidelityFlags abl_fid;
  ConstraintFlags abl_cons;
  SearchFlags abl_flags;
  std::string axis;
  std::vector<std::uint64_t> abl_seeds = {0};
  ablation->add_option("--axis", axis, "lambda | guider | objective")
      ->check(CLI::IsMember({"lambda", "guider", "objective"}))
      ->required();
  ablation->add_option("--seeds", abl_seeds)->delimiter(',')->capture_default_str();
  abl_data.Add(ablation, "oracle");
  abl_train.Add(ablation);
  abl_fid.Add(ablation);
  abl_cons.Add(ablation);
  abl_flags.Add(ablation, false);
  ablation->add_option("--out", out_flag, "output directory");
  ablation->callback([&] {
    action = [&] {
      const DataSource source = abl_data.Build();
      const SearchConfig base = abl_flags.Build(abl_cons);
      const FidelityConfig fidelity = abl_fid.Build(abl_seeds.front());
      const fs::path dir =
          out_flag ? fs::path(*out_flag) : DefaultOutDir("ablation-" + axis, abl_seeds.front());
      fs::create_directories(dir);
      Manifest manifest("ablation",
                        {{"axis", axis}, {"seeds", abl_seeds}, {"data", source.ToJson()},
                         {"search", base.ToJson()}, {"fidelity", fidelity.ToJson()},
                         {"train", abl_train.cfg.ToJson()}},
                        dir);
      std::optional<CtrDataset> storage;
      const auto evaluator = MakeEvaluator(source, storage, fidelity, abl_train.cfg);
      SearchHooks hooks;
      hooks.stop = &StopFlag();
      const AblationResult r = RunAblation(
          *evaluator, ParseAblationAxis(axis), base, abl_seeds, hooks,
          [&](const std::string& setting, std::uint64_t seed) {
            out << "setting " << setting << " seed " << seed << '\n';
          });
      WriteAblationCurvesCsv(dir / "curves.csv", r);
      manifest.Output("curves", "curves.csv");
      WriteAblationSummaryCsv(dir / "summary.csv", r);
      manifest.Output("summary", "summary.csv");
      manifest.Finish(StopFlag().load());
      return StopFlag().load() ? 130 : 0;
    };
  });

  // importance
  auto* importance = app.add_subcommand("importance", "rank ArchVector coordinates by guider gain");
  std::string log_path;
  std::size_t n_random = 0;
  std::uint64_t imp_seed = 0;
  int top = 20;
  auto* log_opt = importance->add_option("--log", log_path, "eval_log.jsonl to learn from");
  importance
      ->add_option("--random", n_random, "score this many random architectures with the oracle")
      ->excludes(log_opt);
  importance->add_option("--seed", imp_seed)->capture_default_str();
  importance->add_option("--top", top)->check(CLI::PositiveNumber)->capture_default_str();
  importance->add_option("--out", out_flag, "output directory");
  importance->callback([&] {
    action = [&] {
      std::vector<EvalRecord> records;
      if (!log_path.empty()) {
        records = ReadEvalLog(log_path);
      } else if (n_random > 0) {
        OracleEvaluator oracle;
        const auto archs = SampleDistinctArchs(n_random, imp_seed);
        for (std::size_t i = 0; i < archs.size(); ++i) {
          records.push_back(oracle.Evaluate(archs[i], imp_seed));
          records.back().birth_index = static_cast<std::int64_t>(i) + 1;
        }
      } else {
        throw Error(ErrorCode::kInvalidArgument, "one of --log or --random is required");
      }
      const fs::path dir =
          out_flag ? fs::path(*out_flag) : DefaultOutDir("importance", imp_seed);
      fs::create_directories(dir);
      GuiderConfig gcfg;
      gcfg.seed = imp_seed;
      // Explaining a log wants every record; holdout early stopping on a
      // noisy NDCG@3 can keep zero trees.
      gcfg.holdout_fraction = 0.0;
      Manifest manifest("importance",
                        {{"log", log_path}, {"random", n_random}, {"seed", imp_seed},
                         {"top", top}, {"guider", gcfg.ToJson()}},
                        dir);
      const GuiderModel model = TrainRankGuider(MakeRelevance(records), gcfg);
      const auto rows = FeatureImportance(model, top);
      WriteImportanceCsv(dir / "importance.csv", rows);
      manifest.Output("importance", "importance.csv");
      manifest.Finish(false);
      for (const auto& r : rows) out << r.label << ' ' << FormatFixed(r.gain) << '\n';
      return 0;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  try {
    return action ? action() : 2;
  } catch (const Error& e) {
    return Fail(err, e);
  } catch (const std::exception& e) {
    return Fail(err, e);
  }
}

}  // namespace ctrnas::cli

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


// The ctrnas command-line tool: search, evaluate, replay, rank-consistency,
// ablation and importance. Every run writes manifest.json holding the
// normalized options it ran with; `replay` re-runs from that manifest.

#ifndef CTRNAS_TOOLS_CLI_H_
#define CTRNAS_TOOLS_CLI_H_

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "ctrnas/autoctr.h"
#include "ctrnas/ctr_model.h"
#include "ctrnas/data.h"
#include "ctrnas/evaluator.h"
#include "ctrnas/lanas.h"

namespace ctrnas::cli {

// Set by the SIGINT handler; searches stop between dispatches.
std::atomic<bool>& StopFlag();

// Where evaluations come from: the architecture oracle, a synthetic
// generator, or a CSV file with a column-role schema.
struct DataSource {
  std::string kind = "synthetic";  // oracle | synthetic | csv
  std::size_t rows = 100000;       // synthetic only
  std::uint64_t seed = 0;          // synthetic only
  SyntheticRecipe recipe;
  std::string path;                // csv only
  nlohmann::json schema;           // csv only

  // "oracle", "synthetic", "synthetic:recipe.json", or a CSV path (requires
  // `schema_path`). Throws kInvalidArgument / kIo / kParse.
  static DataSource Parse(const std::string& spec, const std::string& schema_path,
                          std::size_t rows, std::uint64_t seed);
  nlohmann::json ToJson() const;
  static DataSource FromJson(const nlohmann::json& j);
  CtrDataset Load() const;
};

struct SearchOptions {
  std::string searcher = "autoctr";  // autoctr | random | lanas+
  DataSource data;
  std::uint64_t seed = 0;
  SearchConfig search;  // budget, init, workers and constraint are shared
  LanasConfig lanas;
  FidelityConfig fidelity;
  TrainConfig train;

  nlohmann::json ToJson() const;
  static SearchOptions FromJson(const nlohmann::json& j);
};

// Runs one search into `out_dir`. Returns the exit code.
int RunSearch(const SearchOptions& options, const std::filesystem::path& out_dir,
              std::ostream& log);

// Exit codes: 0 success, 1 runtime error, 2 usage error, 3 replay mismatch,
// 130 interrupted (outputs and a truncated manifest are still written).
int Main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ctrnas::cli

#endif  // CTRNAS_TOOLS_CLI_H_

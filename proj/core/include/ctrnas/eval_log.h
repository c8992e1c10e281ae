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

// JSON-lines evaluation log. One record per line:
//   {"birth_index", "arch", "val_logloss" (null when failed), "val_auc",
//    "flops", "n_params", "seed", "failed", ["error"], "fidelity"}
// Wall-clock durations go to a separate CSV (birth_index,seconds) so the log
// itself stays byte-identical across replays.

#ifndef CTRNAS_EVAL_LOG_H_
#define CTRNAS_EVAL_LOG_H_

#include <filesystem>
#include <fstream>
#include <functional>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctrnas/evaluator.h"

namespace ctrnas {

nlohmann::json EvalRecordToJson(const EvalRecord& rec);
EvalRecord EvalRecordFromJson(const nlohmann::json& j);

// Throws kIo / kParse.
std::vector<EvalRecord> ReadEvalLog(const std::filesystem::path& path);

class EvalLogWriter {
 public:
  // `context` is attached to every line under "fidelity". Throws kIo.
  EvalLogWriter(const std::filesystem::path& log_path,
                const std::filesystem::path& timings_path,
                nlohmann::json context);

  void Append(const EvalRecord& rec, double seconds);

 private:
  std::ofstream log_;
  std::ofstream timings_;
  nlohmann::json context_;
};

// Called once per completed evaluation, after birth_index is assigned.
using RecordSink = std::function<void(const EvalRecord&, double seconds)>;

// Formats with six decimal places, as every CSV output does.
std::string FormatFixed(double value);

}  // namespace ctrnas

#endif  // CTRNAS_EVAL_LOG_H_

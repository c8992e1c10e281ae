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

#include "ctrnas/eval_log.h"

#include <cmath>
#include <cstdio>
#include <string>

#include "ctrnas/error.h"

namespace ctrnas {

nlohmann::json EvalRecordToJson(const EvalRecord& rec) {
  nlohmann::json j;
  j["birth_index"] = rec.birth_index;
  j["arch"] = ArchToJson(rec.arch);
  j["val_logloss"] =
      rec.ok() ? nlohmann::json(rec.val_logloss) : nlohmann::json(nullptr);
  j["val_auc"] = rec.val_auc;
  j["flops"] = rec.flops;
  j["n_params"] = rec.n_params;
  j["seed"] = rec.seed;
  j["failed"] = rec.failed || !std::isfinite(rec.val_logloss);
  if (!rec.error.empty()) j["error"] = rec.error;
  return j;
}

EvalRecord EvalRecordFromJson(const nlohmann::json& j) {
  EvalRecord rec;
  try {
    rec.birth_index = j.at("birth_index").get<std::int64_t>();
    rec.arch = ArchFromJson(j.at("arch"));
    const auto& ll = j.at("val_logloss");
    rec.val_logloss = ll.is_null() ? std::numeric_limits<double>::infinity() : ll.get<double>();
    rec.val_auc = j.value("val_auc", 0.5);
    rec.flops = j.value("flops", std::int64_t{0});
    rec.n_params = j.value("n_params", std::int64_t{0});
    rec.seed = j.value("seed", std::uint64_t{0});
    rec.failed = j.value("failed", ll.is_null());
    rec.error = j.value("error", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("eval record: ") + e.what());
  }
  return rec;
}

std::vector<EvalRecord> ReadEvalLog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<EvalRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(EvalRecordFromJson(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParse,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

EvalLogWriter::EvalLogWriter(const std::filesystem::path& log_path,
                             const std::filesystem::path& timings_path,
                             nlohmann::json context)
    : log_(log_path), timings_(timings_path), context_(std::move(context)) {
  if (!log_) throw Error(ErrorCode::kIo, "cannot write " + log_path.string());
  if (!timings_) throw Error(ErrorCode::kIo, "cannot write " + timings_path.string());
  timings_ << "birth_index,seconds\n";
}

void EvalLogWriter::Append(const EvalRecord& rec, double seconds) {
  nlohmann::json j = EvalRecordToJson(rec);
  j["fidelity"] = context_;
  log_ << j.dump() << '\n';
  log_.flush();
  timings_ << rec.birth_index << ',' << FormatFixed(seconds) << '\n';
  timings_.flush();
}

std::string FormatFixed(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", value);
  return buf;
}

}  // namespace ctrnas

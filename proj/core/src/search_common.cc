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

#include "ctrnas/search_common.h"

#include <fstream>
#include <limits>

#include "ctrnas/error.h"

namespace ctrnas {

std::optional<EvalRecord> SearchResult::best() const {
  const EvalRecord* best = nullptr;
  for (const auto& r : log) {
    if (r.ok() && (!best || r.val_logloss < best->val_logloss)) best = &r;
  }
  if (!best) return std::nullopt;
  return *best;
}

const EvalRecord& RunRecorder::Add(EvalRecord rec, double seconds) {
  rec.birth_index = static_cast<std::int64_t>(result_.log.size()) + 1;
  double best = result_.best_curve.empty() ? std::numeric_limits<double>::infinity()
                                           : result_.best_curve.back();
  if (rec.ok() && rec.val_logloss < best) best = rec.val_logloss;
  result_.log.push_back(std::move(rec));
  result_.best_curve.push_back(best);
  if (hooks_.sink) hooks_.sink(result_.log.back(), seconds);
  return result_.log.back();
}

void Dispatcher::Submit(const Architecture& arch) {
  pool_.Submit({arch, EvalSeed(run_seed_, submitted_), static_cast<std::int64_t>(submitted_)});
  ++submitted_;
}

std::pair<const EvalRecord*, std::int64_t> Dispatcher::CompleteOne() {
  EvalDone d = pool_.Next();
  const EvalRecord& rec = recorder_.Add(std::move(d.record), d.seconds);
  return {&rec, d.job.tag};
}

void Dispatcher::Drain() {
  while (pool_.in_flight() > 0) CompleteOne();
}

void WriteBestCurveCsv(const std::filesystem::path& path, const SearchResult& result) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "eval_index,best_val_logloss\n";
  for (std::size_t i = 0; i < result.best_curve.size(); ++i) {
    out << (i + 1) << ',' << FormatFixed(result.best_curve[i]) << '\n';
  }
}

}  // namespace ctrnas

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

// Pieces shared by every searcher: the run result, the single-writer log
// recorder, and cooperative cancellation.

#ifndef CTRNAS_SEARCH_COMMON_H_
#define CTRNAS_SEARCH_COMMON_H_

#include <atomic>
#include <filesystem>
#include <optional>
#include <vector>

#include "ctrnas/eval_log.h"
#include "ctrnas/evaluator.h"

namespace ctrnas {

struct SearchHooks {
  RecordSink sink;                          // optional
  const std::atomic<bool>* stop = nullptr;  // optional; checked between dispatches

  bool stopped() const { return stop && stop->load(); }
};

struct SearchResult {
  std::vector<EvalRecord> log;      // completion order, birth_index = position + 1
  std::vector<double> best_curve;   // best finite logloss after each eval (+inf before any)
  bool truncated = false;           // stopped before the budget was spent

  // Lowest finite logloss; ties go to the earlier record.
  std::optional<EvalRecord> best() const;
};

// Owns birth_index assignment and the best-so-far curve.
class RunRecorder {
 public:
  explicit RunRecorder(const SearchHooks& hooks) : hooks_(hooks) {}

  // Assigns the next birth_index, appends, and notifies the sink.
  const EvalRecord& Add(EvalRecord rec, double seconds);
  SearchResult& result() { return result_; }
  const std::vector<EvalRecord>& log() const { return result_.log; }
  std::size_t size() const { return result_.log.size(); }

 private:
  const SearchHooks& hooks_;
  SearchResult result_;
};

// Keeps up to `pool.workers()` jobs in flight: completes one job first when
// the pool is full, then submits.
class Dispatcher {
 public:
  Dispatcher(EvalPool& pool, RunRecorder& recorder, std::uint64_t run_seed)
      : pool_(pool), recorder_(recorder), run_seed_(run_seed) {}

  bool full() const { return pool_.in_flight() >= pool_.workers(); }
  std::uint64_t submitted() const { return submitted_; }
  void Submit(const Architecture& arch);
  // Completes one in-flight job; returns the recorded entry and its tag.
  std::pair<const EvalRecord*, std::int64_t> CompleteOne();
  void Drain();

 private:
  EvalPool& pool_;
  RunRecorder& recorder_;
  std::uint64_t run_seed_;
  std::uint64_t submitted_ = 0;
};

// CSV "eval_index,best_val_logloss".
void WriteBestCurveCsv(const std::filesystem::path& path, const SearchResult& result);

}  // namespace ctrnas

#endif  // CTRNAS_SEARCH_COMMON_H_

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

#include "ctrnas/random_search.h"

#include "ctrnas/error.h"

namespace ctrnas {

SearchResult RandomSearch(const ArchEvaluator& evaluator, const RandomSearchConfig& cfg,
                          std::uint64_t seed, const SearchHooks& hooks) {
  if (cfg.budget < 1 || cfg.workers < 1) {
    throw Error(ErrorCode::kInvalidArgument, "budget and workers must be >= 1");
  }
  Rng rng(seed);
  RunRecorder recorder(hooks);
  EvalPool pool(evaluator, cfg.workers);
  Dispatcher dispatch(pool, recorder, seed);
  for (int i = 0; i < cfg.budget && !hooks.stopped(); ++i) {
    if (dispatch.full()) dispatch.CompleteOne();
    dispatch.Submit(RandomArchWithin(rng, cfg.allow_empty, cfg.constraint));
  }
  dispatch.Drain();
  SearchResult result = std::move(recorder.result());
  result.truncated = static_cast<int>(result.log.size()) < cfg.budget;
  return result;
}

}  // namespace ctrnas

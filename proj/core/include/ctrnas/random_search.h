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

#ifndef CTRNAS_RANDOM_SEARCH_H_
#define CTRNAS_RANDOM_SEARCH_H_

#include <cstdint>

#include "ctrnas/evaluator.h"
#include "ctrnas/search_common.h"
#include "ctrnas/search_space.h"

namespace ctrnas {

struct RandomSearchConfig {
  int budget = 1500;
  int workers = 1;
  bool allow_empty = true;
  ArchConstraint constraint;
};

// Evaluates `budget` independent random architectures.
SearchResult RandomSearch(const ArchEvaluator& evaluator, const RandomSearchConfig& cfg,
                          std::uint64_t seed, const SearchHooks& hooks = {});

}  // namespace ctrnas

#endif  // CTRNAS_RANDOM_SEARCH_H_

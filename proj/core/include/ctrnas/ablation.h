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


// Ablation sweeps over the evolutionary searcher: selection intensity λ,
// guider type, and survivor-selection objectives. Objective settings weight
// each included term 0.5 and drop the others; all but the last keep the age
// window.

#ifndef CTRNAS_ABLATION_H_
#define CTRNAS_ABLATION_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "ctrnas/autoctr.h"
#include "ctrnas/evaluator.h"
#include "ctrnas/search_common.h"

namespace ctrnas {

enum class AblationAxis { kLambda, kGuider, kObjective };

std::string_view AblationAxisName(AblationAxis axis);  // "lambda", "guider", "objective"
AblationAxis ParseAblationAxis(std::string_view name);  // throws kUnknownName

struct AblationSetting {
  std::string name;
  SearchConfig cfg;
};

// lambda:    λ ∈ {1, 5, 10, 25, 50}
// guider:    random, regression, rank
// objective: a, r, a+r, a+c, r+c, a+r+c, a+r+c-nothreshold
std::vector<AblationSetting> AblationSettings(AblationAxis axis, const SearchConfig& base);

struct AblationRun {
  std::string setting;
  std::uint64_t seed = 0;
  SearchResult result;
};

struct AblationResult {
  AblationAxis axis = AblationAxis::kLambda;
  std::vector<AblationRun> runs;  // settings outer, seeds inner
};

using AblationProgress = std::function<void(const std::string& setting, std::uint64_t seed)>;

AblationResult RunAblation(const ArchEvaluator& evaluator, AblationAxis axis,
                           const SearchConfig& base, const std::vector<std::uint64_t>& seeds,
                           const SearchHooks& hooks = {}, const AblationProgress& progress = {});

// CSV headers:
//   curves   setting,seed,eval_index,best_val_logloss
//   summary  setting,seed,best_val_logloss,best_val_auc,n_params,flops
void WriteAblationCurvesCsv(const std::filesystem::path& path, const AblationResult& r);
void WriteAblationSummaryCsv(const std::filesystem::path& path, const AblationResult& r);

}  // namespace ctrnas

#endif  // CTRNAS_ABLATION_H_

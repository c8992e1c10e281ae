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


#include "ctrnas/ablation.h"

#include <fstream>

#include "ctrnas/error.h"

namespace ctrnas {

std::string_view AblationAxisName(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::kLambda:
      return "lambda";
    case AblationAxis::kGuider:
      return "guider";
    case AblationAxis::kObjective:
      return "objective";
  }
  return "lambda";
}

AblationAxis ParseAblationAxis(std::string_view name) {
  for (auto a : {AblationAxis::kLambda, AblationAxis::kGuider, AblationAxis::kObjective}) {
    if (AblationAxisName(a) == name) return a;
  }
  throw Error(ErrorCode::kUnknownName, "unknown ablation axis '" + std::string(name) + "'");
}

std::vector<AblationSetting> AblationSettings(AblationAxis axis, const SearchConfig& base) {
  std::vector<AblationSetting> out;
  switch (axis) {
    case AblationAxis::kLambda:
      for (int lambda : {1, 5, 10, 25, 50}) {
        SearchConfig c = base;
        c.lambda = lambda;
        out.push_back({"lambda=" + std::to_string(lambda), c});
      }
      break;
    case AblationAxis::kGuider:
      for (auto kind : {GuiderKind::kRandom, GuiderKind::kRegression, GuiderKind::kRank}) {
        SearchConfig c = base;
        c.guider = kind;
        out.push_back({std::string(GuiderKindName(kind)), c});
      }
      break;
    case AblationAxis::kObjective: {
      struct Objective {
        const char* name;
        bool a, r, c, window;
      };
      constexpr double kWeight = 0.5;
      for (const Objective& o : {Objective{"a", true, false, false, true},
                                 Objective{"r", false, true, false, true},
                                 Objective{"a+r", true, true, false, true},
                                 Objective{"a+c", true, false, true, true},
                                 Objective{"r+c", false, true, true, true},
                                 Objective{"a+r+c", true, true, true, true},
                                 Objective{"a+r+c-nothreshold", true, true, true, false}}) {
        SearchConfig c = base;
        c.mu = {o.a ? kWeight : 0.0, o.r ? kWeight : 0.0, o.c ? kWeight : 0.0};
        c.age_filter = o.window;
        out.push_back({o.name, c});
      }
      break;
    }
  }
  return out;
}

AblationResult RunAblation(const ArchEvaluator& evaluator, AblationAxis axis,
                           const SearchConfig& base, const std::vector<std::uint64_t>& seeds,
                           const SearchHooks& hooks, const AblationProgress& progress) {
  if (seeds.empty()) throw Error(ErrorCode::kInvalidArgument, "at least one seed is required");
  AblationResult result;
  result.axis = axis;
  for (const auto& setting : AblationSettings(axis, base)) {
    for (std::uint64_t seed : seeds) {
      if (hooks.stopped()) return result;
      if (progress) progress(setting.name, seed);
      result.runs.push_back({setting.name, seed, AutoCtrSearch(evaluator, setting.cfg, seed, hooks)});
    }
  }
  return result;
}

namespace {

std::ofstream OpenCsv(const std::filesystem::path& path, const char* header) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << header << '\n';
  return out;
}

}  // namespace

void WriteAblationCurvesCsv(const std::filesystem::path& path, const AblationResult& r) {
  auto out = OpenCsv(path, "setting,seed,eval_index,best_val_logloss");
  for (const auto& run : r.runs) {
    for (std::size_t i = 0; i < run.result.best_curve.size(); ++i) {
      out << run.setting << ',' << run.seed << ',' << (i + 1) << ','
          << FormatFixed(run.result.best_curve[i]) << '\n';
    }
  }
}

void WriteAblationSummaryCsv(const std::filesystem::path& path, const AblationResult& r) {
  auto out = OpenCsv(path, "setting,seed,best_val_logloss,best_val_auc,n_params,flops");
  for (const auto& run : r.runs) {
    out << run.setting << ',' << run.seed << ',';
    if (auto best = run.result.best()) {
      out << FormatFixed(best->val_logloss) << ',' << FormatFixed(best->val_auc) << ','
          << best->n_params << ',' << best->flops << '\n';
    } else {
      out << "inf,nan,0,0\n";
    }
  }
}

}  // namespace ctrnas

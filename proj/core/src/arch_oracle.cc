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

#include "ctrnas/arch_oracle.h"

#include <algorithm>
#include <array>

#include "ctrnas/error.h"

namespace ctrnas {

std::uint64_t Fnv1a(const void* data, std::size_t size, std::uint64_t hash) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001b3ull;
  }
  return hash;
}

Architecture Canonicalize(const Architecture& arch) {
  std::array<int, kNumBlocks> new_index{};
  new_index.fill(-1);
  int next = 0;
  for (int i = 0; i < kNumBlocks; ++i) {
    if (!arch.blocks[i].empty()) new_index[i] = next++;
  }
  Architecture out;
  for (int i = 0; i < kNumBlocks; ++i) {
    if (new_index[i] < 0) continue;
    BlockSpec b = arch.blocks[i];
    b.preds = 0;
    for (int j = 0; j < i; ++j) {
      if (arch.blocks[i].has_pred(j) && new_index[j] >= 0) {
        b.preds |= static_cast<std::uint8_t>(1u << new_index[j]);
      }
    }
    out.blocks[new_index[i]] = b;
  }
  return out;
}

int FunnelWidth(int depth) { return std::max(32, 1024 >> std::max(depth, 1)); }

OracleBreakdown ArchOracleBreakdown(const Architecture& arch) {
  const auto violations = Validate(arch);
  if (!violations.empty()) {
    throw Error(ErrorCode::kInvalidArchitecture, violations.front());
  }
  const auto& b = arch.blocks;
  // Work in units of 1e-4 so the structural part is exact before scaling.
  int units = 4500;

  int sparse_interactions = 0;
  bool dp_feeds_mlp = false;
  bool fm_sink = false;
  bool diamond = false;
  int big_mlps = 0;
  int funnel = 0;
  std::array<int, kNumBlocks> chain{};  // blocks on the longest chain ending here
  int longest = 0;
  for (int i = 0; i < kNumBlocks; ++i) {
    if (b[i].empty()) continue;
    const bool interaction = b[i].type == BlockType::kFm || b[i].type == BlockType::kDp;
    if (interaction && UsesSparse(b[i].raw)) ++sparse_interactions;
    if (b[i].type == BlockType::kFm && arch.is_sink(i)) fm_sink = true;
    if (b[i].type == BlockType::kMlp && b[i].units == 1024) ++big_mlps;
    chain[i] = 1;
    for (int j = 0; j < i; ++j) {
      if (!b[i].has_pred(j)) continue;
      chain[i] = std::max(chain[i], chain[j] + 1);
      if (b[i].type == BlockType::kMlp && b[j].type == BlockType::kDp) dp_feeds_mlp = true;
      if (b[i].type != BlockType::kMlp || b[j].type != BlockType::kMlp) continue;
      for (int a = 0; a < j; ++a) {
        if (b[j].has_pred(a) && b[a].type == BlockType::kMlp &&
            b[a].units < b[j].units && b[j].units > b[i].units) {
          diamond = true;
        }
      }
    }
    longest = std::max(longest, chain[i]);
    if (b[i].type == BlockType::kMlp && b[i].units == FunnelWidth(chain[i])) ++funnel;
  }

  units -= 30 * std::min(sparse_interactions, 2);
  if (dp_feeds_mlp) units -= 20;
  if (fm_sink) units -= 10;
  if (diamond) units -= 30;
  units -= 5 * std::min(longest, 4);
  if (!arch.dense_consumed()) units += 20;
  if (!arch.sparse_consumed()) units += 40;
  units += 2 * big_mlps;
  units -= 4 * funnel;

  const Architecture canon = Canonicalize(arch);
  const ArchVector v = Encode(canon);
  const std::uint64_t h = Fnv1a(v.data(), sizeof(double) * v.size());

  OracleBreakdown out;
  out.structural = units * 1e-4;
  out.noise = static_cast<double>(h % 1000) * 1e-7;
  return out;
}

double ArchOracle(const Architecture& arch) { return ArchOracleBreakdown(arch).total(); }

}  // namespace ctrnas

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

// Deterministic pseudo-logloss landscape over architectures, used to test
// searchers without training anything.
//
//   score = 0.45
//         − 0.003  per FM or DP block reading raw sparse (counted up to 2)
//         − 0.002  if some DP block feeds an MLP block
//         − 0.001  if some FM block is a sink
//         − 0.003  if some MLP chain a→b→c is a diamond (units a < b > c)
//         − 0.0005 · min(L, 4), L = blocks on the longest chain
//         + 0.002  if no block reads raw dense
//         + 0.004  if no block reads raw sparse
//         + 0.0002 per 1024-unit MLP block
//         − 0.0004 per MLP block whose width is max(32, 1024 / 2^d), d = blocks
//                  on the longest chain ending at it (a narrowing funnel)
//         + noise in [0, 1e-4)
//
// Every structural term is a multiple of 1e-4 no smaller than 2e-4, so the
// noise breaks ties without reordering structural levels. The noise hashes
// the canonical form (non-Empty blocks compacted to the front), so Empty
// padding never changes the score. The funnel term is per block, so random
// sampling rarely satisfies it everywhere while single mutations improve it
// one block at a time.

#ifndef CTRNAS_ARCH_ORACLE_H_
#define CTRNAS_ARCH_ORACLE_H_

#include <cstdint>

#include "ctrnas/search_space.h"

namespace ctrnas {

struct OracleBreakdown {
  double structural = 0.0;
  double noise = 0.0;
  double total() const { return structural + noise; }
};

// Throws kInvalidArchitecture for invalid architectures.
OracleBreakdown ArchOracleBreakdown(const Architecture& arch);
double ArchOracle(const Architecture& arch);

// Funnel width for an MLP block `depth` blocks deep.
int FunnelWidth(int depth);

// Removes Empty blocks, shifting the rest forward and renumbering edges.
Architecture Canonicalize(const Architecture& arch);

// 64-bit FNV-1a.
std::uint64_t Fnv1a(const void* data, std::size_t size,
                    std::uint64_t hash = 0xcbf29ce484222325ull);

}  // namespace ctrnas

#endif  // CTRNAS_ARCH_ORACLE_H_

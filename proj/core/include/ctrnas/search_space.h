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

// Block-based DAG search space: seven ordered blocks plus an implicit final
// linear block that collects every feature not consumed by a block.
//
// Positions are 0-based in the API (0..6). Human-facing strings and the
// architecture JSON format use 1-based block indices, so "block 3" in a
// violation message is `blocks[2]`.

#ifndef CTRNAS_SEARCH_SPACE_H_
#define CTRNAS_SEARCH_SPACE_H_

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ctrnas {

using Rng = std::mt19937_64;

inline constexpr int kNumBlocks = 7;
inline constexpr int kSlotsPerBlock = 15;
inline constexpr int kVectorLength = kNumBlocks * kSlotsPerBlock;
inline constexpr std::array<int, 6> kMlpUnits = {32, 64, 128, 256, 512, 1024};

// Slot offsets inside one block's 15-wide segment.
inline constexpr int kTypeSlot = 0;   // 4 slots, one-hot
inline constexpr int kRawSlot = 4;    // 4 slots, one-hot
inline constexpr int kPredSlot = 8;   // 6 slots, multi-hot
inline constexpr int kUnitsSlot = 14; // 1 slot, ordinal 0..6

enum class BlockType : std::uint8_t { kEmpty = 0, kMlp = 1, kFm = 2, kDp = 3 };
enum class RawInput : std::uint8_t { kNone = 0, kDense = 1, kSparse = 2, kBoth = 3 };

constexpr bool UsesDense(RawInput raw) {
  return raw == RawInput::kDense || raw == RawInput::kBoth;
}
constexpr bool UsesSparse(RawInput raw) {
  return raw == RawInput::kSparse || raw == RawInput::kBoth;
}

std::string_view BlockTypeName(BlockType type);
std::string_view RawInputName(RawInput raw);

struct SparseField {
  std::string name;
  std::int64_t cardinality = 1;
  std::optional<std::int64_t> hash_cap;

  std::int64_t effective_cardinality() const {
    return hash_cap ? *hash_cap : cardinality;
  }
  friend bool operator==(const SparseField&, const SparseField&) = default;
};

struct FeatureSpec {
  int n_dense = 0;
  std::vector<SparseField> sparse_fields;
  int embedding_dim = 16;

  int n_sparse() const { return static_cast<int>(sparse_fields.size()); }
  // Throws kInvalidArgument when an invariant does not hold.
  void Check() const;
  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

struct BlockSpec {
  BlockType type = BlockType::kEmpty;
  RawInput raw = RawInput::kNone;
  // Bit j set iff block j (0-based) feeds this block.
  std::uint8_t preds = 0;
  // Element of kMlpUnits for MLP blocks, 0 otherwise.
  int units = 0;

  bool empty() const { return type == BlockType::kEmpty; }
  bool has_pred(int j) const { return (preds >> j) & 1u; }
  friend auto operator<=>(const BlockSpec&, const BlockSpec&) = default;
};

struct Architecture {
  std::array<BlockSpec, kNumBlocks> blocks{};

  int num_non_empty() const;
  // True when block i is non-Empty and no later block lists it as input.
  bool is_sink(int i) const;
  bool dense_consumed() const;
  bool sparse_consumed() const;

  friend auto operator<=>(const Architecture&, const Architecture&) = default;
};

using ArchVector = std::array<double, kVectorLength>;

// Index into kMlpUnits + 1, or 0 when `units` is not in the unit set.
int UnitsIndex(int units);

// Every structural rule the architecture breaks; empty iff valid.
std::vector<std::string> Validate(const Architecture& arch);
bool IsValid(const Architecture& arch);

ArchVector Encode(const Architecture& arch);
Architecture Decode(std::span<const double> values);

// Samples every block uniformly (type, raw input, predecessor subset, units)
// and repairs to validity. With allow_empty=false no block is Empty.
Architecture RandomArch(Rng& rng, bool allow_empty);

// Restores the structural invariants after a local edit: Empty blocks lose
// their inputs, edges from Empty blocks are dropped, and inputless blocks get
// a fresh raw input drawn from {dense, sparse, both}. Does not fix an
// all-Empty architecture.
void Repair(Architecture& arch, Rng& rng);

enum class MutationOp {
  kResampleType,
  kResampleRaw,
  kTogglePred,
  kResampleUnits,
  kSwapEmpty,
};

std::vector<MutationOp> ApplicableOps(const Architecture& arch);
// Applies `op` once, then repairs. Returns nullopt when `op` has no valid
// target in `arch`. The result may equal `arch` or be invalid; Mutate()
// filters those.
std::optional<Architecture> ApplyMutation(const Architecture& arch,
                                          MutationOp op, Rng& rng);

// One uniformly chosen operator application, retried up to 50 times until the
// result is valid and differs from `arch`. Throws kExhausted otherwise.
Architecture Mutate(const Architecture& arch, Rng& rng);

// Up to n distinct single-mutation neighbors found within 50*n attempts, in
// discovery order. Throws kExhausted only when none was found.
std::vector<Architecture> NeighborsUpTo(const Architecture& arch, int n,
                                        Rng& rng);
// Exactly n distinct neighbors, or kExhausted.
std::vector<Architecture> Neighbors(const Architecture& arch, int n, Rng& rng);

// Exact number of valid architectures over the first `max_blocks` positions.
std::uint64_t SpaceSize(int max_blocks, bool allow_empty);

enum class PresetName { kDeepFmLike, kDlrmLike, kMlpWarmstart };

std::optional<PresetName> ParsePresetName(std::string_view name);
Architecture Preset(PresetName name);
Architecture Preset(std::string_view name);

// {"blocks":[{"type":"mlp","raw":"dense","preds":[1],"units":32}, ...]}
// Restricts the space a searcher explores. Sampling and mutation under a
// constraint use rejection, so the distribution inside the restricted space
// is the unrestricted one conditioned on membership.
struct ArchConstraint {
  // Bit t set iff BlockType t may appear in non-Empty blocks.
  std::uint8_t allowed_types = 0b1110;
  // Blocks beyond this count (1-based) must be Empty.
  int max_blocks = kNumBlocks;
  // Allowed MLP widths; empty = all of kMlpUnits.
  std::vector<int> units;

  static ArchConstraint MlpOnly();
  bool trivial() const;
  bool Satisfied(const Architecture& arch) const;
  nlohmann::json ToJson() const;
  static ArchConstraint FromJson(const nlohmann::json& j);
};

// Rejection-samples RandomArch; throws kExhausted after 100000 draws.
Architecture RandomArchWithin(Rng& rng, bool allow_empty,
                              const ArchConstraint& constraint);
// Up to n unique single mutations of arch satisfying the constraint, within
// 50·n attempts. Throws kExhausted when none is found.
std::vector<Architecture> NeighborsWithin(const Architecture& arch, int n,
                                          Rng& rng,
                                          const ArchConstraint& constraint);

nlohmann::json ArchToJson(const Architecture& arch);
Architecture ArchFromJson(const nlohmann::json& j);
// Compact single-line form, e.g. "1:mlp128/both 2:dp/sparse<1 3:- ...".
std::string ArchToString(const Architecture& arch);

}  // namespace ctrnas

#endif  // CTRNAS_SEARCH_SPACE_H_

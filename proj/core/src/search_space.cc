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

#include "ctrnas/search_space.h"

#include <algorithm>
#include <set>
#include <sstream>

#include "ctrnas/error.h"

namespace ctrnas {
namespace {

constexpr int kMaxMutationRetries = 50;
constexpr int kNeighborAttemptFactor = 50;

template <typename T>
T Pick(std::span<const T> choices, Rng& rng) {
  std::uniform_int_distribution<std::size_t> dist(0, choices.size() - 1);
  return choices[dist(rng)];
}

int PickIndex(std::size_t n, Rng& rng) {
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return static_cast<int>(dist(rng));
}

bool Coin(Rng& rng) {
  std::bernoulli_distribution dist(0.5);
  return dist(rng);
}

constexpr std::array<BlockType, 3> kNonEmptyTypes = {
    BlockType::kMlp, BlockType::kFm, BlockType::kDp};
constexpr std::array<RawInput, 4> kAllRaw = {
    RawInput::kNone, RawInput::kDense, RawInput::kSparse, RawInput::kBoth};
constexpr std::array<RawInput, 3> kNonNoneRaw = {
    RawInput::kDense, RawInput::kSparse, RawInput::kBoth};

int RandomUnits(Rng& rng) {
  return Pick<int>(std::span<const int>(kMlpUnits), rng);
}

// Fresh non-Empty block at position i, before repair.
BlockSpec RandomBlock(const Architecture& arch, int i, BlockType type,
                      Rng& rng) {
  BlockSpec b;
  b.type = type;
  b.units = type == BlockType::kMlp ? RandomUnits(rng) : 0;
  b.raw = Pick<RawInput>(std::span<const RawInput>(kAllRaw), rng);
  for (int j = 0; j < i; ++j) {
    if (!arch.blocks[j].empty() && Coin(rng)) b.preds |= (1u << j);
  }
  return b;
}

}  // namespace

std::string_view BlockTypeName(BlockType type) {
  switch (type) {
    case BlockType::kEmpty: return "empty";
    case BlockType::kMlp: return "mlp";
    case BlockType::kFm: return "fm";
    case BlockType::kDp: return "dp";
  }
  return "?";
}

std::string_view RawInputName(RawInput raw) {
  switch (raw) {
    case RawInput::kNone: return "none";
    case RawInput::kDense: return "dense";
    case RawInput::kSparse: return "sparse";
    case RawInput::kBoth: return "both";
  }
  return "?";
}

void FeatureSpec::Check() const {
  if (n_dense < 0) {
    throw Error(ErrorCode::kInvalidArgument, "n_dense must be >= 0");
  }
  if (embedding_dim < 1) {
    throw Error(ErrorCode::kInvalidArgument, "embedding_dim must be >= 1");
  }
  for (const auto& f : sparse_fields) {
    if (f.cardinality < 1) {
      throw Error(ErrorCode::kInvalidArgument,
                  "sparse field '" + f.name + "' has cardinality < 1");
    }
    if (f.hash_cap && (*f.hash_cap < 1 || *f.hash_cap > f.cardinality)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "sparse field '" + f.name + "' has hash_cap outside [1, cardinality]");
    }
  }
}

int Architecture::num_non_empty() const {
  return static_cast<int>(std::count_if(
      blocks.begin(), blocks.end(), [](const BlockSpec& b) { return !b.empty(); }));
}

bool Architecture::is_sink(int i) const {
  if (blocks[i].empty()) return false;
  for (int k = i + 1; k < kNumBlocks; ++k) {
    if (!blocks[k].empty() && blocks[k].has_pred(i)) return false;
  }
  return true;
}

bool Architecture::dense_consumed() const {
  return std::any_of(blocks.begin(), blocks.end(), [](const BlockSpec& b) {
    return !b.empty() && UsesDense(b.raw);
  });
}

bool Architecture::sparse_consumed() const {
  return std::any_of(blocks.begin(), blocks.end(), [](const BlockSpec& b) {
    return !b.empty() && UsesSparse(b.raw);
  });
}

int UnitsIndex(int units) {
  for (std::size_t k = 0; k < kMlpUnits.size(); ++k) {
    if (kMlpUnits[k] == units) return static_cast<int>(k) + 1;
  }
  return 0;
}

std::vector<std::string> Validate(const Architecture& arch) {
  std::vector<std::string> out;
  for (int i = 0; i < kNumBlocks; ++i) {
    const BlockSpec& b = arch.blocks[i];
    const int id = i + 1;
    for (int j = i; j < 8; ++j) {
      if (b.has_pred(j)) {
        out.push_back("forward edge " + std::to_string(j + 1) + "→" +
                      std::to_string(id));
      }
    }
    if (b.empty()) {
      if (b.raw != RawInput::kNone || b.preds != 0) {
        out.push_back("empty block " + std::to_string(id) + " has inputs");
      }
      if (b.units != 0) {
        out.push_back("empty block " + std::to_string(id) + " has units");
      }
      continue;
    }
    for (int j = 0; j < i; ++j) {
      if (b.has_pred(j) && arch.blocks[j].empty()) {
        out.push_back("edge from empty block " + std::to_string(j + 1) + "→" +
                      std::to_string(id));
      }
    }
    if (b.raw == RawInput::kNone && b.preds == 0) {
      out.push_back("block " + std::to_string(id) + " has no inputs");
    }
    if (b.type == BlockType::kMlp && UnitsIndex(b.units) == 0) {
      out.push_back("block " + std::to_string(id) + " has invalid units " +
                    std::to_string(b.units));
    }
    if (b.type != BlockType::kMlp && b.units != 0) {
      out.push_back("non-mlp block " + std::to_string(id) + " has units");
    }
  }
  if (arch.num_non_empty() == 0) out.push_back("no non-empty block");
  return out;
}

bool IsValid(const Architecture& arch) { return Validate(arch).empty(); }

ArchVector Encode(const Architecture& arch) {
  const auto violations = Validate(arch);
  if (!violations.empty()) {
    throw Error(ErrorCode::kInvalidArchitecture, violations.front());
  }
  ArchVector v{};
  for (int i = 0; i < kNumBlocks; ++i) {
    const BlockSpec& b = arch.blocks[i];
    double* seg = v.data() + i * kSlotsPerBlock;
    seg[kTypeSlot + static_cast<int>(b.type)] = 1.0;
    seg[kRawSlot + static_cast<int>(b.raw)] = 1.0;
    for (int j = 0; j < i; ++j) {
      if (b.has_pred(j)) seg[kPredSlot + j] = 1.0;
    }
    seg[kUnitsSlot] = b.type == BlockType::kMlp ? UnitsIndex(b.units) : 0;
  }
  return v;
}

namespace {

int DecodeOneHot(const double* seg, int width, int block) {
  int hot = -1;
  for (int k = 0; k < width; ++k) {
    if (seg[k] == 1.0) {
      if (hot >= 0) {
        throw Error(ErrorCode::kMalformedVector,
                    "block " + std::to_string(block + 1) +
                        ": one-hot segment has several hot slots");
      }
      hot = k;
    } else if (seg[k] != 0.0) {
      throw Error(ErrorCode::kMalformedVector,
                  "block " + std::to_string(block + 1) +
                      ": one-hot segment has a non-binary value");
    }
  }
  if (hot < 0) {
    throw Error(ErrorCode::kMalformedVector,
                "block " + std::to_string(block + 1) +
                    ": one-hot segment has no hot slot");
  }
  return hot;
}

}  // namespace

Architecture Decode(std::span<const double> values) {
  if (values.size() != static_cast<std::size_t>(kVectorLength)) {
    throw Error(ErrorCode::kMalformedVector,
                "expected length " + std::to_string(kVectorLength) + ", got " +
                    std::to_string(values.size()));
  }
  Architecture arch;
  for (int i = 0; i < kNumBlocks; ++i) {
    const double* seg = values.data() + i * kSlotsPerBlock;
    BlockSpec& b = arch.blocks[i];
    b.type = static_cast<BlockType>(DecodeOneHot(seg + kTypeSlot, 4, i));
    b.raw = static_cast<RawInput>(DecodeOneHot(seg + kRawSlot, 4, i));
    for (int j = 0; j < kNumBlocks - 1; ++j) {
      const double bit = seg[kPredSlot + j];
      if (bit == 0.0) continue;
      if (bit != 1.0) {
        throw Error(ErrorCode::kMalformedVector,
                    "block " + std::to_string(i + 1) +
                        ": predecessor mask has a non-binary value");
      }
      if (j >= i) {
        throw Error(ErrorCode::kMalformedVector,
                    "block " + std::to_string(i + 1) +
                        ": predecessor slot " + std::to_string(j + 1) +
                        " refers to a block that cannot precede it");
      }
      b.preds |= (1u << j);
    }
    const double u = seg[kUnitsSlot];
    if (u != static_cast<int>(u) || u < 0 || u > static_cast<double>(kMlpUnits.size())) {
      throw Error(ErrorCode::kMalformedVector,
                  "block " + std::to_string(i + 1) + ": units index out of 0..6");
    }
    const int ui = static_cast<int>(u);
    if ((b.type == BlockType::kMlp) != (ui != 0)) {
      throw Error(ErrorCode::kMalformedVector,
                  "block " + std::to_string(i + 1) + ": units/type mismatch");
    }
    b.units = ui == 0 ? 0 : kMlpUnits[ui - 1];
  }
  return arch;
}

void Repair(Architecture& arch, Rng& rng) {
  for (int i = 0; i < kNumBlocks; ++i) {
    BlockSpec& b = arch.blocks[i];
    if (b.empty()) {
      b = BlockSpec{};
      continue;
    }
    std::uint8_t kept = 0;
    for (int j = 0; j < i; ++j) {
      if (b.has_pred(j) && !arch.blocks[j].empty()) kept |= (1u << j);
    }
    b.preds = kept;
    if (b.raw == RawInput::kNone && b.preds == 0) {
      b.raw = Pick<RawInput>(std::span<const RawInput>(kNonNoneRaw), rng);
    }
    if (b.type == BlockType::kMlp) {
      if (UnitsIndex(b.units) == 0) b.units = RandomUnits(rng);
    } else {
      b.units = 0;
    }
  }
}

Architecture RandomArch(Rng& rng, bool allow_empty) {
  constexpr std::array<BlockType, 4> kAllTypes = {
      BlockType::kEmpty, BlockType::kMlp, BlockType::kFm, BlockType::kDp};
  for (;;) {
    Architecture arch;
    for (int i = 0; i < kNumBlocks; ++i) {
      const BlockType type =
          allow_empty ? Pick<BlockType>(std::span<const BlockType>(kAllTypes), rng)
                      : Pick<BlockType>(std::span<const BlockType>(kNonEmptyTypes), rng);
      if (type == BlockType::kEmpty) continue;
      arch.blocks[i] = RandomBlock(arch, i, type, rng);
    }
    Repair(arch, rng);
    if (arch.num_non_empty() > 0) return arch;
  }
}

std::vector<MutationOp> ApplicableOps(const Architecture& arch) {
  std::vector<MutationOp> ops = {MutationOp::kResampleType,
                                 MutationOp::kResampleRaw};
  bool has_pair = false;
  bool has_mlp = false;
  int seen_non_empty = 0;
  for (const auto& b : arch.blocks) {
    if (b.empty()) continue;
    if (seen_non_empty > 0) has_pair = true;
    ++seen_non_empty;
    if (b.type == BlockType::kMlp) has_mlp = true;
  }
  if (has_pair) ops.push_back(MutationOp::kTogglePred);
  if (has_mlp) ops.push_back(MutationOp::kResampleUnits);
  if (seen_non_empty < kNumBlocks || seen_non_empty >= 2) {
    ops.push_back(MutationOp::kSwapEmpty);
  }
  return ops;
}

std::optional<Architecture> ApplyMutation(const Architecture& arch,
                                          MutationOp op, Rng& rng) {
  Architecture out = arch;
  std::vector<int> non_empty;
  for (int i = 0; i < kNumBlocks; ++i) {
    if (!arch.blocks[i].empty()) non_empty.push_back(i);
  }
  if (non_empty.empty()) return std::nullopt;

  switch (op) {
    case MutationOp::kResampleType: {
      BlockSpec& b = out.blocks[non_empty[PickIndex(non_empty.size(), rng)]];
      std::vector<BlockType> others;
      for (BlockType t : kNonEmptyTypes) {
        if (t != b.type) others.push_back(t);
      }
      b.type = others[PickIndex(others.size(), rng)];
      b.units = b.type == BlockType::kMlp ? RandomUnits(rng) : 0;
      break;
    }
    case MutationOp::kResampleRaw: {
      BlockSpec& b = out.blocks[non_empty[PickIndex(non_empty.size(), rng)]];
      std::vector<RawInput> others;
      for (RawInput r : kAllRaw) {
        if (r != b.raw) others.push_back(r);
      }
      b.raw = others[PickIndex(others.size(), rng)];
      break;
    }
    case MutationOp::kTogglePred: {
      std::vector<std::pair<int, int>> pairs;
      for (int i : non_empty) {
        for (int j : non_empty) {
          if (j < i) pairs.emplace_back(i, j);
        }
      }
      if (pairs.empty()) return std::nullopt;
      const auto [i, j] = pairs[PickIndex(pairs.size(), rng)];
      out.blocks[i].preds ^= static_cast<std::uint8_t>(1u << j);
      break;
    }
    case MutationOp::kResampleUnits: {
      std::vector<int> mlps;
      for (int i : non_empty) {
        if (arch.blocks[i].type == BlockType::kMlp) mlps.push_back(i);
      }
      if (mlps.empty()) return std::nullopt;
      BlockSpec& b = out.blocks[mlps[PickIndex(mlps.size(), rng)]];
      std::vector<int> others;
      for (int u : kMlpUnits) {
        if (u != b.units) others.push_back(u);
      }
      b.units = others[PickIndex(others.size(), rng)];
      break;
    }
    case MutationOp::kSwapEmpty: {
      std::vector<int> targets;
      for (int i = 0; i < kNumBlocks; ++i) {
        if (arch.blocks[i].empty() || non_empty.size() >= 2) targets.push_back(i);
      }
      if (targets.empty()) return std::nullopt;
      const int i = targets[PickIndex(targets.size(), rng)];
      if (arch.blocks[i].empty()) {
        const BlockType type = Pick<BlockType>(
            std::span<const BlockType>(kNonEmptyTypes), rng);
        out.blocks[i] = RandomBlock(out, i, type, rng);
      } else {
        out.blocks[i] = BlockSpec{};
      }
      break;
    }
  }
  Repair(out, rng);
  return out;
}

Architecture Mutate(const Architecture& arch, Rng& rng) {
  const auto ops = ApplicableOps(arch);
  for (int attempt = 0; attempt < kMaxMutationRetries; ++attempt) {
    const MutationOp op = ops[PickIndex(ops.size(), rng)];
    auto child = ApplyMutation(arch, op, rng);
    if (child && *child != arch && IsValid(*child)) return *child;
  }
  throw Error(ErrorCode::kExhausted,
              "no valid distinct mutation after " +
                  std::to_string(kMaxMutationRetries) + " retries");
}

std::vector<Architecture> NeighborsUpTo(const Architecture& arch, int n,
                                        Rng& rng) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "n must be >= 1");
  std::vector<Architecture> out;
  std::set<Architecture> seen;
  const long max_attempts = static_cast<long>(kNeighborAttemptFactor) * n;
  for (long attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < n;
       ++attempt) {
    Architecture child;
    try {
      child = Mutate(arch, rng);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kExhausted) continue;
      throw;
    }
    if (seen.insert(child).second) out.push_back(child);
  }
  if (out.empty()) {
    throw Error(ErrorCode::kExhausted, "no neighbor found");
  }
  return out;
}

std::vector<Architecture> Neighbors(const Architecture& arch, int n, Rng& rng) {
  auto out = NeighborsUpTo(arch, n, rng);
  if (static_cast<int>(out.size()) < n) {
    throw Error(ErrorCode::kExhausted,
                "found " + std::to_string(out.size()) + " unique neighbors, " +
                    std::to_string(n) + " requested");
  }
  return out;
}

ArchConstraint ArchConstraint::MlpOnly() {
  ArchConstraint c;
  c.allowed_types = 1u << static_cast<int>(BlockType::kMlp);
  return c;
}

bool ArchConstraint::trivial() const {
  return (allowed_types & 0b1110) == 0b1110 && max_blocks >= kNumBlocks &&
         (units.empty() || units.size() >= kMlpUnits.size());
}

bool ArchConstraint::Satisfied(const Architecture& arch) const {
  for (int i = 0; i < kNumBlocks; ++i) {
    const BlockSpec& b = arch.blocks[i];
    if (b.empty()) continue;
    if (i >= max_blocks) return false;
    if (!((allowed_types >> static_cast<int>(b.type)) & 1u)) return false;
    if (b.type == BlockType::kMlp && !units.empty() &&
        std::find(units.begin(), units.end(), b.units) == units.end()) {
      return false;
    }
  }
  return true;
}

nlohmann::json ArchConstraint::ToJson() const {
  nlohmann::json types = nlohmann::json::array();
  for (auto t : {BlockType::kMlp, BlockType::kFm, BlockType::kDp}) {
    if ((allowed_types >> static_cast<int>(t)) & 1u) types.push_back(BlockTypeName(t));
  }
  return {{"types", types}, {"max_blocks", max_blocks}, {"units", units}};
}

ArchConstraint ArchConstraint::FromJson(const nlohmann::json& j) {
  ArchConstraint c;
  if (j.contains("types")) {
    c.allowed_types = 0;
    for (const auto& t : j["types"]) {
      const auto name = t.get<std::string>();
      bool found = false;
      for (auto bt : {BlockType::kMlp, BlockType::kFm, BlockType::kDp}) {
        if (BlockTypeName(bt) == name) {
          c.allowed_types |= static_cast<std::uint8_t>(1u << static_cast<int>(bt));
          found = true;
        }
      }
      if (!found) throw Error(ErrorCode::kUnknownName, "block type '" + name + "'");
    }
  }
  c.max_blocks = j.value("max_blocks", kNumBlocks);
  if (j.contains("units")) c.units = j["units"].get<std::vector<int>>();
  for (int u : c.units) UnitsIndex(u);
  if (c.max_blocks < 1 || c.max_blocks > kNumBlocks || (c.allowed_types & 0b1110) == 0) {
    throw Error(ErrorCode::kInvalidArgument, "constraint admits no architecture");
  }
  return c;
}

Architecture RandomArchWithin(Rng& rng, bool allow_empty,
                              const ArchConstraint& constraint) {
  if (constraint.trivial()) return RandomArch(rng, allow_empty);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    Architecture a = RandomArch(rng, allow_empty);
    if (constraint.Satisfied(a)) return a;
  }
  throw Error(ErrorCode::kExhausted, "no architecture satisfies the constraint");
}

std::vector<Architecture> NeighborsWithin(const Architecture& arch, int n,
                                          Rng& rng,
                                          const ArchConstraint& constraint) {
  if (constraint.trivial()) return NeighborsUpTo(arch, n, rng);
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "n must be >= 1");
  std::vector<Architecture> out;
  std::set<Architecture> seen;
  const long max_attempts = static_cast<long>(kNeighborAttemptFactor) * n;
  for (long attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < n;
       ++attempt) {
    Architecture child;
    try {
      child = Mutate(arch, rng);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kExhausted) continue;
      throw;
    }
    if (constraint.Satisfied(child) && seen.insert(child).second) out.push_back(child);
  }
  if (out.empty()) throw Error(ErrorCode::kExhausted, "no neighbor satisfies the constraint");
  return out;
}

std::uint64_t SpaceSize(int max_blocks, bool allow_empty) {
  if (max_blocks < 1 || max_blocks > kNumBlocks) {
    throw Error(ErrorCode::kInvalidArgument, "max_blocks must be in 1..7");
  }
  const std::uint64_t type_units = kMlpUnits.size() + 2;  // MLP×units, FM, DP
  // partial[m]: prefixes with m non-Empty blocks so far.
  std::array<std::uint64_t, kNumBlocks + 1> partial{};
  partial[0] = 1;
  for (int pos = 0; pos < max_blocks; ++pos) {
    std::array<std::uint64_t, kNumBlocks + 1> next{};
    for (int m = 0; m <= pos; ++m) {
      if (partial[m] == 0) continue;
      if (allow_empty) next[m] += partial[m];
      // raw × predecessor subsets over the m live blocks, minus (none, ∅).
      const std::uint64_t wiring = 4 * (std::uint64_t{1} << m) - 1;
      next[m + 1] += partial[m] * type_units * wiring;
    }
    partial = next;
  }
  std::uint64_t total = 0;
  for (int m = 1; m <= max_blocks; ++m) total += partial[m];
  return total;
}

std::optional<PresetName> ParsePresetName(std::string_view name) {
  if (name == "deepfm_like") return PresetName::kDeepFmLike;
  if (name == "dlrm_like") return PresetName::kDlrmLike;
  if (name == "mlp_warmstart") return PresetName::kMlpWarmstart;
  return std::nullopt;
}

namespace {

BlockSpec Mlp(int units, RawInput raw, std::initializer_list<int> preds_1based) {
  BlockSpec b{BlockType::kMlp, raw, 0, units};
  for (int p : preds_1based) b.preds |= (1u << (p - 1));
  return b;
}

BlockSpec Interaction(BlockType type, RawInput raw,
                      std::initializer_list<int> preds_1based) {
  BlockSpec b{type, raw, 0, 0};
  for (int p : preds_1based) b.preds |= (1u << (p - 1));
  return b;
}

}  // namespace

Architecture Preset(PresetName name) {
  Architecture a;
  switch (name) {
    case PresetName::kDeepFmLike:
      // FM over sparse embeddings beside a deep tower; both are sinks.
      a.blocks[0] = Interaction(BlockType::kFm, RawInput::kSparse, {});
      a.blocks[1] = Mlp(256, RawInput::kBoth, {});
      a.blocks[2] = Mlp(128, RawInput::kNone, {2});
      break;
    case PresetName::kDlrmLike:
      // Bottom MLP on dense, pairwise dots against embeddings, top MLP.
      a.blocks[0] = Mlp(256, RawInput::kDense, {});
      a.blocks[1] = Mlp(64, RawInput::kNone, {1});
      a.blocks[2] = Interaction(BlockType::kDp, RawInput::kSparse, {2});
      a.blocks[3] = Mlp(512, RawInput::kNone, {2, 3});
      a.blocks[4] = Mlp(256, RawInput::kNone, {4});
      break;
    case PresetName::kMlpWarmstart:
      a.blocks[0] = Mlp(128, RawInput::kBoth, {});
      a.blocks[1] = Mlp(1024, RawInput::kNone, {1});
      a.blocks[2] = Mlp(128, RawInput::kNone, {2});
      break;
  }
  return a;
}

Architecture Preset(std::string_view name) {
  const auto parsed = ParsePresetName(name);
  if (!parsed) {
    throw Error(ErrorCode::kUnknownName, "unknown preset '" + std::string(name) + "'");
  }
  return Preset(*parsed);
}

nlohmann::json ArchToJson(const Architecture& arch) {
  nlohmann::json blocks = nlohmann::json::array();
  for (int i = 0; i < kNumBlocks; ++i) {
    const BlockSpec& b = arch.blocks[i];
    nlohmann::json jb;
    jb["type"] = BlockTypeName(b.type);
    jb["raw"] = RawInputName(b.raw);
    nlohmann::json preds = nlohmann::json::array();
    for (int j = 0; j < kNumBlocks; ++j) {
      if (b.has_pred(j)) preds.push_back(j + 1);
    }
    jb["preds"] = std::move(preds);
    if (b.type == BlockType::kMlp) jb["units"] = b.units;
    blocks.push_back(std::move(jb));
  }
  return nlohmann::json{{"blocks", std::move(blocks)}};
}

Architecture ArchFromJson(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("blocks") || !j["blocks"].is_array()) {
    throw Error(ErrorCode::kParse, "architecture JSON needs a 'blocks' array");
  }
  const auto& blocks = j["blocks"];
  if (blocks.size() != static_cast<std::size_t>(kNumBlocks)) {
    throw Error(ErrorCode::kParse, "architecture JSON needs exactly 7 blocks, got " +
                                       std::to_string(blocks.size()));
  }
  Architecture arch;
  for (int i = 0; i < kNumBlocks; ++i) {
    const auto& jb = blocks[i];
    BlockSpec& b = arch.blocks[i];
    try {
      const std::string type = jb.at("type").get<std::string>();
      if (type == "empty") b.type = BlockType::kEmpty;
      else if (type == "mlp") b.type = BlockType::kMlp;
      else if (type == "fm") b.type = BlockType::kFm;
      else if (type == "dp") b.type = BlockType::kDp;
      else throw Error(ErrorCode::kParse, "unknown block type '" + type + "'");

      const std::string raw = jb.value("raw", std::string("none"));
      if (raw == "none") b.raw = RawInput::kNone;
      else if (raw == "dense") b.raw = RawInput::kDense;
      else if (raw == "sparse") b.raw = RawInput::kSparse;
      else if (raw == "both") b.raw = RawInput::kBoth;
      else throw Error(ErrorCode::kParse, "unknown raw input '" + raw + "'");

      for (const auto& p : jb.value("preds", nlohmann::json::array())) {
        const int idx = p.get<int>();
        if (idx < 1 || idx > kNumBlocks) {
          throw Error(ErrorCode::kParse, "predecessor index out of 1..7");
        }
        b.preds |= static_cast<std::uint8_t>(1u << (idx - 1));
      }
      b.units = jb.value("units", 0);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParse,
                  "block " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return arch;
}

std::string ArchToString(const Architecture& arch) {
  std::ostringstream os;
  for (int i = 0; i < kNumBlocks; ++i) {
    const BlockSpec& b = arch.blocks[i];
    if (i) os << ' ';
    os << (i + 1) << ':';
    if (b.empty()) {
      os << '-';
      continue;
    }
    os << BlockTypeName(b.type);
    if (b.type == BlockType::kMlp) os << b.units;
    os << '/' << RawInputName(b.raw);
    if (b.preds) {
      os << '<';
      bool first = true;
      for (int j = 0; j < kNumBlocks; ++j) {
        if (!b.has_pred(j)) continue;
        if (!first) os << ',';
        os << (j + 1);
        first = false;
      }
    }
  }
  return os.str();
}

}  // namespace ctrnas

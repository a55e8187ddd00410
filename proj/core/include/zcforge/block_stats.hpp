// Copyright 2026 The zcforge Authors.
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

#ifndef ZCFORGE_BLOCK_STATS_HPP_
#define ZCFORGE_BLOCK_STATS_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include "zcforge/tensor.hpp"

namespace zcforge {

// Network input used for a capture pass: a data minibatch, pure noise, or
// data plus small noise.
enum class InputKind : std::uint8_t { kData = 0, kNoise = 1, kPerturbed = 2 };

inline constexpr std::array<InputKind, 3> kInputKinds = {
    InputKind::kData, InputKind::kNoise, InputKind::kPerturbed};

// Which tensor of a block a statistic refers to.
//   T1: block input   T2: conv input   T3: conv weight   T4: block output
// The G variants are loss gradients with respect to the same tensors.
enum class StatBase : std::uint8_t { kT1, kT2, kT3, kT4, kT1G, kT2G, kT3G, kT4G };

// The 22 terminals of a proxy program, in canonical (serialization) order.
enum class StatSlot : std::uint8_t {
  kT1_D, kT1_N, kT1_P,
  kT2_D, kT2_N, kT2_P,
  kT3,
  kT4_D, kT4_N, kT4_P,
  kT1G_D, kT1G_N, kT1G_P,
  kT2G_D, kT2G_N, kT2G_P,
  kT3G_D, kT3G_N, kT3G_P,
  kT4G_D, kT4G_N, kT4G_P,
};

inline constexpr int kNumSlots = 22;

std::string_view slot_name(StatSlot slot);
std::optional<StatSlot> slot_from_name(std::string_view name);

// T3 has no input kind.
StatBase slot_base(StatSlot slot);
std::optional<InputKind> slot_input_kind(StatSlot slot);
// Inverse of (slot_base, slot_input_kind). `kind` is ignored for T3.
StatSlot make_slot(StatBase base, InputKind kind);

// The statistics captured from one conv block.
struct BlockStats {
  std::uint32_t block_index = 0;
  std::array<Tensor, kNumSlots> slots;

  const Tensor& operator[](StatSlot s) const {
    return slots[static_cast<std::size_t>(s)];
  }
  Tensor& operator[](StatSlot s) { return slots[static_cast<std::size_t>(s)]; }

  bool bitwise_equal(const BlockStats& other) const;
};

}  // namespace zcforge

#endif  // ZCFORGE_BLOCK_STATS_HPP_

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

#include "zcforge/block_stats.hpp"

namespace zcforge {

namespace {

constexpr std::array<std::string_view, kNumSlots> kSlotNames = {
    "T1_D",  "T1_N",  "T1_P",  "T2_D",  "T2_N",  "T2_P",  "T3",   "T4_D",
    "T4_N",  "T4_P",  "T1G_D", "T1G_N", "T1G_P", "T2G_D", "T2G_N", "T2G_P",
    "T3G_D", "T3G_N", "T3G_P", "T4G_D", "T4G_N", "T4G_P",
};

}  // namespace

std::string_view slot_name(StatSlot slot) {
  return kSlotNames.at(static_cast<std::size_t>(slot));
}

std::optional<StatSlot> slot_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kSlotNames.size(); ++i) {
    if (kSlotNames[i] == name) return static_cast<StatSlot>(i);
  }
  return std::nullopt;
}

StatBase slot_base(StatSlot slot) {
  const int s = static_cast<int>(slot);
  if (s < 3) return StatBase::kT1;
  if (s < 6) return StatBase::kT2;
  if (s == 6) return StatBase::kT3;
  return static_cast<StatBase>(3 + (s - 7) / 3);
}

std::optional<InputKind> slot_input_kind(StatSlot slot) {
  const int s = static_cast<int>(slot);
  if (s == 6) return std::nullopt;
  return static_cast<InputKind>(s < 6 ? s % 3 : (s - 7) % 3);
}

StatSlot make_slot(StatBase base, InputKind kind) {
  const int b = static_cast<int>(base);
  const int k = static_cast<int>(kind);
  if (base == StatBase::kT3) return StatSlot::kT3;
  if (b < 2) return static_cast<StatSlot>(b * 3 + k);
  return static_cast<StatSlot>(7 + (b - 3) * 3 + k);
}

bool BlockStats::bitwise_equal(const BlockStats& other) const {
  if (block_index != other.block_index) return false;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i].bitwise_equal(other.slots[i])) return false;
  }
  return true;
}

}  // namespace zcforge

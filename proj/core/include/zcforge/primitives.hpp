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

// The fixed catalog of 34 tensor primitives that proxy programs are built
// from. Ids are part of the on-disk program format and must never be
// renumbered.

#ifndef ZCFORGE_PRIMITIVES_HPP_
#define ZCFORGE_PRIMITIVES_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include "zcforge/tensor.hpp"

namespace zcforge {

enum class Op : std::uint8_t {
  kEltwiseSum = 0,
  kEltwiseDiff = 1,
  kEltwiseMul = 2,
  kMatmul = 3,
  kLessThan = 4,
  kGreaterThan = 5,
  kEqualTo = 6,
  kLog = 7,
  kAbsLog = 8,
  kAbs = 9,
  kSquare = 10,
  kExp = 11,
  kNormalize = 12,
  kRelu = 13,
  kSign = 14,
  kHeaviside = 15,
  kInvert = 16,
  kFrobeniusNorm = 17,
  kDeterminant = 18,
  kLogDeterminant = 19,
  kSymEigRatio = 20,
  kEigRatio = 21,
  kNormalizedSum = 22,
  kL1Mean = 23,
  kHamming = 24,
  kKlDiv = 25,
  kCosineSimilarity = 26,
  kSoftmax = 27,
  kSigmoid = 28,
  kOnesLike = 29,
  kZerosLike = 30,
  kGreaterThanZero = 31,
  kLessThanZero = 32,
  kNumel = 33,
};

inline constexpr int kNumPrimitives = 34;

struct PrimitiveInfo {
  Op op;
  int arity;
  std::string_view name;
};

const std::array<PrimitiveInfo, kNumPrimitives>& primitive_table();
const PrimitiveInfo& primitive_info(Op op);
inline int arity(Op op) { return primitive_info(op).arity; }
inline std::string_view primitive_name(Op op) { return primitive_info(op).name; }
std::optional<Op> primitive_from_name(std::string_view name);

// Evaluates one primitive. `b` is ignored by unary ops and required by binary
// ones. Any shape violation, solver failure or internal error surfaces as
// ExecutionFailure.
//
// Apart from the four sanitizing ops (log, abslog, normalize, logdet), a NaN
// in any operand never produces a finite value where it would have been read:
// comparisons and like-ops return NaN at those positions, and reductions to a
// scalar return NaN.
Tensor eval_primitive(Op op, const Tensor& a, const Tensor* b = nullptr);

inline Tensor eval_primitive(Op op, const Tensor& a, const Tensor& b) {
  return eval_primitive(op, a, &b);
}

}  // namespace zcforge

#endif  // ZCFORGE_PRIMITIVES_HPP_

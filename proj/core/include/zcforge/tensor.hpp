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

// Dense row-major float32 tensors of rank 0..4 and the numeric kernels the
// primitive catalog is built from.

#ifndef ZCFORGE_TENSOR_HPP_
#define ZCFORGE_TENSOR_HPP_

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "zcforge/error.hpp"

namespace zcforge {

using Shape = std::vector<std::size_t>;

inline constexpr std::size_t kMaxRank = 4;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Immutable after construction. Copies share the underlying buffer, so
// passing tensors by value is cheap.
class Tensor {
 public:
  // Rank-0 tensor holding 0.
  Tensor();
  Tensor(Shape shape, std::vector<float> data);

  static Tensor scalar(float value);
  static Tensor filled(Shape shape, float value);
  static Tensor vector(std::initializer_list<float> values);
  // Row-major 2-D literal; all rows must have equal length.
  static Tensor matrix(std::initializer_list<std::initializer_list<float>> rows);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t numel() const { return data_->size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::span<const float> data() const { return *data_; }
  float operator[](std::size_t flat) const { return (*data_)[flat]; }

  // Value of a single-element tensor.
  float item() const;

  // Same buffer, new shape. Throws ShapeMismatch if element counts differ.
  Tensor reshaped(Shape shape) const;

  bool all_finite() const;
  bool any_nan() const;

  // Equal shape and bit-identical payload (NaN payloads included).
  bool bitwise_equal(const Tensor& other) const;

 private:
  Shape shape_;
  std::shared_ptr<const std::vector<float>> data_;
};

// Right-aligned broadcasting. Throws ShapeMismatch when incompatible.
Shape broadcast_shape(const Shape& a, const Shape& b);

// Maps an output coordinate (flat, row-major over `out`) to the flat index of
// a broadcast operand of shape `in`.
class BroadcastIndexer {
 public:
  BroadcastIndexer(const Shape& in, const Shape& out);
  std::size_t operator()(std::size_t out_flat) const;

 private:
  std::vector<std::size_t> out_extents_;
  std::vector<std::size_t> in_strides_;  // 0 on broadcast axes
};

template <typename F>
Tensor broadcast_binary(const Tensor& a, const Tensor& b, F&& f) {
  const Shape out_shape = broadcast_shape(a.shape(), b.shape());
  const std::size_t n = shape_numel(out_shape);
  std::vector<float> out(n);
  const auto da = a.data();
  const auto db = b.data();
  if (a.shape() == b.shape()) {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(da[i], db[i]);
  } else {
    const BroadcastIndexer ia(a.shape(), out_shape);
    const BroadcastIndexer ib(b.shape(), out_shape);
    for (std::size_t i = 0; i < n; ++i) out[i] = f(da[ia(i)], db[ib(i)]);
  }
  return Tensor(out_shape, std::move(out));
}

template <typename F>
Tensor map_unary(const Tensor& a, F&& f) {
  const auto da = a.data();
  std::vector<float> out(da.size());
  for (std::size_t i = 0; i < da.size(); ++i) out[i] = f(da[i]);
  return Tensor(a.shape(), std::move(out));
}

// Batched matrix product over the last two axes; leading axes broadcast.
// Accumulates in double.
Tensor matmul(const Tensor& a, const Tensor& b);

// Square matrices larger than this are rejected by the eigen solvers.
inline constexpr std::size_t kMaxEigenSide = 512;

// Symmetric: real eigenvalues ascending by value.
// General: eigenvalue moduli ascending.
// Throws NumericalFailure on non-square input, non-finite entries, oversize
// input, or non-convergence.
std::vector<double> eigenvalues(const Tensor& a, bool symmetric);

// LU with partial pivoting in double precision. Require square rank-2 input
// (ShapeMismatch otherwise).
double determinant(const Tensor& a);
// log(det): -inf for singular, NaN for negative determinant.
double log_determinant(const Tensor& a);

}  // namespace zcforge

#endif  // ZCFORGE_TENSOR_HPP_

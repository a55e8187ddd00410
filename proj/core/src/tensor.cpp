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

#include "zcforge/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <limits>
#include <sstream>
#include <utility>

#include <Eigen/Dense>

namespace zcforge {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

Tensor::Tensor()
    : data_(std::make_shared<const std::vector<float>>(1, 0.0f)) {}

Tensor::Tensor(Shape shape, std::vector<float> data)
    : shape_(std::move(shape)) {
  if (shape_.size() > kMaxRank) {
    throw ShapeMismatch("tensor rank " + std::to_string(shape_.size()) +
                        " exceeds " + std::to_string(kMaxRank));
  }
  if (shape_numel(shape_) != data.size()) {
    throw ShapeMismatch("shape " + shape_to_string(shape_) + " needs " +
                        std::to_string(shape_numel(shape_)) +
                        " elements, got " + std::to_string(data.size()));
  }
  data_ = std::make_shared<const std::vector<float>>(std::move(data));
}

Tensor Tensor::scalar(float value) { return Tensor({}, {value}); }

Tensor Tensor::filled(Shape shape, float value) {
  const std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<float>(n, value));
}

Tensor Tensor::vector(std::initializer_list<float> values) {
  return Tensor({values.size()}, std::vector<float>(values));
}

Tensor Tensor::matrix(
    std::initializer_list<std::initializer_list<float>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<float> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeMismatch("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

float Tensor::item() const {
  if (numel() != 1) {
    throw ShapeMismatch("item() on tensor of shape " + shape_to_string(shape_));
  }
  return (*data_)[0];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape.size() > kMaxRank || shape_numel(shape) != numel()) {
    throw ShapeMismatch("cannot reshape " + shape_to_string(shape_) + " to " +
                        shape_to_string(shape));
  }
  Tensor out = *this;
  out.shape_ = std::move(shape);
  return out;
}

bool Tensor::all_finite() const {
  return std::all_of(data_->begin(), data_->end(),
                     [](float v) { return std::isfinite(v); });
}

bool Tensor::any_nan() const {
  return std::any_of(data_->begin(), data_->end(),
                     [](float v) { return std::isnan(v); });
}

bool Tensor::bitwise_equal(const Tensor& other) const {
  return shape_ == other.shape_ &&
         (data_ == other.data_ ||
          std::memcmp(data_->data(), other.data_->data(),
                      data_->size() * sizeof(float)) == 0);
}

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t ea = i < a.size() ? a[a.size() - 1 - i] : 1;
    const std::size_t eb = i < b.size() ? b[b.size() - 1 - i] : 1;
    if (ea != eb && ea != 1 && eb != 1) {
      throw ShapeMismatch("shapes " + shape_to_string(a) + " and " +
                          shape_to_string(b) + " do not broadcast");
    }
    out[rank - 1 - i] = ea == 1 ? eb : ea;
  }
  return out;
}

BroadcastIndexer::BroadcastIndexer(const Shape& in, const Shape& out)
    : out_extents_(out), in_strides_(out.size(), 0) {
  std::size_t stride = 1;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const std::size_t axis = in.size() - 1 - i;
    const std::size_t out_axis = out.size() - 1 - i;
    in_strides_[out_axis] = in[axis] == 1 ? 0 : stride;
    stride *= in[axis];
  }
}

std::size_t BroadcastIndexer::operator()(std::size_t out_flat) const {
  std::size_t idx = 0;
  for (std::size_t axis = out_extents_.size(); axis-- > 0;) {
    const std::size_t extent = out_extents_[axis];
    idx += (out_flat % extent) * in_strides_[axis];
    out_flat /= extent;
  }
  return idx;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() < 2 || b.rank() < 2) {
    throw ShapeMismatch("matmul needs rank >= 2 operands, got " +
                        shape_to_string(a.shape()) + " @ " +
                        shape_to_string(b.shape()));
  }
  const std::size_t m = a.dim(a.rank() - 2);
  const std::size_t k = a.dim(a.rank() - 1);
  const std::size_t k2 = b.dim(b.rank() - 2);
  const std::size_t n = b.dim(b.rank() - 1);
  if (k != k2) {
    throw ShapeMismatch("matmul inner extents differ: " +
                        shape_to_string(a.shape()) + " @ " +
                        shape_to_string(b.shape()));
  }
  const Shape batch_a(a.shape().begin(), a.shape().end() - 2);
  const Shape batch_b(b.shape().begin(), b.shape().end() - 2);
  Shape batch = broadcast_shape(batch_a, batch_b);
  const std::size_t nbatch = shape_numel(batch);
  const BroadcastIndexer ia(batch_a, batch);
  const BroadcastIndexer ib(batch_b, batch);

  Shape out_shape = batch;
  out_shape.push_back(m);
  out_shape.push_back(n);
  std::vector<float> out(nbatch * m * n);
  const auto da = a.data();
  const auto db = b.data();
  std::vector<double> row(n);
  for (std::size_t bi = 0; bi < nbatch; ++bi) {
    const float* pa = da.data() + ia(bi) * m * k;
    const float* pb = db.data() + ib(bi) * k * n;
    float* po = out.data() + bi * m * n;
    for (std::size_t i = 0; i < m; ++i) {
      std::fill(row.begin(), row.end(), 0.0);
      for (std::size_t p = 0; p < k; ++p) {
        const double av = pa[i * k + p];
        const float* brow = pb + p * n;
        for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
      }
      for (std::size_t j = 0; j < n; ++j) po[i * n + j] = static_cast<float>(row[j]);
    }
  }
  return Tensor(std::move(out_shape), std::move(out));
}

namespace {

Eigen::MatrixXd to_square_matrix(const Tensor& a, const char* what) {
  if (a.rank() != 2 || a.dim(0) != a.dim(1)) {
    throw NumericalFailure(std::string(what) + " needs a square matrix, got " +
                           shape_to_string(a.shape()));
  }
  const std::size_t n = a.dim(0);
  Eigen::MatrixXd m(n, n);
  const auto d = a.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = d[i * n + j];
  return m;
}

}  // namespace

std::vector<double> eigenvalues(const Tensor& a, bool symmetric) {
  const Eigen::MatrixXd m = to_square_matrix(a, "eigenvalues");
  if (static_cast<std::size_t>(m.rows()) > kMaxEigenSide) {
    throw NumericalFailure("eigenvalue input side " + std::to_string(m.rows()) +
                           " exceeds " + std::to_string(kMaxEigenSide));
  }
  if (!m.allFinite()) throw NumericalFailure("eigenvalues of non-finite matrix");
  std::vector<double> out;
  if (symmetric) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
        m, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
      throw NumericalFailure("symmetric eigensolver did not converge");
    }
    const auto& ev = solver.eigenvalues();
    out.assign(ev.data(), ev.data() + ev.size());
    std::sort(out.begin(), out.end());
  } else {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
      throw NumericalFailure("general eigensolver did not converge");
    }
    const auto& ev = solver.eigenvalues();
    out.reserve(static_cast<std::size_t>(ev.size()));
    for (Eigen::Index i = 0; i < ev.size(); ++i) out.push_back(std::abs(ev[i]));
    std::sort(out.begin(), out.end());
  }
  return out;
}

namespace {

struct LuResult {
  double det;     // signed product of pivots
  double logabs;  // sum of log|pivot|
  double sign;    // -1, 0, +1, or NaN
};

LuResult lu_factor(const Tensor& a) {
  if (a.rank() != 2 || a.dim(0) != a.dim(1)) {
    throw ShapeMismatch("determinant needs a square matrix, got " +
                        shape_to_string(a.shape()));
  }
  const std::size_t n = a.dim(0);
  std::vector<double> lu(a.data().begin(), a.data().end());
  double sign = 1.0;
  double det = 1.0;
  double logabs = 0.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    double best = std::abs(lu[col * n + col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double v = std::abs(lu[r * n + col]);
      if (v > best || std::isnan(v)) {
        best = v;
        pivot = r;
      }
    }
    if (std::isnan(best)) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      return {nan, nan, nan};
    }
    if (best == 0.0) {
      return {0.0, -std::numeric_limits<double>::infinity(), 0.0};
    }
    if (pivot != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu[col * n + j], lu[pivot * n + j]);
      sign = -sign;
      det = -det;
    }
    const double d = lu[col * n + col];
    if (d < 0) sign = -sign;
    det *= d;
    logabs += std::log(std::abs(d));
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = lu[r * n + col] / d;
      if (f == 0.0) continue;
      for (std::size_t j = col + 1; j < n; ++j) lu[r * n + j] -= f * lu[col * n + j];
    }
  }
  return {det, logabs, sign};
}

}  // namespace

double determinant(const Tensor& a) { return lu_factor(a).det; }

double log_determinant(const Tensor& a) {
  const LuResult lu = lu_factor(a);
  if (std::isnan(lu.sign)) return lu.sign;
  if (lu.sign == 0.0) return -std::numeric_limits<double>::infinity();
  if (lu.sign < 0.0) return std::numeric_limits<double>::quiet_NaN();
  return lu.logabs;
}

}  // namespace zcforge

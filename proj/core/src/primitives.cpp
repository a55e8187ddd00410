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

#include "zcforge/primitives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace zcforge {

namespace {

constexpr float kNaN = std::numeric_limits<float>::quiet_NaN();

constexpr std::array<PrimitiveInfo, kNumPrimitives> kTable = {{
    {Op::kEltwiseSum, 2, "eltwise_sum"},
    {Op::kEltwiseDiff, 2, "eltwise_diff"},
    {Op::kEltwiseMul, 2, "eltwise_mul"},
    {Op::kMatmul, 2, "matmul"},
    {Op::kLessThan, 2, "less_than"},
    {Op::kGreaterThan, 2, "greater_than"},
    {Op::kEqualTo, 2, "equal_to"},
    {Op::kLog, 1, "log"},
    {Op::kAbsLog, 1, "abslog"},
    {Op::kAbs, 1, "abs"},
    {Op::kSquare, 1, "square"},
    {Op::kExp, 1, "exp"},
    {Op::kNormalize, 1, "normalize"},
    {Op::kRelu, 1, "relu"},
    {Op::kSign, 1, "sign"},
    {Op::kHeaviside, 1, "heaviside"},
    {Op::kInvert, 1, "invert"},
    {Op::kFrobeniusNorm, 1, "frobenius_norm"},
    {Op::kDeterminant, 1, "determinant"},
    {Op::kLogDeterminant, 1, "logdet"},
    {Op::kSymEigRatio, 1, "sym_eig_ratio"},
    {Op::kEigRatio, 1, "eig_ratio"},
    {Op::kNormalizedSum, 1, "normalized_sum"},
    {Op::kL1Mean, 1, "l1_mean"},
    {Op::kHamming, 2, "hamming"},
    {Op::kKlDiv, 2, "kl_div"},
    {Op::kCosineSimilarity, 2, "cosine_similarity"},
    {Op::kSoftmax, 1, "softmax"},
    {Op::kSigmoid, 1, "sigmoid"},
    {Op::kOnesLike, 1, "ones_like"},
    {Op::kZerosLike, 1, "zeros_like"},
    {Op::kGreaterThanZero, 1, "gt_zero"},
    {Op::kLessThanZero, 1, "lt_zero"},
    {Op::kNumel, 1, "numel"},
}};

Tensor scalar_of(double v) { return Tensor::scalar(static_cast<float>(v)); }

float heaviside(float x) {
  if (std::isnan(x)) return x;
  return x > 0.0f ? 1.0f : 0.0f;
}

// Comparison producing {0,1}, NaN when either side is NaN.
template <typename Cmp>
Tensor compare(const Tensor& a, const Tensor& b, Cmp cmp) {
  return broadcast_binary(a, b, [&](float x, float y) {
    if (std::isnan(x) || std::isnan(y)) return kNaN;
    return cmp(x, y) ? 1.0f : 0.0f;
  });
}

Tensor normalize(const Tensor& a) {
  const auto d = a.data();
  const double n = static_cast<double>(d.size());
  double sum = 0.0;
  for (float v : d) sum += v;
  const double mean = sum / n;
  double ss = 0.0;
  for (float v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));  // n == 1 gives 0/0
  return map_unary(a, [&](float v) {
    const float c = static_cast<float>((v - mean) / sd);
    return std::isnan(c) ? 0.0f : c;
  });
}

// (n0, -1) view used by the eigen-ratio and cosine ops. Rank-1 input becomes
// a column (n, 1).
Tensor rows_view(const Tensor& a) {
  if (a.rank() == 0 || a.numel() == 0) {
    throw ShapeMismatch("row view needs a non-empty tensor of rank >= 1");
  }
  const std::size_t n0 = a.dim(0);
  return a.reshaped({n0, a.numel() / n0});
}

Tensor gram(const Tensor& rows) {
  const std::size_t n = rows.dim(0);
  const std::size_t m = rows.dim(1);
  std::vector<float> t(rows.numel());
  const auto d = rows.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) t[j * n + i] = d[i * m + j];
  return matmul(rows, Tensor({m, n}, std::move(t)));
}

Tensor transpose2d(const Tensor& a) {
  const std::size_t n = a.dim(0);
  const std::size_t m = a.dim(1);
  std::vector<float> t(a.numel());
  const auto d = a.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) t[j * n + i] = d[i * m + j];
  return Tensor({m, n}, std::move(t));
}

Tensor sym_eig_ratio(const Tensor& a) {
  const Tensor g = gram(rows_view(a));
  const Tensor s = broadcast_binary(g, transpose2d(g),
                                    [](float x, float y) { return x + y; });
  const std::vector<double> e = eigenvalues(s, /*symmetric=*/true);
  return scalar_of(e.back() / e.front());
}

Tensor eig_ratio(const Tensor& a) {
  const std::vector<double> e = eigenvalues(gram(rows_view(a)), false);
  return scalar_of(e.back() / e.front());
}

Tensor hamming(const Tensor& a, const Tensor& b) {
  const Shape out = broadcast_shape(a.shape(), b.shape());
  const std::size_t n = shape_numel(out);
  const BroadcastIndexer ia(a.shape(), out);
  const BroadcastIndexer ib(b.shape(), out);
  const auto da = a.data();
  const auto db = b.data();
  double count = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const float x = heaviside(da[ia(i)]);
    const float y = heaviside(db[ib(i)]);
    if (std::isnan(x) || std::isnan(y)) return Tensor::scalar(kNaN);
    if (x != y) count += 1.0;
  }
  return scalar_of(count);
}

// Batch-mean KL divergence; `a` holds log-probabilities, `b` probabilities.
Tensor kl_div(const Tensor& a, const Tensor& b) {
  const Shape out = broadcast_shape(a.shape(), b.shape());
  const std::size_t n = shape_numel(out);
  const BroadcastIndexer ia(a.shape(), out);
  const BroadcastIndexer ib(b.shape(), out);
  const auto da = a.data();
  const auto db = b.data();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = da[ia(i)];
    const double y = db[ib(i)];
    const double ylogy = (y == 0.0) ? 0.0 : y * std::log(y);
    total += ylogy - y * x;
  }
  const double batch = out.empty() ? 1.0 : static_cast<double>(out[0]);
  return scalar_of(total / batch);
}

Tensor cosine_similarity(const Tensor& a, const Tensor& b) {
  const Tensor ra = rows_view(a);
  const Tensor rb = rows_view(b);
  const Shape out = broadcast_shape(ra.shape(), rb.shape());
  const std::size_t rows = out[0];
  const std::size_t cols = out[1];
  const BroadcastIndexer ia(ra.shape(), out);
  const BroadcastIndexer ib(rb.shape(), out);
  const auto da = ra.data();
  const auto db = rb.data();
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double x = da[ia(r * cols + c)];
      const double y = db[ib(r * cols + c)];
      dot += x * y;
      na += x * x;
      nb += y * y;
    }
    if (na == 0.0 || nb == 0.0) continue;
    total += dot / (std::sqrt(na) * std::sqrt(nb));
  }
  return scalar_of(total);
}

Tensor softmax_last(const Tensor& a) {
  const std::size_t width = a.rank() == 0 ? 1 : a.dim(a.rank() - 1);
  const auto d = a.data();
  std::vector<float> out(d.size());
  if (width == 0) return Tensor(a.shape(), std::move(out));
  for (std::size_t start = 0; start < d.size(); start += width) {
    bool has_nan = false;
    float mx = -std::numeric_limits<float>::infinity();
    for (std::size_t j = 0; j < width; ++j) {
      const float v = d[start + j];
      if (std::isnan(v)) has_nan = true;
      mx = std::max(mx, v);
    }
    if (has_nan) {
      std::fill(out.begin() + start, out.begin() + start + width, kNaN);
      continue;
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < width; ++j) {
      const double e = std::exp(static_cast<double>(d[start + j]) - mx);
      out[start + j] = static_cast<float>(e);
      sum += e;
    }
    for (std::size_t j = 0; j < width; ++j) {
      out[start + j] = static_cast<float>(out[start + j] / sum);
    }
  }
  return Tensor(a.shape(), std::move(out));
}

Tensor dispatch(Op op, const Tensor& a, const Tensor* b) {
  switch (op) {
    case Op::kEltwiseSum:
      return broadcast_binary(a, *b, [](float x, float y) { return x + y; });
    case Op::kEltwiseDiff:
      return broadcast_binary(a, *b, [](float x, float y) { return x - y; });
    case Op::kEltwiseMul:
      return broadcast_binary(a, *b, [](float x, float y) { return x * y; });
    case Op::kMatmul:
      return matmul(a, *b);
    case Op::kLessThan:
      return compare(a, *b, [](float x, float y) { return x < y; });
    case Op::kGreaterThan:
      return compare(a, *b, [](float x, float y) { return x > y; });
    case Op::kEqualTo:
      return compare(a, *b, [](float x, float y) { return x == y; });
    case Op::kLog:
      return map_unary(a, [](float x) { return std::log(x <= 0.0f ? 1.0f : x); });
    case Op::kAbsLog:
      return map_unary(a, [](float x) { return std::log(std::abs(x == 0.0f ? 1.0f : x)); });
    case Op::kAbs:
      return map_unary(a, [](float x) { return std::abs(x); });
    case Op::kSquare:
      return map_unary(a, [](float x) { return x * x; });
    case Op::kExp:
      return map_unary(a, [](float x) { return std::exp(x); });
    case Op::kNormalize:
      return normalize(a);
    case Op::kRelu:
      return map_unary(a, [](float x) { return std::isnan(x) || x > 0.0f ? x : 0.0f; });
    case Op::kSign:
      return map_unary(a, [](float x) {
        if (std::isnan(x)) return x;
        return x > 0.0f ? 1.0f : (x < 0.0f ? -1.0f : 0.0f);
      });
    case Op::kHeaviside:
      return map_unary(a, heaviside);
    case Op::kInvert:
      return map_unary(a, [](float x) { return 1.0f / x; });
    case Op::kFrobeniusNorm: {
      double ss = 0.0;
      for (float v : a.data()) ss += static_cast<double>(v) * v;
      return scalar_of(std::sqrt(ss));
    }
    case Op::kDeterminant:
      return scalar_of(determinant(a));
    case Op::kLogDeterminant: {
      const double v = log_determinant(a);
      return scalar_of(std::isnan(v) ? 0.0 : v);
    }
    case Op::kSymEigRatio:
      return sym_eig_ratio(a);
    case Op::kEigRatio:
      return eig_ratio(a);
    case Op::kNormalizedSum: {
      double s = 0.0;
      for (float v : a.data()) s += v;
      return scalar_of(s / static_cast<double>(a.numel()));
    }
    case Op::kL1Mean: {
      double s = 0.0;
      for (float v : a.data()) s += std::abs(static_cast<double>(v));
      return scalar_of(s / static_cast<double>(a.numel()));
    }
    case Op::kHamming:
      return hamming(a, *b);
    case Op::kKlDiv:
      return kl_div(a, *b);
    case Op::kCosineSimilarity:
      return cosine_similarity(a, *b);
    case Op::kSoftmax:
      return softmax_last(a);
    case Op::kSigmoid:
      return map_unary(a, [](float x) { return 1.0f / (1.0f + std::exp(-x)); });
    case Op::kOnesLike:
      return map_unary(a, [](float x) { return std::isnan(x) ? x : 1.0f; });
    case Op::kZerosLike:
      return map_unary(a, [](float x) { return std::isnan(x) ? x : 0.0f; });
    case Op::kGreaterThanZero:
      return map_unary(a, [](float x) { return std::isnan(x) ? x : (x > 0.0f ? 1.0f : 0.0f); });
    case Op::kLessThanZero:
      return map_unary(a, [](float x) { return std::isnan(x) ? x : (x < 0.0f ? 1.0f : 0.0f); });
    case Op::kNumel:
      return Tensor::scalar(a.any_nan() ? kNaN : static_cast<float>(a.numel()));
  }
  throw ExecutionFailure("unknown primitive id " +
                         std::to_string(static_cast<int>(op)));
}

}  // namespace

const std::array<PrimitiveInfo, kNumPrimitives>& primitive_table() {
  return kTable;
}

const PrimitiveInfo& primitive_info(Op op) {
  const auto id = static_cast<std::size_t>(op);
  if (id >= kTable.size()) {
    throw ExecutionFailure("unknown primitive id " + std::to_string(id));
  }
  return kTable[id];
}

std::optional<Op> primitive_from_name(std::string_view name) {
  for (const auto& info : kTable) {
    if (info.name == name) return info.op;
  }
  return std::nullopt;
}

Tensor eval_primitive(Op op, const Tensor& a, const Tensor* b) {
  const PrimitiveInfo& info = primitive_info(op);
  if (info.arity == 2 && b == nullptr) {
    throw ExecutionFailure(std::string(info.name) + " needs two operands");
  }
  try {
    return dispatch(op, a, b);
  } catch (const ExecutionFailure&) {
    throw;
  } catch (const std::exception& e) {
    throw ExecutionFailure(std::string(info.name) + ": " + e.what());
  }
}

}  // namespace zcforge

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

// Straight-line double-precision reference for the 34 primitives, plus the
// fixed case suite. Nothing here calls into the library's kernels: broadcast
// indexing, matmul, determinants and eigenvalues are all recomputed from
// first principles (cofactors, closed-form 2x2 / 3x3 spectra).

#ifndef ZCFORGE_TESTS_PRIMITIVE_ORACLE_HPP_
#define ZCFORGE_TESTS_PRIMITIVE_ORACLE_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "zcforge/primitives.hpp"
#include "zcforge/tensor.hpp"

namespace zcforge::oracle {

struct Value {
  Shape shape;
  std::vector<double> v;
};

inline std::vector<double> as_double(const Tensor& t) {
  return {t.data().begin(), t.data().end()};
}

inline std::size_t count(const Shape& s) {
  std::size_t n = 1;
  for (auto e : s) n *= e;
  return n;
}

inline Shape bshape(Shape a, Shape b) {
  while (a.size() < b.size()) a.insert(a.begin(), 1);
  while (b.size() < a.size()) b.insert(b.begin(), 1);
  Shape out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i] && a[i] != 1 && b[i] != 1) throw std::runtime_error("bcast");
    out[i] = std::max(a[i], b[i]);
  }
  return out;
}

// Flat index into `in` for output position `flat` of shape `out`.
inline std::size_t src(const Shape& in, const Shape& out, std::size_t flat) {
  std::vector<std::size_t> coord(out.size());
  for (std::size_t i = out.size(); i-- > 0;) {
    coord[i] = flat % out[i];
    flat /= out[i];
  }
  const std::size_t off = out.size() - in.size();
  std::size_t idx = 0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    idx = idx * in[i] + (in[i] == 1 ? 0 : coord[off + i]);
  }
  return idx;
}

template <typename F>
Value zip(const Tensor& a, const Tensor& b, F f) {
  Value r{bshape(a.shape(), b.shape()), {}};
  const auto x = as_double(a), y = as_double(b);
  for (std::size_t i = 0; i < count(r.shape); ++i) {
    r.v.push_back(f(x[src(a.shape(), r.shape, i)], y[src(b.shape(), r.shape, i)]));
  }
  return r;
}

template <typename F>
Value each(const Tensor& a, F f) {
  Value r{a.shape(), {}};
  for (double x : as_double(a)) r.v.push_back(f(x));
  return r;
}

inline Value scalar(double x) { return {{}, {x}}; }

inline double det(std::vector<double> m, std::size_t n) {
  if (n == 1) return m[0];
  if (n == 2) return m[0] * m[3] - m[1] * m[2];
  double d = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<double> minor;
    for (std::size_t i = 1; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (j != c) minor.push_back(m[i * n + j]);
    d += (c % 2 ? -1.0 : 1.0) * m[c] * det(minor, n - 1);
  }
  return d;
}

// Eigenvalues of a symmetric 1x1, 2x2 or 3x3 matrix, ascending.
inline std::vector<double> sym_eigs(const std::vector<double>& m, std::size_t n) {
  if (n == 1) return {m[0]};
  if (n == 2) {
    const double t = m[0] + m[3];
    const double d = m[0] * m[3] - m[1] * m[2];
    const double disc = std::sqrt(std::max(0.0, t * t / 4 - d));
    return {t / 2 - disc, t / 2 + disc};
  }
  if (n != 3) throw std::runtime_error("oracle eig supports n <= 3");
  const double p1 = m[1] * m[1] + m[2] * m[2] + m[5] * m[5];
  const double q = (m[0] + m[4] + m[8]) / 3;
  const double p2 = (m[0] - q) * (m[0] - q) + (m[4] - q) * (m[4] - q) +
                    (m[8] - q) * (m[8] - q) + 2 * p1;
  const double p = std::sqrt(p2 / 6);
  std::vector<double> b(9);
  for (int i = 0; i < 9; ++i) b[i] = (m[i] - (i % 4 == 0 ? q : 0.0)) / p;
  const double r = std::clamp(det(b, 3) / 2, -1.0, 1.0);
  const double phi = std::acos(r) / 3;
  const double e1 = q + 2 * p * std::cos(phi);
  const double e3 = q + 2 * p * std::cos(phi + 2 * std::numbers::pi / 3);
  std::vector<double> e = {e3, 3 * q - e1 - e3, e1};
  std::sort(e.begin(), e.end());
  return e;
}

// Rows of a reshaped to (n0, rest); G = R R^T.
inline std::vector<double> gram_of(const Tensor& a, std::size_t& n) {
  n = a.shape()[0];
  const std::size_t m = a.numel() / n;
  const auto d = as_double(a);
  std::vector<double> g(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < m; ++k) g[i * n + j] += d[i * m + k] * d[j * m + k];
  return g;
}

inline Value ref_primitive(Op op, const Tensor& a, const Tensor* bp) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const Tensor& b = bp ? *bp : a;
  const auto x = as_double(a);
  switch (op) {
    case Op::kEltwiseSum:
      return zip(a, b, [](double p, double q) { return p + q; });
    case Op::kEltwiseDiff:
      return zip(a, b, [](double p, double q) { return p - q; });
    case Op::kEltwiseMul:
      return zip(a, b, [](double p, double q) { return p * q; });
    case Op::kMatmul: {
      const Shape& sa = a.shape();
      const Shape& sb = b.shape();
      const std::size_t n = sa[sa.size() - 2], k = sa.back(), m = sb.back();
      const Shape ba(sa.begin(), sa.end() - 2), bb(sb.begin(), sb.end() - 2);
      const Shape batch = bshape(ba, bb);
      Value r{batch, {}};
      r.shape.push_back(n);
      r.shape.push_back(m);
      const auto y = as_double(b);
      for (std::size_t t = 0; t < count(batch); ++t) {
        const std::size_t oa = src(ba, batch, t) * n * k;
        const std::size_t ob = src(bb, batch, t) * k * m;
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < m; ++j) {
            double s = 0;
            for (std::size_t l = 0; l < k; ++l) s += x[oa + i * k + l] * y[ob + l * m + j];
            r.v.push_back(s);
          }
      }
      return r;
    }
    case Op::kLessThan:
      return zip(a, b, [](double p, double q) { return p < q ? 1.0 : 0.0; });
    case Op::kGreaterThan:
      return zip(a, b, [](double p, double q) { return p > q ? 1.0 : 0.0; });
    case Op::kEqualTo:
      return zip(a, b, [](double p, double q) { return p == q ? 1.0 : 0.0; });
    case Op::kLog:
      return each(a, [](double p) { return p <= 0 ? 0.0 : std::log(p); });
    case Op::kAbsLog:
      return each(a, [](double p) { return p == 0 ? 0.0 : std::log(std::fabs(p)); });
    case Op::kAbs:
      return each(a, [](double p) { return std::fabs(p); });
    case Op::kSquare:
      return each(a, [](double p) { return p * p; });
    case Op::kExp:
      return each(a, [](double p) { return std::exp(p); });
    case Op::kNormalize: {
      double mean = 0;
      for (double p : x) mean += p;
      mean /= x.size();
      double var = 0;
      for (double p : x) var += (p - mean) * (p - mean);
      const double sd = std::sqrt(var / (x.size() - 1.0));
      return each(a, [&](double p) {
        const double c = (p - mean) / sd;
        return std::isnan(c) ? 0.0 : c;
      });
    }
    case Op::kRelu:
      return each(a, [](double p) { return p > 0 ? p : 0.0; });
    case Op::kSign:
      return each(a, [](double p) { return p > 0 ? 1.0 : (p < 0 ? -1.0 : 0.0); });
    case Op::kHeaviside:
    case Op::kGreaterThanZero:
      return each(a, [](double p) { return p > 0 ? 1.0 : 0.0; });
    case Op::kLessThanZero:
      return each(a, [](double p) { return p < 0 ? 1.0 : 0.0; });
    case Op::kInvert:
      return each(a, [](double p) { return 1.0 / p; });
    case Op::kFrobeniusNorm: {
      double s = 0;
      for (double p : x) s += p * p;
      return scalar(std::sqrt(s));
    }
    case Op::kDeterminant:
      return scalar(det(x, a.shape()[0]));
    case Op::kLogDeterminant: {
      const double d = det(x, a.shape()[0]);
      if (d < 0) return scalar(0.0);
      return scalar(std::log(d));
    }
    case Op::kSymEigRatio: {
      std::size_t n = 0;
      auto g = gram_of(a, n);
      for (auto& e : g) e *= 2;  // G + G^T with G symmetric
      const auto e = sym_eigs(g, n);
      return scalar(e.back() / e.front());
    }
    case Op::kEigRatio: {
      std::size_t n = 0;
      const auto g = gram_of(a, n);
      auto e = sym_eigs(g, n);
      for (auto& v : e) v = std::fabs(v);
      std::sort(e.begin(), e.end());
      return scalar(e.back() / e.front());
    }
    case Op::kNormalizedSum: {
      double s = 0;
      for (double p : x) s += p;
      return scalar(s / x.size());
    }
    case Op::kL1Mean: {
      double s = 0;
      for (double p : x) s += std::fabs(p);
      return scalar(s / x.size());
    }
    case Op::kHamming: {
      const Value h = zip(a, b, [](double p, double q) {
        return (p > 0) != (q > 0) ? 1.0 : 0.0;
      });
      double s = 0;
      for (double v : h.v) s += v;
      return scalar(s);
    }
    case Op::kKlDiv: {
      const Value t = zip(a, b, [](double p, double q) {
        return q == 0 ? 0.0 : q * (std::log(q) - p);
      });
      double s = 0;
      for (double v : t.v) s += v;
      return scalar(s / (t.shape.empty() ? 1.0 : t.shape[0]));
    }
    case Op::kCosineSimilarity: {
      const Shape ra = {a.shape()[0], a.numel() / a.shape()[0]};
      const Shape rb = {b.shape()[0], b.numel() / b.shape()[0]};
      const Shape out = bshape(ra, rb);
      const auto y = as_double(b);
      double total = 0;
      for (std::size_t r = 0; r < out[0]; ++r) {
        double dot = 0, na = 0, nb = 0;
        for (std::size_t c = 0; c < out[1]; ++c) {
          const double p = x[src(ra, out, r * out[1] + c)];
          const double q = y[src(rb, out, r * out[1] + c)];
          dot += p * q;
          na += p * p;
          nb += q * q;
        }
        if (na > 0 && nb > 0) total += dot / std::sqrt(na * nb);
      }
      return scalar(total);
    }
    case Op::kSoftmax: {
      const std::size_t w = a.rank() == 0 ? 1 : a.shape().back();
      Value r{a.shape(), std::vector<double>(x.size())};
      for (std::size_t s = 0; s < x.size(); s += w) {
        double z = 0;
        for (std::size_t j = 0; j < w; ++j) z += std::exp(x[s + j]);
        for (std::size_t j = 0; j < w; ++j) r.v[s + j] = std::exp(x[s + j]) / z;
      }
      return r;
    }
    case Op::kSigmoid:
      return each(a, [](double p) { return 1.0 / (1.0 + std::exp(-p)); });
    case Op::kOnesLike:
      return each(a, [](double) { return 1.0; });
    case Op::kZerosLike:
      return each(a, [](double) { return 0.0; });
    case Op::kNumel:
      return scalar(static_cast<double>(a.numel()));
  }
  return scalar(nan);
}

struct PrimCase {
  Op op;
  Tensor a;
  std::optional<Tensor> b;
};

inline Tensor ramp(Shape shape, double start, double step) {
  std::vector<float> d(count(shape));
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<float>(start + step * i);
  return Tensor(std::move(shape), std::move(d));
}

// The fixed suite: every op gets at least five cases.
inline std::vector<PrimCase> primitive_cases() {
  const std::vector<Tensor> unary = {
      Tensor::vector({-2, -1, 0, 1, 3}),
      Tensor::matrix({{0.5f, -1.25f, 2.0f}, {3.5f, -0.75f, 0.125f}}),
      ramp({2, 2, 3}, -0.55, 0.1),
      Tensor::scalar(1.7f),
      ramp({1, 2, 2, 2}, -3, 1),
  };
  const std::vector<std::pair<Tensor, Tensor>> binary = {
      {Tensor::vector({1, 2, 3}), Tensor::vector({3, 2, 1})},
      {Tensor::matrix({{1}, {2}}), Tensor::vector({10, 20})},
      {Tensor::scalar(2.5f), unary[1]},
      {unary[2], ramp({2, 1, 3}, 0.3, -0.2)},
      {unary[4], Tensor::vector({0, 1})},
  };
  std::vector<PrimCase> out;
  auto add_unary = [&](Op op, const std::vector<Tensor>& pool) {
    for (const auto& t : pool) out.push_back({op, t, std::nullopt});
  };
  for (Op op : {Op::kEltwiseSum, Op::kEltwiseDiff, Op::kEltwiseMul, Op::kLessThan,
                Op::kGreaterThan, Op::kEqualTo, Op::kHamming}) {
    for (const auto& [a, b] : binary) out.push_back({op, a, b});
  }
  for (Op op : {Op::kLog, Op::kAbsLog, Op::kAbs, Op::kSquare, Op::kExp, Op::kRelu,
                Op::kSign, Op::kHeaviside, Op::kInvert, Op::kFrobeniusNorm,
                Op::kNormalizedSum, Op::kL1Mean, Op::kSoftmax, Op::kSigmoid,
                Op::kOnesLike, Op::kZerosLike, Op::kGreaterThanZero, Op::kLessThanZero,
                Op::kNumel}) {
    add_unary(op, unary);
  }
  add_unary(Op::kNormalize, unary);
  out.push_back({Op::kNormalize, Tensor::vector({5, 5, 5}), std::nullopt});

  // matmul
  const std::vector<std::pair<Tensor, Tensor>> mm = {
      {Tensor::matrix({{1, 0}, {0, 1}}), Tensor::matrix({{1, 2}, {3, 4}})},
      {Tensor::matrix({{1, 2}}), Tensor::matrix({{3}, {4}})},
      {ramp({2, 3, 4}, -5, 1), ramp({4, 5}, 2, -1)},
      {ramp({3, 2}, 0.25, 0.375), ramp({2, 4}, -1.1, 0.3)},
      {ramp({2, 1, 2, 3}, -4, 1), ramp({3, 3, 2}, 5, -1)},
  };
  for (const auto& [a, b] : mm) out.push_back({Op::kMatmul, a, b});

  // determinants
  const std::vector<Tensor> sq = {
      Tensor::matrix({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}),
      Tensor::matrix({{2, 0}, {0, 3}}),
      Tensor::matrix({{0, 1}, {1, 0}}),
      Tensor::matrix({{1.5f, 0.2f, -0.3f}, {0.1f, 2.2f, 0.4f}, {-0.6f, 0.5f, 1.8f}}),
      Tensor::matrix({{2, 1, 0, 3}, {1, 4, 1, 0}, {0, 2, 5, 1}, {1, 0, 1, 6}}),
      Tensor::matrix({{1, 2}, {2, 4}}),
  };
  add_unary(Op::kDeterminant, sq);
  add_unary(Op::kLogDeterminant, sq);

  // eigen ratios: integer rows keep the Gram matrix exact in float
  const std::vector<Tensor> eig = {
      Tensor::matrix({{1, 0}, {0, 1}}),
      Tensor::matrix({{1, 2, 0}, {0, 1, 1}}),
      ramp({2, 2, 2}, 1, 1),
      Tensor::matrix({{3, 1, 0}, {1, 4, 1}, {0, 2, 5}}),
      Tensor::matrix({{2, 1, 0, 1}, {0, 3, 1, 1}, {1, 0, 2, 3}}),
      Tensor::vector({4}),
  };
  add_unary(Op::kSymEigRatio, eig);
  add_unary(Op::kEigRatio, eig);

  // KL divergence
  const std::vector<std::pair<Tensor, Tensor>> kl = {
      {Tensor::matrix({{std::log(0.5f), std::log(0.5f)}}), Tensor::matrix({{0.25f, 0.75f}})},
      {Tensor::matrix({{-1.2f, -0.9f, -1.3f}, {-0.4f, -2.1f, -1.6f}}),
       Tensor::matrix({{0.2f, 0.5f, 0.3f}, {0.6f, 0.1f, 0.3f}})},
      {Tensor::vector({-0.5f, -1.5f, -2.5f}), Tensor::vector({0.5f, 0.3f, 0.2f})},
      {Tensor::matrix({{-1, -2, -3}, {-0.5f, -0.25f, -4}}), Tensor::vector({0.1f, 0.6f, 0.3f})},
      {Tensor::vector({-1, -1}), Tensor::vector({0, 1})},
  };
  for (const auto& [a, b] : kl) out.push_back({Op::kKlDiv, a, b});

  // cosine similarity
  const std::vector<std::pair<Tensor, Tensor>> cs = {
      {Tensor::matrix({{1, 2, 3}, {-1, 0, 2}}), Tensor::matrix({{2, 0, 1}, {1, 1, 1}})},
      {Tensor::matrix({{0, 0, 0}, {1, 2, 2}}), Tensor::matrix({{1, 1, 1}, {2, 1, 2}})},
      {Tensor::vector({1, -2, 0, 3}), Tensor::vector({2, 2, 5, -1})},
      {ramp({2, 2, 2}, -0.7, 0.3), ramp({2, 4}, 0.9, -0.2)},
      {Tensor::matrix({{0.5f, 1.5f, -0.25f}, {2, -1, 0.75f}}), Tensor::matrix({{1, 2, 3}})},
  };
  for (const auto& [a, b] : cs) out.push_back({Op::kCosineSimilarity, a, b});
  return out;
}

inline bool integral(double v) { return std::isfinite(v) && v == std::floor(v); }

// Empty string when `got` matches `want`: exactly for integer-valued cases,
// within `rel` otherwise.
inline std::string compare(const PrimCase& c, const Tensor& got, const Value& want,
                           double rel = 1e-6) {
  std::ostringstream msg;
  if (got.shape() != want.shape) {
    msg << "shape " << shape_to_string(got.shape()) << " vs " << shape_to_string(want.shape);
    return msg.str();
  }
  bool exact = true;
  for (float v : c.a.data()) exact = exact && integral(v);
  if (c.b)
    for (float v : c.b->data()) exact = exact && integral(v);
  for (double v : want.v) exact = exact && (integral(v) || std::isinf(v));
  for (std::size_t i = 0; i < want.v.size(); ++i) {
    const double g = got[i], w = want.v[i];
    if (std::isnan(w) || std::isnan(g)) {
      if (std::isnan(w) != std::isnan(g)) msg << "[" << i << "] " << g << " vs " << w;
      continue;
    }
    if (std::isinf(w) || std::isinf(g)) {
      if (g != w) msg << "[" << i << "] " << g << " vs " << w;
      continue;
    }
    const bool ok = exact ? g == w : std::fabs(g - w) <= rel * std::fabs(w);
    if (!ok) msg << "[" << i << "] " << g << " vs " << w << (exact ? " (exact)" : "") << ' ';
  }
  return msg.str();
}

}  // namespace zcforge::oracle

#endif  // ZCFORGE_TESTS_PRIMITIVE_ORACLE_HPP_

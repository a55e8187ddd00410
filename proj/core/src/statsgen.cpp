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

#include "zcforge/statsgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

namespace zcforge {

namespace {

constexpr double kBnEps = 1e-5;

template <typename T>
T relu(T x) {
  return x > T(0) ? x : T(0);
}

// Per-network shape bookkeeping.
struct Dims {
  std::size_t batch;
  std::size_t hw;  // H * W
  int res;
};

template <typename T>
void conv_forward(const std::vector<T>& in, const std::vector<T>& w, int cin,
                  int cout, int k, const Dims& d, std::vector<T>& out) {
  const int res = d.res;
  const int pad = k / 2;
  out.assign(d.batch * static_cast<std::size_t>(cout) * d.hw, T(0));
  for (std::size_t b = 0; b < d.batch; ++b) {
    for (int o = 0; o < cout; ++o) {
      T* op = out.data() + (b * cout + o) * d.hw;
      for (int i = 0; i < cin; ++i) {
        const T* ip = in.data() + (b * cin + i) * d.hw;
        for (int kh = 0; kh < k; ++kh) {
          const int dy = kh - pad;
          const int y0 = std::max(0, -dy), y1 = std::min(res, res - dy);
          for (int kw = 0; kw < k; ++kw) {
            const int dx = kw - pad;
            const int x0 = std::max(0, -dx), x1 = std::min(res, res - dx);
            const T wv = w[((static_cast<std::size_t>(o) * cin + i) * k + kh) * k + kw];
            for (int y = y0; y < y1; ++y) {
              T* orow = op + y * res;
              const T* irow = ip + (y + dy) * res + dx;
              for (int x = x0; x < x1; ++x) orow[x] += wv * irow[x];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv_backward(const std::vector<T>& dout, const std::vector<T>& in,
                   const std::vector<T>& w, int cin, int cout, int k,
                   const Dims& d, std::vector<T>& din, std::vector<T>& dw) {
  const int res = d.res;
  const int pad = k / 2;
  din.assign(d.batch * static_cast<std::size_t>(cin) * d.hw, T(0));
  dw.assign(w.size(), T(0));
  for (std::size_t b = 0; b < d.batch; ++b) {
    for (int o = 0; o < cout; ++o) {
      const T* gp = dout.data() + (b * cout + o) * d.hw;
      for (int i = 0; i < cin; ++i) {
        const T* ip = in.data() + (b * cin + i) * d.hw;
        T* dip = din.data() + (b * cin + i) * d.hw;
        for (int kh = 0; kh < k; ++kh) {
          const int dy = kh - pad;
          const int y0 = std::max(0, -dy), y1 = std::min(res, res - dy);
          for (int kw = 0; kw < k; ++kw) {
            const int dx = kw - pad;
            const int x0 = std::max(0, -dx), x1 = std::min(res, res - dx);
            const std::size_t widx =
                ((static_cast<std::size_t>(o) * cin + i) * k + kh) * k + kw;
            const T wv = w[widx];
            T acc = T(0);
            for (int y = y0; y < y1; ++y) {
              const T* grow = gp + y * res;
              const T* irow = ip + (y + dy) * res + dx;
              T* drow = dip + (y + dy) * res + dx;
              for (int x = x0; x < x1; ++x) {
                acc += grow[x] * irow[x];
                drow[x] += wv * grow[x];
              }
            }
            dw[widx] += acc;
          }
        }
      }
    }
  }
}

template <typename T>
struct BnCache {
  std::vector<T> xhat;
  std::vector<T> invstd;  // per channel
  std::vector<T> mean;    // per channel, batch statistics
  std::vector<T> var;     // per channel, biased
};

template <typename T>
void bn_forward_train(const std::vector<T>& x, const std::vector<T>& gamma,
                      const std::vector<T>& beta, int channels, const Dims& d,
                      std::vector<T>& y, BnCache<T>& cache) {
  const std::size_t n = d.batch * d.hw;
  y.resize(x.size());
  cache.xhat.resize(x.size());
  cache.invstd.assign(channels, T(0));
  cache.mean.assign(channels, T(0));
  cache.var.assign(channels, T(0));
  for (int c = 0; c < channels; ++c) {
    double sum = 0.0;
    for (std::size_t b = 0; b < d.batch; ++b) {
      const T* p = x.data() + (b * channels + c) * d.hw;
      for (std::size_t i = 0; i < d.hw; ++i) sum += p[i];
    }
    const T mean = static_cast<T>(sum / static_cast<double>(n));
    double ss = 0.0;
    for (std::size_t b = 0; b < d.batch; ++b) {
      const T* p = x.data() + (b * channels + c) * d.hw;
      for (std::size_t i = 0; i < d.hw; ++i) {
        const double v = static_cast<double>(p[i] - mean);
        ss += v * v;
      }
    }
    const T var = static_cast<T>(ss / static_cast<double>(n));
    const T invstd = T(1) / std::sqrt(var + static_cast<T>(kBnEps));
    cache.mean[c] = mean;
    cache.var[c] = var;
    cache.invstd[c] = invstd;
    for (std::size_t b = 0; b < d.batch; ++b) {
      const std::size_t off = (b * channels + c) * d.hw;
      for (std::size_t i = 0; i < d.hw; ++i) {
        const T xh = (x[off + i] - mean) * invstd;
        cache.xhat[off + i] = xh;
        y[off + i] = gamma[c] * xh + beta[c];
      }
    }
  }
}

template <typename T>
void bn_backward(const std::vector<T>& dy, const BnCache<T>& cache,
                 const std::vector<T>& gamma, int channels, const Dims& d,
                 std::vector<T>& dx, std::vector<T>& dgamma,
                 std::vector<T>& dbeta) {
  const std::size_t n = d.batch * d.hw;
  dx.resize(dy.size());
  dgamma.assign(channels, T(0));
  dbeta.assign(channels, T(0));
  for (int c = 0; c < channels; ++c) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t b = 0; b < d.batch; ++b) {
      const std::size_t off = (b * channels + c) * d.hw;
      for (std::size_t i = 0; i < d.hw; ++i) {
        sum_dy += dy[off + i];
        sum_dy_xhat += static_cast<double>(dy[off + i]) * cache.xhat[off + i];
      }
    }
    dgamma[c] = static_cast<T>(sum_dy_xhat);
    dbeta[c] = static_cast<T>(sum_dy);
    const T g = gamma[c];
    const T mean_dxhat = static_cast<T>(g * sum_dy / static_cast<double>(n));
    const T mean_dxhat_xhat = static_cast<T>(g * sum_dy_xhat / static_cast<double>(n));
    const T invstd = cache.invstd[c];
    for (std::size_t b = 0; b < d.batch; ++b) {
      const std::size_t off = (b * channels + c) * d.hw;
      for (std::size_t i = 0; i < d.hw; ++i) {
        const T dxhat = dy[off + i] * g;
        dx[off + i] =
            invstd * (dxhat - mean_dxhat - cache.xhat[off + i] * mean_dxhat_xhat);
      }
    }
  }
}

template <typename T>
void bn_forward_eval(const std::vector<T>& x, const std::vector<T>& gamma,
                     const std::vector<T>& beta, const std::vector<T>& rmean,
                     const std::vector<T>& rvar, int channels, const Dims& d,
                     std::vector<T>& y) {
  y.resize(x.size());
  for (std::size_t b = 0; b < d.batch; ++b) {
    for (int c = 0; c < channels; ++c) {
      const std::size_t off = (b * channels + c) * d.hw;
      const T invstd = T(1) / std::sqrt(rvar[c] + static_cast<T>(kBnEps));
      for (std::size_t i = 0; i < d.hw; ++i) {
        y[off + i] = gamma[c] * (x[off + i] - rmean[c]) * invstd + beta[c];
      }
    }
  }
}

enum class BnMode { kTrain, kEval };

// Activations kept for the backward pass.
template <typename T>
struct BlockTape {
  std::vector<T> t1, t2, t4;
  std::vector<T> conv_out;
  BnCache<T> bn;
};

template <typename T>
struct Tape {
  std::vector<BlockTape<T>> blocks;
  std::vector<T> head_in;  // post-ReLU for RCB, block output for CBR
  std::vector<T> pooled;   // (B, C_last)
  std::vector<T> probs;    // (B, classes)
  T loss{};
};

template <typename T>
void apply_override(const ActivationOverride<T>* ov, std::size_t block,
                    CapturePoint point, std::vector<T>& v) {
  if (ov == nullptr || ov->block != block || ov->point != point) return;
  if (ov->values.size() != v.size()) {
    throw ShapeMismatch("activation override has " +
                        std::to_string(ov->values.size()) + " values, expected " +
                        std::to_string(v.size()));
  }
  v = ov->values;
}

template <typename T>
Tape<T> run_forward(const ToyArch& arch, const NetworkParams<T>& params,
                    const Batch<T>& batch, BnMode mode,
                    const ActivationOverride<T>* ov) {
  validate_arch(arch);
  const Dims d{batch.size, static_cast<std::size_t>(arch.resolution) * arch.resolution,
               arch.resolution};
  if (batch.size == 0 || batch.labels.size() != batch.size ||
      batch.images.size() != batch.size * arch.in_channels * d.hw) {
    throw ShapeMismatch("batch does not match architecture input " +
                        arch.describe());
  }
  if (params.conv.size() != arch.depth()) {
    throw ShapeMismatch("parameters do not match architecture " + arch.describe());
  }
  Tape<T> tape;
  tape.blocks.resize(arch.depth());
  std::vector<T> x = batch.images;
  for (std::size_t blk = 0; blk < arch.depth(); ++blk) {
    BlockTape<T>& bt = tape.blocks[blk];
    const int cin = arch.block_in_channels(blk);
    const int cout = arch.channels[blk];
    const int k = arch.kernels[blk];
    apply_override(ov, blk, CapturePoint::kBlockInput, x);
    bt.t1 = x;
    std::vector<T> bn_out;
    if (arch.pattern == BlockPattern::kRCB) {
      bt.t2.resize(x.size());
      std::transform(x.begin(), x.end(), bt.t2.begin(), relu<T>);
      apply_override(ov, blk, CapturePoint::kMid, bt.t2);
      conv_forward(bt.t2, params.conv[blk], cin, cout, k, d, bt.conv_out);
      if (mode == BnMode::kTrain) {
        bn_forward_train(bt.conv_out, params.gamma[blk], params.beta[blk], cout, d,
                         bn_out, bt.bn);
      } else {
        bn_forward_eval(bt.conv_out, params.gamma[blk], params.beta[blk],
                        params.running_mean[blk], params.running_var[blk], cout, d,
                        bn_out);
      }
      bt.t4 = std::move(bn_out);
    } else {
      conv_forward(bt.t1, params.conv[blk], cin, cout, k, d, bt.conv_out);
      if (mode == BnMode::kTrain) {
        bn_forward_train(bt.conv_out, params.gamma[blk], params.beta[blk], cout, d,
                         bn_out, bt.bn);
      } else {
        bn_forward_eval(bt.conv_out, params.gamma[blk], params.beta[blk],
                        params.running_mean[blk], params.running_var[blk], cout, d,
                        bn_out);
      }
      bt.t2 = std::move(bn_out);
      apply_override(ov, blk, CapturePoint::kMid, bt.t2);
      bt.t4.resize(bt.t2.size());
      std::transform(bt.t2.begin(), bt.t2.end(), bt.t4.begin(), relu<T>);
    }
    apply_override(ov, blk, CapturePoint::kBlockOutput, bt.t4);
    x = bt.t4;
  }

  const int clast = arch.channels.back();
  const int classes = arch.num_classes;
  if (arch.pattern == BlockPattern::kRCB) {
    tape.head_in.resize(x.size());
    std::transform(x.begin(), x.end(), tape.head_in.begin(), relu<T>);
  } else {
    tape.head_in = x;
  }
  tape.pooled.assign(d.batch * clast, T(0));
  for (std::size_t b = 0; b < d.batch; ++b) {
    for (int c = 0; c < clast; ++c) {
      const T* p = tape.head_in.data() + (b * clast + c) * d.hw;
      double s = 0.0;
      for (std::size_t i = 0; i < d.hw; ++i) s += p[i];
      tape.pooled[b * clast + c] = static_cast<T>(s / static_cast<double>(d.hw));
    }
  }
  tape.probs.assign(d.batch * classes, T(0));
  double loss = 0.0;
  std::vector<double> logits(classes);
  for (std::size_t b = 0; b < d.batch; ++b) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < classes; ++j) {
      double z = params.linear_b[j];
      for (int c = 0; c < clast; ++c) {
        z += static_cast<double>(params.linear_w[j * clast + c]) * tape.pooled[b * clast + c];
      }
      logits[j] = z;
      mx = std::max(mx, z);
    }
    double se = 0.0;
    for (int j = 0; j < classes; ++j) se += std::exp(logits[j] - mx);
    const double lse = mx + std::log(se);
    for (int j = 0; j < classes; ++j) {
      tape.probs[b * classes + j] = static_cast<T>(std::exp(logits[j] - lse));
    }
    loss += lse - logits[batch.labels[b]];
  }
  tape.loss = static_cast<T>(loss / static_cast<double>(d.batch));
  return tape;
}

template <typename T>
NetworkParams<T> zeros_like_params(const NetworkParams<T>& p) {
  NetworkParams<T> g;
  auto zero = [](const std::vector<std::vector<T>>& v) {
    std::vector<std::vector<T>> out;
    for (const auto& x : v) out.emplace_back(x.size(), T(0));
    return out;
  };
  g.conv = zero(p.conv);
  g.gamma = zero(p.gamma);
  g.beta = zero(p.beta);
  g.linear_w.assign(p.linear_w.size(), T(0));
  g.linear_b.assign(p.linear_b.size(), T(0));
  return g;
}

}  // namespace

std::string_view pattern_name(BlockPattern p) {
  return p == BlockPattern::kRCB ? "RCB" : "CBR";
}

BlockPattern pattern_from_name(std::string_view name) {
  if (name == "RCB" || name == "rcb") return BlockPattern::kRCB;
  if (name == "CBR" || name == "cbr") return BlockPattern::kCBR;
  throw ConfigError("unknown block pattern '" + std::string(name) +
                    "' (expected RCB or CBR)");
}

std::int64_t ToyArch::param_count() const {
  std::int64_t n = 0;
  for (std::size_t b = 0; b < depth(); ++b) {
    n += static_cast<std::int64_t>(channels[b]) * block_in_channels(b) *
         kernels[b] * kernels[b];
    n += 2 * static_cast<std::int64_t>(channels[b]);
  }
  if (!channels.empty()) {
    n += static_cast<std::int64_t>(num_classes) * channels.back() + num_classes;
  }
  return n;
}

std::int64_t ToyArch::flops() const {
  const std::int64_t hw = static_cast<std::int64_t>(resolution) * resolution;
  std::int64_t n = 0;
  for (std::size_t b = 0; b < depth(); ++b) {
    n += static_cast<std::int64_t>(channels[b]) * block_in_channels(b) *
         kernels[b] * kernels[b] * hw;
  }
  if (!channels.empty()) {
    n += static_cast<std::int64_t>(num_classes) * channels.back();
  }
  return n;
}

std::string ToyArch::describe() const {
  std::ostringstream os;
  os << pattern_name(pattern) << "/r" << resolution << "/in" << in_channels
     << "/cls" << num_classes << '/';
  for (std::size_t b = 0; b < depth(); ++b) {
    if (b) os << '-';
    os << channels[b] << 'k' << kernels[b];
  }
  return os.str();
}

ToyArch parse_arch(std::string_view text) {
  ToyArch arch;
  const std::string s(text);
  std::istringstream is(s);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(is, part, '/')) parts.push_back(part);
  auto fail = [&](const std::string& why) -> ParseError {
    return ParseError("bad architecture '" + s + "': " + why, 0);
  };
  if (parts.size() != 5) throw fail("expected 5 '/'-separated fields");
  try {
    arch.pattern = pattern_from_name(parts[0]);
  } catch (const ConfigError&) {
    throw fail("unknown pattern");
  }
  auto field = [&](const std::string& p, const std::string& prefix) {
    if (p.rfind(prefix, 0) != 0) throw fail("expected '" + prefix + "' field");
    try {
      return std::stoi(p.substr(prefix.size()));
    } catch (const std::exception&) {
      throw fail("bad integer in '" + p + "'");
    }
  };
  arch.resolution = field(parts[1], "r");
  arch.in_channels = field(parts[2], "in");
  arch.num_classes = field(parts[3], "cls");
  std::istringstream blocks(parts[4]);
  std::string blk;
  while (std::getline(blocks, blk, '-')) {
    const auto kpos = blk.find('k');
    if (kpos == std::string::npos) throw fail("block '" + blk + "' lacks 'k'");
    try {
      arch.channels.push_back(std::stoi(blk.substr(0, kpos)));
      arch.kernels.push_back(std::stoi(blk.substr(kpos + 1)));
    } catch (const std::exception&) {
      throw fail("bad block '" + blk + "'");
    }
  }
  return arch;
}

void validate_arch(const ToyArch& arch) {
  auto bad = [&](const std::string& why) {
    return ShapeMismatch("architecture " + arch.describe() + ": " + why);
  };
  if (arch.channels.size() != arch.kernels.size()) {
    throw bad("channels/kernels length mismatch");
  }
  if (arch.depth() < 2 || arch.depth() > 8) throw bad("depth must be in [2, 8]");
  for (std::size_t b = 0; b < arch.depth(); ++b) {
    if (arch.channels[b] < 2 || arch.channels[b] > 32) {
      throw bad("channels must be in [2, 32]");
    }
    const int k = arch.kernels[b];
    if (k != 1 && k != 3 && k != 5 && k != 7) throw bad("kernel must be 1, 3, 5 or 7");
  }
  if (arch.resolution != 8 && arch.resolution != 16) {
    throw bad("resolution must be 8 or 16");
  }
  if (arch.in_channels < 1) throw bad("in_channels must be positive");
  if (arch.num_classes < 2) throw bad("num_classes must be at least 2");
}

NetworkParams<float> init_params(const ToyArch& arch, Rng& rng) {
  validate_arch(arch);
  NetworkParams<float> p;
  for (std::size_t b = 0; b < arch.depth(); ++b) {
    const int cin = arch.block_in_channels(b);
    const int cout = arch.channels[b];
    const int k = arch.kernels[b];
    const double bound = 1.0 / std::sqrt(static_cast<double>(cin * k * k));
    std::uniform_real_distribution<float> u(static_cast<float>(-bound),
                                            static_cast<float>(bound));
    std::vector<float> w(static_cast<std::size_t>(cout) * cin * k * k);
    for (float& v : w) v = u(rng);
    p.conv.push_back(std::move(w));
    p.gamma.emplace_back(cout, 1.0f);
    p.beta.emplace_back(cout, 0.0f);
    p.running_mean.emplace_back(cout, 0.0f);
    p.running_var.emplace_back(cout, 1.0f);
  }
  const int clast = arch.channels.back();
  const double bound = 1.0 / std::sqrt(static_cast<double>(clast));
  std::uniform_real_distribution<float> u(static_cast<float>(-bound),
                                          static_cast<float>(bound));
  p.linear_w.resize(static_cast<std::size_t>(arch.num_classes) * clast);
  for (float& v : p.linear_w) v = u(rng);
  p.linear_b.assign(arch.num_classes, 0.0f);
  return p;
}

template <typename To, typename From>
NetworkParams<To> cast_params(const NetworkParams<From>& p) {
  auto cv = [](const std::vector<From>& v) {
    return std::vector<To>(v.begin(), v.end());
  };
  auto cvv = [&](const std::vector<std::vector<From>>& v) {
    std::vector<std::vector<To>> out;
    out.reserve(v.size());
    for (const auto& x : v) out.push_back(cv(x));
    return out;
  };
  NetworkParams<To> q;
  q.conv = cvv(p.conv);
  q.gamma = cvv(p.gamma);
  q.beta = cvv(p.beta);
  q.linear_w = cv(p.linear_w);
  q.linear_b = cv(p.linear_b);
  q.running_mean = cvv(p.running_mean);
  q.running_var = cvv(p.running_var);
  return q;
}

template NetworkParams<double> cast_params(const NetworkParams<float>&);
template NetworkParams<float> cast_params(const NetworkParams<double>&);
template NetworkParams<float> cast_params(const NetworkParams<float>&);

template <typename T>
T forward_loss(const ToyArch& arch, const NetworkParams<T>& params,
               const Batch<T>& batch, const ActivationOverride<T>* override_at) {
  return run_forward(arch, params, batch, BnMode::kTrain, override_at).loss;
}

template float forward_loss(const ToyArch&, const NetworkParams<float>&,
                            const Batch<float>&, const ActivationOverride<float>*);
template double forward_loss(const ToyArch&, const NetworkParams<double>&,
                             const Batch<double>&, const ActivationOverride<double>*);

template <typename T>
ForwardBackwardResult<T> forward_backward(const ToyArch& arch,
                                          const NetworkParams<T>& params,
                                          const Batch<T>& batch) {
  Tape<T> tape = run_forward<T>(arch, params, batch, BnMode::kTrain, nullptr);
  const Dims d{batch.size, static_cast<std::size_t>(arch.resolution) * arch.resolution,
               arch.resolution};
  const int clast = arch.channels.back();
  const int classes = arch.num_classes;
  ForwardBackwardResult<T> out;
  out.loss = tape.loss;
  out.grads = zeros_like_params(params);
  out.blocks.resize(arch.depth());

  // Cross-entropy + linear head.
  const T inv_b = T(1) / static_cast<T>(d.batch);
  std::vector<T> dpooled(d.batch * clast, T(0));
  for (std::size_t b = 0; b < d.batch; ++b) {
    for (int j = 0; j < classes; ++j) {
      T dz = tape.probs[b * classes + j];
      if (j == batch.labels[b]) dz -= T(1);
      dz *= inv_b;
      out.grads.linear_b[j] += dz;
      for (int c = 0; c < clast; ++c) {
        out.grads.linear_w[j * clast + c] += dz * tape.pooled[b * clast + c];
        dpooled[b * clast + c] += dz * params.linear_w[j * clast + c];
      }
    }
  }
  // Global average pool (+ final ReLU for RCB).
  const std::vector<T>& last_out = tape.blocks.back().t4;
  std::vector<T> dy(last_out.size());
  const T inv_hw = T(1) / static_cast<T>(d.hw);
  for (std::size_t b = 0; b < d.batch; ++b) {
    for (int c = 0; c < clast; ++c) {
      const std::size_t off = (b * clast + c) * d.hw;
      const T g = dpooled[b * clast + c] * inv_hw;
      for (std::size_t i = 0; i < d.hw; ++i) {
        dy[off + i] = (arch.pattern == BlockPattern::kCBR || last_out[off + i] > T(0))
                          ? g
                          : T(0);
      }
    }
  }

  for (std::size_t blk = arch.depth(); blk-- > 0;) {
    const BlockTape<T>& bt = tape.blocks[blk];
    BlockCapture<T>& cap = out.blocks[blk];
    const int cin = arch.block_in_channels(blk);
    const int cout = arch.channels[blk];
    const int k = arch.kernels[blk];
    cap.t1 = bt.t1;
    cap.t2 = bt.t2;
    cap.t4 = bt.t4;
    cap.t4g = dy;
    std::vector<T> dconv;
    if (arch.pattern == BlockPattern::kRCB) {
      bn_backward(dy, bt.bn, params.gamma[blk], cout, d, dconv, out.grads.gamma[blk],
                  out.grads.beta[blk]);
      conv_backward(dconv, bt.t2, params.conv[blk], cin, cout, k, d, cap.t2g,
                    cap.t3g);
      cap.t1g.resize(cap.t2g.size());
      for (std::size_t i = 0; i < cap.t1g.size(); ++i) {
        cap.t1g[i] = bt.t1[i] > T(0) ? cap.t2g[i] : T(0);
      }
    } else {
      cap.t2g.resize(dy.size());
      for (std::size_t i = 0; i < dy.size(); ++i) {
        cap.t2g[i] = bt.t2[i] > T(0) ? dy[i] : T(0);
      }
      bn_backward(cap.t2g, bt.bn, params.gamma[blk], cout, d, dconv,
                  out.grads.gamma[blk], out.grads.beta[blk]);
      conv_backward(dconv, bt.t1, params.conv[blk], cin, cout, k, d, cap.t1g,
                    cap.t3g);
    }
    out.grads.conv[blk] = cap.t3g;
    dy = cap.t1g;
  }
  for (const auto& bt : tape.blocks) {
    out.batch_mean.push_back(bt.bn.mean);
    out.batch_var.push_back(bt.bn.var);
  }
  return out;
}

template ForwardBackwardResult<float> forward_backward(const ToyArch&,
                                                       const NetworkParams<float>&,
                                                       const Batch<float>&);
template ForwardBackwardResult<double> forward_backward(const ToyArch&,
                                                        const NetworkParams<double>&,
                                                        const Batch<double>&);

namespace {

template <typename T>
Tensor to_tensor(const std::vector<T>& v, Shape shape) {
  return Tensor(std::move(shape), std::vector<float>(v.begin(), v.end()));
}

template <typename T>
Batch<T> cast_batch(const Batch<float>& b) {
  Batch<T> out;
  out.size = b.size;
  out.images.assign(b.images.begin(), b.images.end());
  out.labels = b.labels;
  return out;
}

template <typename T>
std::vector<BlockCapture<T>> run_capture(const ToyArch& arch,
                                         const NetworkParams<float>& params,
                                         const Batch<float>& batch) {
  if constexpr (std::is_same_v<T, float>) {
    return forward_backward<float>(arch, params, batch).blocks;
  } else {
    return forward_backward<T>(arch, cast_params<T>(params), cast_batch<T>(batch))
        .blocks;
  }
}

}  // namespace

std::vector<BlockStats> capture_stats(const ToyArch& arch,
                                      const NetworkParams<float>& params,
                                      const Batch<float>& data, Rng& rng,
                                      const CaptureOptions& options) {
  validate_arch(arch);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  Batch<float> noise = data;
  for (float& v : noise.images) v = normal(rng);
  Batch<float> perturbed = data;
  if (options.noise_scale != 0.0) {
    const float scale = static_cast<float>(options.noise_scale);
    for (float& v : perturbed.images) v += scale * normal(rng);
  }

  const std::size_t depth = arch.depth();
  std::vector<BlockStats> stats(depth);
  const std::size_t bsz = data.size;
  const std::size_t res = static_cast<std::size_t>(arch.resolution);
  for (InputKind kind : kInputKinds) {
    const Batch<float>& in = kind == InputKind::kData    ? data
                             : kind == InputKind::kNoise ? noise
                                                         : perturbed;
    auto assign = [&](const auto& caps) {
      for (std::size_t blk = 0; blk < depth; ++blk) {
        const auto& c = caps[blk];
        BlockStats& s = stats[blk];
        s.block_index = static_cast<std::uint32_t>(blk);
        const std::size_t cin = arch.block_in_channels(blk);
        const std::size_t cout = arch.channels[blk];
        const std::size_t mid =
            arch.pattern == BlockPattern::kRCB ? cin : cout;
        const Shape in_shape{bsz, cin, res, res};
        const Shape mid_shape{bsz, mid, res, res};
        const Shape out_shape{bsz, cout, res, res};
        const std::size_t k = arch.kernels[blk];
        const Shape w_shape{cout, cin, k, k};
        s[make_slot(StatBase::kT1, kind)] = to_tensor(c.t1, in_shape);
        s[make_slot(StatBase::kT2, kind)] = to_tensor(c.t2, mid_shape);
        s[make_slot(StatBase::kT4, kind)] = to_tensor(c.t4, out_shape);
        s[make_slot(StatBase::kT1G, kind)] = to_tensor(c.t1g, in_shape);
        s[make_slot(StatBase::kT2G, kind)] = to_tensor(c.t2g, mid_shape);
        s[make_slot(StatBase::kT3G, kind)] = to_tensor(c.t3g, w_shape);
        s[make_slot(StatBase::kT4G, kind)] = to_tensor(c.t4g, out_shape);
        if (kind == InputKind::kData) {
          s[StatSlot::kT3] = to_tensor(params.conv[blk], w_shape);
        }
      }
    };
    if (options.precision == Precision::kFloat64) {
      assign(run_capture<double>(arch, params, in));
    } else {
      assign(run_capture<float>(arch, params, in));
    }
  }
  return stats;
}

// --- synthetic task ---------------------------------------------------------

namespace {

void render_grating(const TaskSpec& spec, int label, Rng& rng, float* out) {
  const int res = spec.resolution;
  const double theta = std::numbers::pi * label / spec.num_classes;
  const double freq = std::uniform_real_distribution<double>(1.0, 2.5)(rng);
  const double phase =
      std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
  std::uniform_real_distribution<double> colour(0.5, 1.0);
  std::normal_distribution<double> noise(0.0, spec.noise);
  const double ct = std::cos(theta), st = std::sin(theta);
  for (int c = 0; c < spec.in_channels; ++c) {
    const double amp = colour(rng);
    for (int y = 0; y < res; ++y) {
      for (int x = 0; x < res; ++x) {
        const double u = (x * ct + y * st) / res;
        const double v =
            amp * std::sin(2.0 * std::numbers::pi * freq * u + phase) + noise(rng);
        out[(static_cast<std::size_t>(c) * res + y) * res + x] = static_cast<float>(v);
      }
    }
  }
}

Batch<float> render_batch(const TaskSpec& spec, std::size_t size, bool balanced,
                          Rng& rng) {
  Batch<float> b;
  b.size = size;
  const std::size_t per = static_cast<std::size_t>(spec.in_channels) *
                          spec.resolution * spec.resolution;
  b.images.resize(size * per);
  b.labels.resize(size);
  for (std::size_t i = 0; i < size; ++i) {
    const int label =
        balanced ? static_cast<int>(i % spec.num_classes)
                 : static_cast<int>(uniform_index(rng, spec.num_classes));
    b.labels[i] = label;
    render_grating(spec, label, rng, b.images.data() + i * per);
  }
  return b;
}

}  // namespace

SyntheticTask make_task(const TaskSpec& spec, std::uint64_t seed) {
  SyntheticTask task;
  task.spec = spec;
  Rng train_rng = make_rng(seed, {1});
  Rng test_rng = make_rng(seed, {2});
  task.train = render_batch(spec, spec.train_size, false, train_rng);
  task.test = render_batch(spec, spec.test_size, true, test_rng);
  return task;
}

Batch<float> sample_task_batch(const TaskSpec& spec, std::size_t size, Rng& rng) {
  return render_batch(spec, size, false, rng);
}

double evaluate_accuracy(const ToyArch& arch, const NetworkParams<float>& params,
                         const Batch<float>& batch) {
  if (batch.size == 0) return 0.0;
  const Tape<float> tape =
      run_forward<float>(arch, params, batch, BnMode::kEval, nullptr);
  std::size_t correct = 0;
  const int classes = arch.num_classes;
  for (std::size_t b = 0; b < batch.size; ++b) {
    const float* p = tape.probs.data() + b * classes;
    const int pred = static_cast<int>(std::max_element(p, p + classes) - p);
    if (pred == batch.labels[b]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(batch.size);
}

TrainResult train_and_label(const ToyArch& arch, NetworkParams<float> params,
                            const SyntheticTask& task, const TrainOptions& options,
                            Rng& rng) {
  validate_arch(arch);
  const Batch<float>& train = task.train;
  const std::size_t per = train.size ? train.images.size() / train.size : 0;
  std::vector<std::size_t> order(train.size);
  std::iota(order.begin(), order.end(), 0);
  const float lr = static_cast<float>(options.lr);
  const float m = static_cast<float>(options.bn_momentum);
  auto sgd = [lr](std::vector<float>& w, const std::vector<float>& g) {
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
  };
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < train.size; start += options.batch_size) {
      const std::size_t n = std::min(options.batch_size, train.size - start);
      if (n < 2) continue;  // batch statistics need more than one sample
      Batch<float> mb;
      mb.size = n;
      mb.images.reserve(n * per);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t src = order[start + i];
        mb.images.insert(mb.images.end(), train.images.begin() + src * per,
                         train.images.begin() + (src + 1) * per);
        mb.labels.push_back(train.labels[src]);
      }
      const ForwardBackwardResult<float> fb = forward_backward(arch, params, mb);
      if (!std::isfinite(fb.loss)) {
        return {1.0 / arch.num_classes, true};
      }
      for (std::size_t b = 0; b < arch.depth(); ++b) {
        sgd(params.conv[b], fb.grads.conv[b]);
        sgd(params.gamma[b], fb.grads.gamma[b]);
        sgd(params.beta[b], fb.grads.beta[b]);
        const double count =
            static_cast<double>(n) * arch.resolution * arch.resolution;
        const float unbias = static_cast<float>(count / (count - 1.0));
        for (std::size_t c = 0; c < params.running_mean[b].size(); ++c) {
          params.running_mean[b][c] =
              (1 - m) * params.running_mean[b][c] + m * fb.batch_mean[b][c];
          params.running_var[b][c] = (1 - m) * params.running_var[b][c] +
                                     m * unbias * fb.batch_var[b][c];
        }
      }
      sgd(params.linear_w, fb.grads.linear_w);
      sgd(params.linear_b, fb.grads.linear_b);
    }
  }
  return {evaluate_accuracy(arch, params, task.test), false};
}

// --- design spaces ----------------------------------------------------------

void validate_space(const SpaceSpec& spec) {
  auto bad = [&](const std::string& why) {
    return ConfigError("space '" + spec.name + "': " + why);
  };
  if (spec.name.empty()) throw bad("name must not be empty");
  if (spec.min_depth < 2 || spec.max_depth > 8 || spec.min_depth > spec.max_depth) {
    throw bad("depth range must satisfy 2 <= min_depth <= max_depth <= 8");
  }
  if (spec.channels.empty() || spec.kernels.empty()) {
    throw bad("channels and kernels must be non-empty");
  }
  for (int c : spec.channels) {
    if (c < 2 || c > 32) throw bad("channels must be in [2, 32]");
  }
  for (int k : spec.kernels) {
    if (k != 1 && k != 3 && k != 5 && k != 7) throw bad("kernels must be 1, 3, 5 or 7");
  }
  if (std::set<int>(spec.channels.begin(), spec.channels.end()).size() !=
          spec.channels.size() ||
      std::set<int>(spec.kernels.begin(), spec.kernels.end()).size() !=
          spec.kernels.size()) {
    throw bad("channel and kernel choices must be distinct");
  }
  if (spec.resolution != 8 && spec.resolution != 16) {
    throw bad("resolution must be 8 or 16");
  }
  if (spec.num_classes < 2) throw bad("num_classes must be at least 2");
  if (spec.in_channels < 1) throw bad("in_channels must be positive");
}

namespace {

constexpr std::uint64_t kSat = std::numeric_limits<std::uint64_t>::max();

std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > kSat / a) return kSat;
  return a * b;
}

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
  return a > kSat - b ? kSat : a + b;
}

std::uint64_t depth_count(const SpaceSpec& spec, int depth) {
  const std::uint64_t per = spec.channels.size() * spec.kernels.size();
  if (spec.shared_block_config) return per;
  std::uint64_t n = 1;
  for (int i = 0; i < depth; ++i) n = sat_mul(n, per);
  return n;
}

}  // namespace

ToyArch decode_arch(const SpaceSpec& spec, std::uint64_t index) {
  ToyArch arch;
  arch.pattern = spec.pattern;
  arch.resolution = spec.resolution;
  arch.in_channels = spec.in_channels;
  arch.num_classes = spec.num_classes;
  int depth = spec.min_depth;
  for (; depth <= spec.max_depth; ++depth) {
    const std::uint64_t n = depth_count(spec, depth);
    if (index < n) break;
    index -= n;
  }
  const std::uint64_t nk = spec.kernels.size();
  const std::uint64_t per = spec.channels.size() * nk;
  if (spec.shared_block_config) {
    const int c = spec.channels[index / nk];
    const int k = spec.kernels[index % nk];
    arch.channels.assign(depth, c);
    arch.kernels.assign(depth, k);
    return arch;
  }
  for (int b = 0; b < depth; ++b) {
    const std::uint64_t digit = index % per;
    index /= per;
    arch.channels.push_back(spec.channels[digit / nk]);
    arch.kernels.push_back(spec.kernels[digit % nk]);
  }
  return arch;
}

std::uint64_t grid_size(const SpaceSpec& spec) {
  std::uint64_t n = 0;
  for (int d = spec.min_depth; d <= spec.max_depth; ++d) {
    n = sat_add(n, depth_count(spec, d));
  }
  return n;
}

std::vector<ToyArch> sample_space(const SpaceSpec& spec, std::size_t n, Rng& rng) {
  validate_space(spec);
  const std::uint64_t total = grid_size(spec);
  if (total == kSat) throw ConfigError("space '" + spec.name + "' is too large");
  if (total < n) {
    throw SpaceTooSmall("space '" + spec.name + "' has " + std::to_string(total) +
                        " architectures, " + std::to_string(n) + " requested");
  }
  // Floyd's algorithm: n distinct grid indices with n draws.
  std::unordered_set<std::uint64_t> chosen;
  std::vector<std::uint64_t> picks;
  picks.reserve(n);
  for (std::uint64_t j = total - n; j < total; ++j) {
    const std::uint64_t t = std::uniform_int_distribution<std::uint64_t>(0, j)(rng);
    const std::uint64_t pick = chosen.insert(t).second ? t : j;
    if (pick == j) chosen.insert(j);
    picks.push_back(pick);
  }
  std::vector<ToyArch> out;
  out.reserve(n);
  for (std::uint64_t idx : picks) out.push_back(decode_arch(spec, idx));
  return out;
}

}  // namespace zcforge

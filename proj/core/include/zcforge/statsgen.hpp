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

// Toy convolutional design space with hand-written forward/backward passes.
//
// A network is a chain of conv blocks followed by a classifier head:
//
//   RCB block:  x -> ReLU -> Conv2D -> BatchNorm2D -> y
//   CBR block:  x -> Conv2D -> BatchNorm2D -> ReLU -> y
//   head:       [ReLU, RCB only] -> global average pool -> Linear
//
// Convolutions are stride 1 with same padding and no bias. BatchNorm always
// runs on batch statistics (eps 1e-5) during forward_backward; running
// averages are only used by the evaluation pass after training.
//
// Captured tensors per block:
//   T1  block input
//   T2  RCB: ReLU output (conv input)      CBR: BatchNorm output (ReLU input)
//   T3  conv weight (C_out, C_in, k, k)
//   T4  block output
// and their loss gradients T1G..T4G.

#ifndef ZCFORGE_STATSGEN_HPP_
#define ZCFORGE_STATSGEN_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "zcforge/block_stats.hpp"
#include "zcforge/rng.hpp"

namespace zcforge {

enum class BlockPattern : std::uint8_t { kRCB, kCBR };

std::string_view pattern_name(BlockPattern p);
BlockPattern pattern_from_name(std::string_view name);  // throws ConfigError

struct ToyArch {
  BlockPattern pattern = BlockPattern::kRCB;
  int in_channels = 3;
  int resolution = 8;
  int num_classes = 4;
  std::vector<int> channels;  // output channels per block
  std::vector<int> kernels;   // kernel size per block

  std::size_t depth() const { return channels.size(); }
  int block_in_channels(std::size_t block) const {
    return block == 0 ? in_channels : channels[block - 1];
  }
  std::int64_t param_count() const;
  // Multiply-accumulate count of one forward pass for a single image.
  std::int64_t flops() const;
  // Compact text form, e.g. "RCB/r8/in3/cls4/8k3-16k5"; parse_arch inverts it.
  std::string describe() const;

  bool operator==(const ToyArch&) const = default;
};

ToyArch parse_arch(std::string_view text);  // throws ParseError

// Throws ShapeMismatch when the architecture is outside the toy space:
// 2..8 blocks, 2..32 channels, kernels in {1,3,5,7}, resolution 8 or 16.
void validate_arch(const ToyArch& arch);

template <typename T>
struct NetworkParams {
  std::vector<std::vector<T>> conv;   // per block, (C_out, C_in, k, k)
  std::vector<std::vector<T>> gamma;  // per block, C_out
  std::vector<std::vector<T>> beta;
  std::vector<T> linear_w;  // (num_classes, C_last)
  std::vector<T> linear_b;  // num_classes
  // BatchNorm running statistics, used only by evaluate_accuracy.
  std::vector<std::vector<T>> running_mean;
  std::vector<std::vector<T>> running_var;
};

// Conv weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)) (the default Kaiming-
// uniform init of mainstream frameworks), linear weights likewise, linear
// bias 0, BatchNorm gamma 1 and beta 0.
NetworkParams<float> init_params(const ToyArch& arch, Rng& rng);

template <typename To, typename From>
NetworkParams<To> cast_params(const NetworkParams<From>& p);

// Images are NCHW, row-major.
template <typename T>
struct Batch {
  std::size_t size = 0;
  std::vector<T> images;
  std::vector<int> labels;
};

template <typename T>
struct BlockCapture {
  std::vector<T> t1, t2, t4;
  std::vector<T> t1g, t2g, t3g, t4g;
};

template <typename T>
struct ForwardBackwardResult {
  T loss{};
  std::vector<BlockCapture<T>> blocks;
  NetworkParams<T> grads;  // running-stat fields left empty
  // Per-block BatchNorm batch mean and biased variance.
  std::vector<std::vector<T>> batch_mean;
  std::vector<std::vector<T>> batch_var;
};

// One forward and one reverse-mode pass with mean cross-entropy loss.
template <typename T>
ForwardBackwardResult<T> forward_backward(const ToyArch& arch,
                                          const NetworkParams<T>& params,
                                          const Batch<T>& batch);

// Where a tensor is substituted during forward_loss; mirrors the capture
// points T1, T2 and T4.
enum class CapturePoint : std::uint8_t { kBlockInput, kMid, kBlockOutput };

template <typename T>
struct ActivationOverride {
  std::size_t block = 0;
  CapturePoint point = CapturePoint::kBlockInput;
  std::vector<T> values;
};

// Loss of the forward pass, optionally with one captured activation replaced.
// Used for finite-difference checks of the captured gradients.
template <typename T>
T forward_loss(const ToyArch& arch, const NetworkParams<T>& params,
               const Batch<T>& batch,
               const ActivationOverride<T>* override_at = nullptr);

enum class Precision : std::uint8_t { kFloat32, kFloat64 };

struct CaptureOptions {
  // Standard deviation of the noise added for the perturbed input.
  double noise_scale = 0.1;  // sqrt(0.01)
  Precision precision = Precision::kFloat32;
};

// Runs forward_backward for the data batch, a standard-normal batch and the
// perturbed data batch at the same parameters, and assembles the 22 tensors
// of each block. Noise-input passes reuse the data labels.
std::vector<BlockStats> capture_stats(const ToyArch& arch,
                                      const NetworkParams<float>& params,
                                      const Batch<float>& data, Rng& rng,
                                      const CaptureOptions& options = {});

// --- synthetic classification task -----------------------------------------

struct TaskSpec {
  int num_classes = 4;
  int resolution = 8;
  int in_channels = 3;
  std::size_t train_size = 512;
  std::size_t test_size = 256;
  double noise = 0.8;  // pixel noise standard deviation
};

// Oriented sinusoidal gratings: the class fixes the orientation; frequency,
// phase and per-channel colour are random per image. Test labels cycle
// through the classes so the test split is exactly balanced.
struct SyntheticTask {
  TaskSpec spec;
  Batch<float> train;
  Batch<float> test;
};

SyntheticTask make_task(const TaskSpec& spec, std::uint64_t seed);

// A batch of `size` fresh images from the task distribution.
Batch<float> sample_task_batch(const TaskSpec& spec, std::size_t size, Rng& rng);

struct TrainOptions {
  int epochs = 3;
  double lr = 0.05;
  std::size_t batch_size = 16;
  double bn_momentum = 0.1;
};

struct TrainResult {
  double accuracy = 0.0;
  bool diverged = false;  // loss went non-finite; accuracy set to chance
};

// Plain minibatch SGD from `params`, then held-out accuracy with BatchNorm in
// inference mode.
TrainResult train_and_label(const ToyArch& arch, NetworkParams<float> params,
                            const SyntheticTask& task, const TrainOptions& options,
                            Rng& rng);

// Top-1 accuracy with BatchNorm running statistics.
double evaluate_accuracy(const ToyArch& arch, const NetworkParams<float>& params,
                         const Batch<float>& batch);

// --- design spaces ----------------------------------------------------------

struct SpaceSpec {
  std::string name;
  BlockPattern pattern = BlockPattern::kRCB;
  int min_depth = 2;
  int max_depth = 4;
  std::vector<int> channels = {4, 8, 16};
  std::vector<int> kernels = {1, 3, 5};
  int resolution = 8;
  int in_channels = 3;
  int num_classes = 4;
  // All blocks of a network share one (channels, kernel) choice.
  bool shared_block_config = false;
};

// Throws ConfigError when `spec` describes architectures outside the toy
// space.
void validate_space(const SpaceSpec& spec);

// Number of distinct architectures, saturating at UINT64_MAX.
std::uint64_t grid_size(const SpaceSpec& spec);

// Grid point `index` in [0, grid_size): depths ascending, then block
// choices as base-(channels x kernels) digits, block 0 least significant.
ToyArch decode_arch(const SpaceSpec& spec, std::uint64_t index);

// n distinct architectures drawn uniformly from the grid. Throws SpaceTooSmall
// when the grid holds fewer than n points.
std::vector<ToyArch> sample_space(const SpaceSpec& spec, std::size_t n, Rng& rng);

}  // namespace zcforge

#endif  // ZCFORGE_STATSGEN_HPP_

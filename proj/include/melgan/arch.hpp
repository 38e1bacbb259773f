/* Copyright 2026 The MelGAN-CPP Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "melgan/autograd.hpp"
#include "melgan/kv_config.hpp"
#include "melgan/ops.hpp"
#include "melgan/tensor.hpp"

namespace melgan {

enum class Norm { weight, spectral, none };
enum class ResidualShortcut { conv1x1, identity };
// normal: v ~ N(0, init_std), bias 0.
// fan_in: v and bias ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), fan_in = weight.channels * kernel.
enum class InitScheme { normal, fan_in };

std::string to_string(Norm n);
std::string to_string(ResidualShortcut s);
std::string to_string(InitScheme s);

/// Generator topology: input conv, then per upsampling stage a transposed
/// conv halving the width followed by a residual stack of dilated convs,
/// then an output conv and tanh.
struct GeneratorConfig {
  int mel_channels = 80;
  int base_width = 512;
  std::vector<int> upsample_ratios{8, 8, 2, 2};
  // Transposed-conv kernel per stage; empty means 2 * ratio.
  std::vector<int> upsample_kernels;
  int resblock_kernel = 3;
  std::vector<int> resblock_dilations{1, 3, 9};
  int io_kernel = 7;
  float leaky_slope = 0.2f;
  ResidualShortcut shortcut = ResidualShortcut::conv1x1;
  Norm norm = Norm::weight;
  InitScheme init = InitScheme::fan_in;
  float init_std = 0.02f;

  int stages() const { return static_cast<int>(upsample_ratios.size()); }
  int upsample_kernel(int stage) const;
  // Channel width after `stage` (0-based); base_width / 2^(stage + 1).
  int stage_width(int stage) const;
  // Total upsampling factor (product of ratios).
  std::int64_t hop() const;

  // Throws ConfigError when the generator cannot be built.
  void validate() const;
  KeyValues to_kv() const;
  static GeneratorConfig from_kv(const KeyValues& kv);
};

struct DiscLayerSpec {
  int out_channels;
  int kernel;
  int stride;
  int groups;
  bool operator==(const DiscLayerSpec&) const = default;
};

/// Multi-scale window discriminator: num_scales identical blocks, block k
/// seeing the waveform average-pooled k times.
struct DiscriminatorConfig {
  int num_scales = 3;
  int pool_kernel = 4;
  int pool_stride = 2;
  int pool_padding = 1;
  std::vector<DiscLayerSpec> layers{{16, 15, 1, 1},    {64, 41, 4, 4},
                                    {256, 41, 4, 16},  {1024, 41, 4, 64},
                                    {1024, 41, 4, 256}, {1024, 5, 1, 1},
                                    {1, 3, 1, 1}};
  float leaky_slope = 0.2f;
  Norm norm = Norm::weight;
  InitScheme init = InitScheme::fan_in;
  float init_std = 0.02f;

  // Product of layer strides.
  std::int64_t block_stride() const;
  // Shortest raw input accepted: every scale must cover one block stride.
  std::int64_t min_input_length() const;

  void validate() const;
  KeyValues to_kv() const;
  static DiscriminatorConfig from_kv(const KeyValues& kv);
};

/// One convolution with its (possibly normalized) weight parameters.
struct Layer {
  std::string name;
  ConvSpec spec;
  Norm norm = Norm::weight;
  Tensor v;     // direction (weight-norm) or raw weight
  Tensor g;     // [1, out_channels, 1] gain; undefined unless weight-norm
  Tensor bias;  // [1, out_channels, 1]

  Tensor weight(Graph& graph) const;
  std::vector<std::pair<std::string, Tensor>> named_tensors() const;
};

/// Ordered layer list; tensor names are "<layer>.v", "<layer>.g",
/// "<layer>.bias".
struct ModelParams {
  std::vector<Layer> layers;

  const Layer& layer(const std::string& name) const;
  std::vector<Tensor> tensors() const;
  std::vector<std::pair<std::string, Tensor>> named_tensors() const;
  void set_requires_grad(bool on);
};

std::int64_t count_parameters(const ModelParams& params);

struct Generator {
  GeneratorConfig config;
  ModelParams params;
};

struct Discriminator {
  DiscriminatorConfig config;
  ModelParams params;
};

/// Builds a generator initialized per `cfg.init`; with weight norm g = ||v||.
Generator build_generator(const GeneratorConfig& cfg, std::uint64_t seed = 0);
Discriminator build_discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed = 1);

/// mel [B, mel_channels, T] -> waveform [B, 1, hop * T].
Tensor generator_forward(Graph& graph, const Generator& gen, const Tensor& mel);

struct ScaleOutput {
  Tensor score;                  // final 1-channel map
  std::vector<Tensor> features;  // one per layer; the last is `score`
};

/// audio [B, 1, T] -> one output per scale, finest first.
std::vector<ScaleOutput> discriminator_forward(Graph& graph, const Discriminator& disc,
                                               const Tensor& audio);

/// 1 + sum_j (kernel - 1) * d_j.
std::int64_t receptive_field(int kernel, const std::vector<int>& dilations);

struct ArchViolation {
  std::string location;  // e.g. "upsample[1]" or "resblock"
  std::string rule;      // "kernel not multiple of stride" | "dilation not power of kernel"
  std::string detail;
};

struct ArchReport {
  std::vector<ArchViolation> violations;
  bool passed() const { return violations.empty(); }
};

/// Checks that every transposed conv's kernel is a multiple of its stride
/// and that the residual dilations are kernel^0, kernel^1, ...
ArchReport validate_checkerboard_free(const GeneratorConfig& cfg);

}  // namespace melgan

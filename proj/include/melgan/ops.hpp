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
#include <vector>

#include "melgan/autograd.hpp"
#include "melgan/kernels.hpp"
#include "melgan/tensor.hpp"

namespace melgan {

enum class PaddingMode { zeros, reflect };

/// Layer geometry for regular and transposed 1-D convolutions.
struct ConvSpec {
  int in_channels = 1;
  int out_channels = 1;
  int kernel_size = 1;
  int stride = 1;
  int dilation = 1;
  int groups = 1;
  bool transposed = false;
  int padding = 0;  // frames on each side
  PaddingMode padding_mode = PaddingMode::zeros;

  // Throws ConfigError naming the first broken invariant.
  void validate() const;
  // (out, in/groups, k) regular; (in, out/groups, k) transposed.
  Shape weight_shape() const;
  // Output time for input time `t`, or a value < 1 when the input is too
  // short.
  std::int64_t output_length(std::int64_t t) const;
  // Zero-padded correlation geometry of the forward pass (regular) or of
  // the correlation whose adjoint the layer computes (transposed).
  kernels::CorrGeometry geometry() const;
  // Channel axis of the weight that indexes output channels.
  int output_axis() const { return transposed ? 1 : 0; }
};

std::string to_string(PaddingMode mode);
PaddingMode padding_mode_from_string(const std::string& s);

// Differentiable ops. `bias` may be an undefined Tensor; otherwise it is
// shaped [1, out_channels, 1].
Tensor conv1d(Graph& g, const Tensor& x, const Tensor& weight, const Tensor& bias,
              const ConvSpec& spec);
Tensor conv_transpose1d(Graph& g, const Tensor& x, const Tensor& weight,
                        const Tensor& bias, const ConvSpec& spec);

/// Windowed mean. With padding, padded positions are excluded from the
/// divisor.
Tensor avg_pool1d(Graph& g, const Tensor& x, int kernel, int stride, int padding = 0);

Tensor leaky_relu(Graph& g, const Tensor& x, float slope);
Tensor relu(Graph& g, const Tensor& x);
Tensor tanh(Graph& g, const Tensor& x);
// scale * x + shift, elementwise.
Tensor affine(Graph& g, const Tensor& x, float scale, float shift);
Tensor add(Graph& g, const Tensor& a, const Tensor& b);

// Scalar reductions.
// Items [begin, begin + count) of the batch axis.
Tensor slice_batch(Graph& g, const Tensor& x, std::int64_t begin, std::int64_t count);
// Stacks tensors of equal channels and time along the batch axis.
Tensor concat_batch(Graph& g, const std::vector<Tensor>& parts);

Tensor sum(Graph& g, const Tensor& x);
Tensor mean(Graph& g, const Tensor& x);
Tensor l1_mean(Graph& g, const Tensor& a, const Tensor& b);

/// w = gain * v / ||v||, the norm taken per output channel over all other
/// axes. `channel_axis` is 0 for [out, in/groups, k] weights and 1 for
/// transposed [in, out/groups, k] weights. `gain` is [1, channels, 1].
Tensor weight_norm(Graph& g, const Tensor& v, const Tensor& gain, int channel_axis);

/// w / sigma_max(w) with sigma estimated by power iteration over the
/// [dim0, dim1 * dim2] matricization. sigma is treated as a constant
/// in the backward pass.
Tensor spectral_normalize(Graph& g, const Tensor& w, int iterations = 8);

}  // namespace melgan

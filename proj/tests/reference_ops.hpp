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

// Brute-force double-precision versions of the engine's ops, written as
// plain loops straight from the definitions. Tests compare the optimized
// float32 paths against these.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "melgan/ops.hpp"
#include "melgan/tensor.hpp"

namespace melgan::ref {

struct Array {
  Shape shape;
  std::vector<double> data;

  double& at(std::int64_t b, std::int64_t c, std::int64_t t) {
    return data[static_cast<std::size_t>((b * shape.channels + c) * shape.time + t)];
  }
  double at(std::int64_t b, std::int64_t c, std::int64_t t) const {
    return data[static_cast<std::size_t>((b * shape.channels + c) * shape.time + t)];
  }
};

inline Array zeros(Shape s) { return Array{s, std::vector<double>(static_cast<std::size_t>(s.numel()), 0.0)}; }

inline Array of(const Tensor& t) {
  Array a{t.shape(), {}};
  a.data.assign(t.data().begin(), t.data().end());
  return a;
}

// Mirror index without repeating the edge sample.
inline std::int64_t reflect_index(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  const std::int64_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

inline Array conv1d(const Array& x, const Array& w, const Array* bias, const ConvSpec& s) {
  const std::int64_t tin = x.shape.time;
  const std::int64_t span = std::int64_t{s.kernel_size - 1} * s.dilation + 1;
  const std::int64_t tout = (tin + 2 * s.padding - span) / s.stride + 1;
  const int cin_g = s.in_channels / s.groups;
  const int cout_g = s.out_channels / s.groups;
  Array y = zeros({x.shape.batch, s.out_channels, tout});
  for (std::int64_t n = 0; n < x.shape.batch; ++n)
    for (int o = 0; o < s.out_channels; ++o) {
      const int grp = o / cout_g;
      for (std::int64_t t = 0; t < tout; ++t) {
        double acc = bias ? bias->data[static_cast<std::size_t>(o)] : 0.0;
        for (int ci = 0; ci < cin_g; ++ci)
          for (int k = 0; k < s.kernel_size; ++k) {
            std::int64_t i = t * s.stride + std::int64_t{k} * s.dilation - s.padding;
            if (i < 0 || i >= tin) {
              if (s.padding_mode != PaddingMode::reflect) continue;
              i = reflect_index(i, tin);
            }
            acc += w.at(o, ci, k) * x.at(n, grp * cin_g + ci, i);
          }
        y.at(n, o, t) = acc;
      }
    }
  return y;
}

// Scatter form: every input sample spreads a kernel-shaped footprint.
inline Array conv_transpose1d(const Array& x, const Array& w, const Array* bias,
                              const ConvSpec& s) {
  const std::int64_t tin = x.shape.time;
  const std::int64_t tout = (tin - 1) * s.stride - 2 * s.padding + s.kernel_size;
  const int cin_g = s.in_channels / s.groups;
  const int cout_g = s.out_channels / s.groups;
  Array y = zeros({x.shape.batch, s.out_channels, tout});
  for (std::int64_t n = 0; n < x.shape.batch; ++n)
    for (int c = 0; c < s.in_channels; ++c) {
      const int grp = c / cin_g;
      for (int oo = 0; oo < cout_g; ++oo)
        for (std::int64_t t = 0; t < tin; ++t)
          for (int k = 0; k < s.kernel_size; ++k) {
            const std::int64_t j = t * s.stride + k - s.padding;
            if (j < 0 || j >= tout) continue;
            y.at(n, grp * cout_g + oo, j) += w.at(c, oo, k) * x.at(n, c, t);
          }
    }
  if (bias)
    for (std::int64_t n = 0; n < x.shape.batch; ++n)
      for (int o = 0; o < s.out_channels; ++o)
        for (std::int64_t t = 0; t < tout; ++t) y.at(n, o, t) += bias->data[static_cast<std::size_t>(o)];
  return y;
}

// Zero-padded windows; padded positions do not count toward the mean.
inline Array avg_pool1d(const Array& x, int kernel, int stride, int padding) {
  const std::int64_t tin = x.shape.time;
  const std::int64_t tout = (tin + 2 * padding - kernel) / stride + 1;
  Array y = zeros({x.shape.batch, x.shape.channels, tout});
  for (std::int64_t n = 0; n < x.shape.batch; ++n)
    for (std::int64_t c = 0; c < x.shape.channels; ++c)
      for (std::int64_t t = 0; t < tout; ++t) {
        double acc = 0.0;
        int count = 0;
        for (int k = 0; k < kernel; ++k) {
          const std::int64_t i = t * stride + k - padding;
          if (i < 0 || i >= tin) continue;
          acc += x.at(n, c, i);
          ++count;
        }
        y.at(n, c, t) = acc / count;
      }
  return y;
}

template <typename F>
Array map(const Array& x, F f) {
  Array y = x;
  for (auto& v : y.data) v = f(v);
  return y;
}

inline double mean(const Array& x) {
  double s = 0.0;
  for (double v : x.data) s += v;
  return s / static_cast<double>(x.data.size());
}

inline double l1_mean(const Array& a, const Array& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) s += std::fabs(a.data[i] - b.data[i]);
  return s / static_cast<double>(a.data.size());
}

// w = g * v / ||v|| per output channel; axis 0: [out, a, b], axis 1: [a, out, b].
inline Array weight_norm(const Array& v, const Array& g, int axis) {
  Array w = v;
  const std::int64_t outs = axis == 0 ? v.shape.batch : v.shape.channels;
  for (std::int64_t o = 0; o < outs; ++o) {
    double ss = 0.0;
    for (std::int64_t a = 0; a < v.shape.batch; ++a)
      for (std::int64_t c = 0; c < v.shape.channels; ++c)
        for (std::int64_t t = 0; t < v.shape.time; ++t)
          if ((axis == 0 ? a : c) == o) ss += v.at(a, c, t) * v.at(a, c, t);
    const double scale = g.data[static_cast<std::size_t>(o)] / std::sqrt(ss);
    for (std::int64_t a = 0; a < v.shape.batch; ++a)
      for (std::int64_t c = 0; c < v.shape.channels; ++c)
        for (std::int64_t t = 0; t < v.shape.time; ++t)
          if ((axis == 0 ? a : c) == o) w.at(a, c, t) = scale * v.at(a, c, t);
  }
  return w;
}

inline double max_abs_diff(const Tensor& got, const Array& want) {
  if (!(got.shape() == want.shape)) throw std::runtime_error("shape mismatch in comparison");
  double m = 0.0;
  auto d = got.data();
  for (std::size_t i = 0; i < want.data.size(); ++i)
    m = std::max(m, std::fabs(static_cast<double>(d[i]) - want.data[i]));
  return m;
}

inline Tensor random_tensor(Shape s, std::mt19937_64& rng, float lo = -1.0f, float hi = 1.0f,
                            bool requires_grad = false) {
  std::uniform_real_distribution<float> u(lo, hi);
  std::vector<float> v(static_cast<std::size_t>(s.numel()));
  for (auto& x : v) x = u(rng);
  return Tensor::from(s, std::move(v), requires_grad);
}

// Values bounded away from zero so kinked ops are differentiable at
// every sample and within +-h of it.
inline Tensor random_off_zero(Shape s, std::mt19937_64& rng, float margin = 0.05f,
                              bool requires_grad = false) {
  std::uniform_real_distribution<float> u(margin, 1.0f);
  std::bernoulli_distribution sign(0.5);
  std::vector<float> v(static_cast<std::size_t>(s.numel()));
  for (auto& x : v) x = sign(rng) ? u(rng) : -u(rng);
  return Tensor::from(s, std::move(v), requires_grad);
}

}  // namespace melgan::ref

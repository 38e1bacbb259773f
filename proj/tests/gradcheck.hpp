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

// Central finite differences evaluated on the double-precision reference
// forward, compared with the engine's reverse-mode gradients.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "melgan/autograd.hpp"
#include "melgan/tensor.hpp"
#include "reference_ops.hpp"

namespace melgan::testing {

// Scalar sum_i r_i * y_i, so every output element gets its own weight.
inline Tensor weighted_sum(Graph& g, const Tensor& y, const std::vector<float>& r) {
  double acc = 0.0;
  auto d = y.data();
  for (std::size_t i = 0; i < d.size(); ++i) acc += static_cast<double>(r[i]) * d[i];
  Tensor out = Tensor::scalar(static_cast<float>(acc));
  if (g.needs_record({&y})) {
    g.record(out, {y}, [y = Tensor(y), r](std::span<const float> gy) mutable {
      auto gx = y.grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[0] * r[i];
    });
  }
  return out;
}

using EngineFn = std::function<Tensor(Graph&, const std::vector<Tensor>&)>;
using ReferenceFn = std::function<ref::Array(const std::vector<ref::Array>&)>;

struct GradReport {
  double rel_error = 0.0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||)
  int checked = 0;
};

// Inputs flagged requires_grad are checked; up to `max_samples` entries of
// each, chosen at random when the input is larger.
inline GradReport check_gradients(const std::vector<Tensor>& inputs, const EngineFn& engine,
                                  const ReferenceFn& reference, std::mt19937_64& rng,
                                  double h = 1e-3, int max_samples = 48) {
  Graph probe(false);
  const Tensor y0 = engine(probe, inputs);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> r(static_cast<std::size_t>(y0.numel()));
  for (auto& v : r) v = u(rng);

  for (const auto& t : inputs)
    if (t.requires_grad()) const_cast<Tensor&>(t).clear_grad();
  Graph g;
  Tensor root = weighted_sum(g, engine(g, inputs), r);
  backward(g, root);

  std::vector<ref::Array> base;
  for (const auto& t : inputs) base.push_back(ref::of(t));
  auto loss = [&](const std::vector<ref::Array>& xs) {
    const ref::Array y = reference(xs);
    double s = 0.0;
    for (std::size_t i = 0; i < y.data.size(); ++i) s += r[i] * y.data[i];
    return s;
  };

  double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
  GradReport rep;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (!inputs[k].requires_grad()) continue;
    const auto grad = inputs[k].grad();
    const std::size_t n = base[k].data.size();
    std::vector<std::size_t> idx;
    if (static_cast<int>(n) <= max_samples) {
      for (std::size_t j = 0; j < n; ++j) idx.push_back(j);
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (int s = 0; s < max_samples; ++s) idx.push_back(pick(rng));
    }
    for (std::size_t j : idx) {
      auto xs = base;
      const double x0 = xs[k].data[j];
      xs[k].data[j] = x0 + h;
      const double lp = loss(xs);
      xs[k].data[j] = x0 - h;
      const double lm = loss(xs);
      const double num = (lp - lm) / (2.0 * h);
      const double ana = grad[j];
      diff2 += (ana - num) * (ana - num);
      a2 += ana * ana;
      n2 += num * num;
      ++rep.checked;
    }
  }
  const double scale = std::sqrt(std::max({a2, n2, 1e-24}));
  rep.rel_error = std::sqrt(diff2) / scale;
  return rep;
}

}  // namespace melgan::testing

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

#include "melgan/optim.hpp"

#include <cmath>

#include "melgan/errors.hpp"

namespace melgan {

AdamState AdamState::for_params(std::span<const Tensor> params) {
  AdamState s;
  for (const Tensor& p : params) {
    s.m.emplace_back(static_cast<std::size_t>(p.numel()), 0.0f);
    s.v.emplace_back(static_cast<std::size_t>(p.numel()), 0.0f);
  }
  return s;
}

void adam_step(std::span<Tensor> params, AdamState& state, const AdamConfig& cfg) {
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw Error("adam_step: state holds " + std::to_string(state.m.size()) +
                " moment buffers for " + std::to_string(params.size()) + " parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad())
      throw Error("adam_step: parameter " + std::to_string(i) + " has no gradient");
    if (state.m[i].size() != static_cast<std::size_t>(params[i].numel()))
      throw ShapeError("time", "adam_step: moment buffer " + std::to_string(i) +
                                   " does not match its parameter");
  }
  const std::int64_t t = state.step + 1;
  const double bc1 = 1.0 - std::pow(double{cfg.beta1}, double(t));
  const double bc2 = 1.0 - std::pow(double{cfg.beta2}, double(t));
  const float step_size = static_cast<float>(cfg.lr / bc1);
  const float bc2_sqrt = static_cast<float>(std::sqrt(bc2));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].data();
    auto g = params[i].grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = cfg.beta1 * m[j] + (1.0f - cfg.beta1) * g[j];
      v[j] = cfg.beta2 * v[j] + (1.0f - cfg.beta2) * g[j] * g[j];
      const float denom = std::sqrt(v[j]) / bc2_sqrt + cfg.eps;
      p[j] -= step_size * m[j] / denom;
    }
  }
  state.step = t;
}

void zero_grads(std::span<Tensor> params) {
  for (Tensor& p : params) {
    p.ensure_grad();
    p.zero_grad();
  }
}

}  // namespace melgan

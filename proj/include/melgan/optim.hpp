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
#include <span>
#include <vector>

#include "melgan/tensor.hpp"

namespace melgan {

struct AdamConfig {
  float lr = 1e-4f;
  float beta1 = 0.5f;
  float beta2 = 0.9f;
  float eps = 1e-8f;
};

/// First and second moments, one buffer per parameter, plus the number of
/// updates applied so far.
struct AdamState {
  std::int64_t step = 0;
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;

  // Zero moments sized for `params`.
  static AdamState for_params(std::span<const Tensor> params);
};

/// Bias-corrected Adam update applied in place. Every parameter must hold a
/// gradient buffer; throws Error otherwise.
void adam_step(std::span<Tensor> params, AdamState& state, const AdamConfig& cfg);

void zero_grads(std::span<Tensor> params);

}  // namespace melgan

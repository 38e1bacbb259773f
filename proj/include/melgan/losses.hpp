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

#include <vector>

#include "melgan/arch.hpp"
#include "melgan/autograd.hpp"
#include "melgan/tensor.hpp"

namespace melgan {

/// sum_k mean(relu(1 - real_k)) + mean(relu(1 + fake_k)).
Tensor discriminator_loss(Graph& graph, const std::vector<Tensor>& real_scores,
                          const std::vector<Tensor>& fake_scores);

/// sum_k mean(-fake_k).
Tensor generator_adversarial_loss(Graph& graph, const std::vector<Tensor>& fake_scores);

/// sum_k sum_i mean(|real_ki - fake_ki|). Real features should be detached.
Tensor feature_matching_loss(Graph& graph,
                             const std::vector<std::vector<Tensor>>& real_features,
                             const std::vector<std::vector<Tensor>>& fake_features);

/// adv + lambda * fm.
Tensor generator_total_loss(Graph& graph, const Tensor& adv, const Tensor& fm, float lambda);

std::vector<Tensor> scores_of(const std::vector<ScaleOutput>& outputs);
std::vector<std::vector<Tensor>> features_of(const std::vector<ScaleOutput>& outputs,
                                             bool detach = false);

}  // namespace melgan

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

#include "melgan/losses.hpp"

#include <string>

#include "melgan/errors.hpp"
#include "melgan/ops.hpp"

namespace melgan {

namespace {

Tensor sum_all(Graph& graph, const std::vector<Tensor>& terms) {
  Tensor total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) total = add(graph, total, terms[i]);
  return total;
}

void check_scalar(const Tensor& t, const char* what) {
  if (!t.defined() || !t.is_scalar())
    throw ShapeError("time", std::string(what) + " must be a scalar tensor");
}

}  // namespace

Tensor discriminator_loss(Graph& graph, const std::vector<Tensor>& real_scores,
                          const std::vector<Tensor>& fake_scores) {
  if (real_scores.size() != fake_scores.size())
    throw ShapeError("scale", "discriminator_loss: " + std::to_string(real_scores.size()) +
                                  " real scales vs " + std::to_string(fake_scores.size()) +
                                  " fake scales");
  if (real_scores.empty()) throw ShapeError("scale", "discriminator_loss: no scales");
  std::vector<Tensor> terms;
  for (std::size_t k = 0; k < real_scores.size(); ++k) {
    terms.push_back(mean(graph, relu(graph, affine(graph, real_scores[k], -1.0f, 1.0f))));
    terms.push_back(mean(graph, relu(graph, affine(graph, fake_scores[k], 1.0f, 1.0f))));
  }
  return sum_all(graph, terms);
}

Tensor generator_adversarial_loss(Graph& graph, const std::vector<Tensor>& fake_scores) {
  if (fake_scores.empty()) throw ShapeError("scale", "generator_adversarial_loss: no scales");
  std::vector<Tensor> terms;
  for (const auto& s : fake_scores) terms.push_back(mean(graph, affine(graph, s, -1.0f, 0.0f)));
  return sum_all(graph, terms);
}

Tensor feature_matching_loss(Graph& graph,
                             const std::vector<std::vector<Tensor>>& real_features,
                             const std::vector<std::vector<Tensor>>& fake_features) {
  if (real_features.size() != fake_features.size())
    throw ShapeError("scale", "feature_matching_loss: " +
                                  std::to_string(real_features.size()) + " real scales vs " +
                                  std::to_string(fake_features.size()) + " fake scales");
  std::vector<Tensor> terms;
  for (std::size_t k = 0; k < real_features.size(); ++k) {
    if (real_features[k].size() != fake_features[k].size())
      throw ShapeError("layer", "feature_matching_loss: scale " + std::to_string(k) + " has " +
                                    std::to_string(real_features[k].size()) +
                                    " real layers vs " +
                                    std::to_string(fake_features[k].size()) + " fake layers");
    for (std::size_t i = 0; i < real_features[k].size(); ++i)
      terms.push_back(l1_mean(graph, real_features[k][i], fake_features[k][i]));
  }
  if (terms.empty()) return Tensor::scalar(0.0f);
  return sum_all(graph, terms);
}

Tensor generator_total_loss(Graph& graph, const Tensor& adv, const Tensor& fm, float lambda) {
  check_scalar(adv, "generator_total_loss: adv");
  check_scalar(fm, "generator_total_loss: fm");
  return add(graph, adv, affine(graph, fm, lambda, 0.0f));
}

std::vector<Tensor> scores_of(const std::vector<ScaleOutput>& outputs) {
  std::vector<Tensor> out;
  for (const auto& o : outputs) out.push_back(o.score);
  return out;
}

std::vector<std::vector<Tensor>> features_of(const std::vector<ScaleOutput>& outputs,
                                             bool detach) {
  std::vector<std::vector<Tensor>> out;
  for (const auto& o : outputs) {
    std::vector<Tensor> f;
    for (const auto& t : o.features) f.push_back(detach ? t.detach() : t);
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace melgan

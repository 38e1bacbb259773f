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

// End-to-end gradient check of the generator objective: a small generator
// and a single-scale discriminator, mirrored in double precision so the
// finite differences are taken on an exact forward.

#include <cmath>
#include <random>
#include <vector>

#include "gradcheck.hpp"
#include "melgan/arch.hpp"
#include "melgan/losses.hpp"
#include "reference_ops.hpp"

namespace melgan::testing {

// Double-precision mirror of generator_forward and discriminator_forward
// driven by the same layer list.
struct ReferenceModel {
  const Generator& gen;
  const Discriminator& disc;

  static std::size_t tensors_per_layer(const Layer& l) {
    return 1 + (l.g.defined() ? 1 : 0) + (l.bias.defined() ? 1 : 0);
  }

  ref::Array apply(const Layer& l, const ref::Array* p, const ref::Array& x) const {
    const ref::Array w = l.g.defined() ? ref::weight_norm(p[0], p[1], l.spec.output_axis()) : p[0];
    const ref::Array* bias = l.bias.defined() ? &p[l.g.defined() ? 2 : 1] : nullptr;
    return l.spec.transposed ? ref::conv_transpose1d(x, w, bias, l.spec)
                             : ref::conv1d(x, w, bias, l.spec);
  }

  static ref::Array lrelu(const ref::Array& x, double s) {
    return ref::map(x, [s](double v) { return v > 0 ? v : s * v; });
  }
  static ref::Array add(ref::Array a, const ref::Array& b) {
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
    return a;
  }

  ref::Array generate(const std::vector<ref::Array>& params, const ref::Array& mel) const {
    const auto& cfg = gen.config;
    std::size_t layer = 0, offset = 0;
    auto run = [&](const ref::Array& x) {
      const Layer& l = gen.params.layers.at(layer++);
      const ref::Array y = apply(l, &params[offset], x);
      offset += tensors_per_layer(l);
      return y;
    };
    const double s = cfg.leaky_slope;
    ref::Array x = run(mel);
    for (int i = 0; i < cfg.stages(); ++i) {
      x = run(lrelu(x, s));
      for (std::size_t j = 0; j < cfg.resblock_dilations.size(); ++j) {
        ref::Array h = run(lrelu(x, s));
        h = run(lrelu(h, s));
        const ref::Array skip = cfg.shortcut == ResidualShortcut::conv1x1 ? run(x) : x;
        x = add(skip, h);
      }
    }
    x = run(lrelu(x, s));
    return ref::map(x, [](double v) { return std::tanh(v); });
  }

  std::vector<std::vector<ref::Array>> features(const ref::Array& audio) const {
    const auto& cfg = disc.config;
    std::vector<std::vector<ref::Array>> out;
    ref::Array x = audio;
    const std::size_t per_block = cfg.layers.size();
    for (int k = 0; k < cfg.num_scales; ++k) {
      if (k > 0) x = ref::avg_pool1d(x, cfg.pool_kernel, cfg.pool_stride, cfg.pool_padding);
      out.emplace_back();
      ref::Array h = x;
      for (std::size_t i = 0; i < per_block; ++i) {
        const Layer& l = disc.params.layers[k * per_block + i];
        std::vector<ref::Array> p;
        for (const auto& [name, t] : l.named_tensors()) p.push_back(ref::of(t));
        h = apply(l, p.data(), h);
        if (i + 1 < per_block) h = lrelu(h, cfg.leaky_slope);
        out.back().push_back(h);
      }
    }
    return out;
  }
};

struct EndToEndReport {
  GradReport grad;
  double forward_gap = 0.0;  // |engine loss - reference loss|
};

// Differentiates adv + lambda * fm with respect to every generator tensor.
inline EndToEndReport tiny_total_loss_gradcheck(std::uint64_t seed) {
  GeneratorConfig gc;
  gc.mel_channels = 2;
  gc.base_width = 4;
  gc.upsample_ratios = {2};
  gc.resblock_dilations = {1};
  gc.io_kernel = 3;
  gc.init = InitScheme::normal;
  gc.init_std = 0.5f;
  DiscriminatorConfig dc;
  dc.num_scales = 1;
  dc.layers = {{3, 5, 1, 1}, {1, 3, 1, 1}};
  dc.init = InitScheme::normal;
  dc.init_std = 0.5f;
  Generator gen = build_generator(gc, seed);
  const Discriminator disc = build_discriminator(dc, seed + 1);

  std::mt19937_64 rng(seed + 2);
  std::vector<Tensor> inputs;
  for (auto& l : gen.params.layers) {
    l.bias = ref::random_tensor(l.bias.shape(), rng, -0.2f, 0.2f);
    for (const auto& [name, t] : l.named_tensors()) {
      Tensor p = t;
      p.set_requires_grad(true);
      inputs.push_back(p);
    }
  }
  const Tensor mel = ref::random_tensor({1, 2, 5}, rng);
  const Tensor real = ref::random_tensor({1, 1, 10}, rng, -0.5f, 0.5f);
  constexpr float kLambda = 10.0f;

  auto engine = [&](Graph& g, const std::vector<Tensor>& xs) {
    Generator local = gen;
    std::size_t k = 0;
    for (auto& l : local.params.layers) {
      l.v = xs[k++];
      if (l.g.defined()) l.g = xs[k++];
      if (l.bias.defined()) l.bias = xs[k++];
    }
    const Tensor fake = generator_forward(g, local, mel);
    Graph frozen(false);
    const auto real_out = discriminator_forward(frozen, disc, real);
    const auto fake_out = discriminator_forward(g, disc, fake);
    const Tensor adv = generator_adversarial_loss(g, scores_of(fake_out));
    const Tensor fm = feature_matching_loss(g, features_of(real_out, true), features_of(fake_out));
    return generator_total_loss(g, adv, fm, kLambda);
  };
  const ReferenceModel model{gen, disc};
  const auto real_features = model.features(ref::of(real));
  auto reference = [&](const std::vector<ref::Array>& xs) {
    const auto fake_features = model.features(model.generate(xs, ref::of(mel)));
    double adv = 0.0, fm = 0.0;
    for (std::size_t k = 0; k < fake_features.size(); ++k) {
      adv -= ref::mean(fake_features[k].back());
      for (std::size_t i = 0; i < fake_features[k].size(); ++i)
        fm += ref::l1_mean(real_features[k][i], fake_features[k][i]);
    }
    ref::Array out = ref::zeros({1, 1, 1});
    out.data[0] = adv + kLambda * fm;
    return out;
  };

  EndToEndReport rep;
  Graph probe(false);
  std::vector<ref::Array> base;
  for (const auto& t : inputs) base.push_back(ref::of(t));
  rep.forward_gap = std::fabs(engine(probe, inputs).item() - reference(base).data[0]);
  rep.grad = check_gradients(inputs, engine, reference, rng, 1e-4, 64);
  return rep;
}

}  // namespace melgan::testing

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

#include <gtest/gtest.h>

#include <random>

#include "gradcheck.hpp"
#include "tiny_gradcheck.hpp"
#include "melgan/arch.hpp"
#include "melgan/errors.hpp"
#include "melgan/losses.hpp"
#include "melgan/ops.hpp"
#include "reference_ops.hpp"

namespace melgan {
namespace {

Tensor filled(std::int64_t t, float v) { return Tensor::full({1, 1, t}, v); }

std::vector<Tensor> per_scale(float v, int scales = 3) {
  std::vector<Tensor> out;
  for (int k = 0; k < scales; ++k) out.push_back(filled(4 << k, v));
  return out;
}

TEST(DiscriminatorLoss, HingeValues) {
  Graph g(false);
  EXPECT_FLOAT_EQ(discriminator_loss(g, per_scale(0.0f), per_scale(0.0f)).item(), 6.0f);
  EXPECT_FLOAT_EQ(discriminator_loss(g, per_scale(2.0f), per_scale(-2.0f)).item(), 0.0f);
  // Fake term zero, real term 1 - 0.5 per scale.
  EXPECT_FLOAT_EQ(discriminator_loss(g, per_scale(0.5f, 1), per_scale(-1.0f, 1)).item(), 0.5f);
  EXPECT_FLOAT_EQ(discriminator_loss(g, per_scale(1.0f), per_scale(-1.0f)).item(), 0.0f);
  EXPECT_THROW(discriminator_loss(g, per_scale(0.0f, 2), per_scale(0.0f, 3)), ShapeError);
}

TEST(DiscriminatorLoss, NonNegativeAndZeroOnlyPastMargins) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(-3.0f, 3.0f);
  Graph g(false);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Tensor> real, fake;
    bool past_margins = true;
    for (int k = 0; k < 3; ++k) {
      std::vector<float> r(5), f(5);
      for (auto& v : r) past_margins &= (v = u(rng)) >= 1.0f;
      for (auto& v : f) past_margins &= (v = u(rng)) <= -1.0f;
      real.push_back(Tensor::from({1, 1, 5}, r));
      fake.push_back(Tensor::from({1, 1, 5}, f));
    }
    const float loss = discriminator_loss(g, real, fake).item();
    EXPECT_GE(loss, 0.0f);
    EXPECT_EQ(loss == 0.0f, past_margins);
  }
}

TEST(GeneratorAdversarialLoss, NegatedMeanSum) {
  Graph g(false);
  EXPECT_FLOAT_EQ(generator_adversarial_loss(g, per_scale(1.0f)).item(), -3.0f);
  EXPECT_FLOAT_EQ(generator_adversarial_loss(g, per_scale(0.0f)).item(), 0.0f);
  float prev = 1e9f;
  for (float s = -2.0f; s <= 2.0f; s += 0.5f) {
    const float loss = generator_adversarial_loss(g, per_scale(s)).item();
    EXPECT_LT(loss, prev);
    prev = loss;
  }
}

TEST(FeatureMatchingLoss, Values) {
  Graph g(false);
  const std::vector<std::vector<Tensor>> real{{Tensor::from({1, 1, 2}, {1.0f, 2.0f})}};
  const std::vector<std::vector<Tensor>> zero{{Tensor::zeros({1, 1, 2})}};
  EXPECT_FLOAT_EQ(feature_matching_loss(g, real, zero).item(), 1.5f);
  EXPECT_FLOAT_EQ(feature_matching_loss(g, real, real).item(), 0.0f);

  // Sums over layers and scales.
  std::mt19937_64 rng(2);
  std::vector<std::vector<Tensor>> a, b;
  double total = 0.0;
  for (int k = 0; k < 3; ++k) {
    a.emplace_back();
    b.emplace_back();
    for (int i = 0; i < 4; ++i) {
      a[k].push_back(ref::random_tensor({2, 3, 7 - i}, rng));
      b[k].push_back(ref::random_tensor({2, 3, 7 - i}, rng));
      total += ref::l1_mean(ref::of(a[k][i]), ref::of(b[k][i]));
    }
  }
  EXPECT_NEAR(feature_matching_loss(g, a, b).item(), total, 1e-5);
  double per_scale_sum = 0.0;
  for (int k = 0; k < 3; ++k) per_scale_sum += feature_matching_loss(g, {a[k]}, {b[k]}).item();
  EXPECT_NEAR(feature_matching_loss(g, a, b).item(), per_scale_sum, 1e-5);

  auto short_b = b;
  short_b[1].pop_back();
  EXPECT_THROW(feature_matching_loss(g, a, short_b), ShapeError);
  EXPECT_THROW(feature_matching_loss(g, a, {b[0]}), ShapeError);
}

TEST(FeatureMatchingLoss, GradientFlowsOnlyThroughFake) {
  std::mt19937_64 rng(3);
  Tensor real = ref::random_tensor({1, 2, 5}, rng, -1, 1, true);
  Tensor fake = ref::random_tensor({1, 2, 5}, rng, -1, 1, true);
  Graph g;
  Tensor loss = feature_matching_loss(g, {{real.detach()}}, {{fake}});
  backward(g, loss);
  EXPECT_FALSE(real.has_grad());
  ASSERT_TRUE(fake.has_grad());
  for (std::size_t i = 0; i < 10; ++i) {
    const float sign = fake.data()[i] > real.data()[i] ? 1.0f : -1.0f;
    EXPECT_FLOAT_EQ(fake.grad()[i], sign / 10.0f);
  }
}

TEST(GeneratorTotalLoss, Composition) {
  Graph g(false);
  auto total = [&](float adv, float fm, float lambda) {
    return generator_total_loss(g, Tensor::scalar(adv), Tensor::scalar(fm), lambda).item();
  };
  EXPECT_FLOAT_EQ(total(-3.0f, 0.5f, 10.0f), 2.0f);
  EXPECT_FLOAT_EQ(total(-1.25f, 0.0f, 10.0f), -1.25f);
  EXPECT_FLOAT_EQ(total(-1.25f, 7.0f, 0.0f), -1.25f);
  // Adversarial term and feature matching from score maps.
  const float adv = generator_adversarial_loss(g, per_scale(1.0f)).item();
  EXPECT_FLOAT_EQ(total(adv, 0.5f, 10.0f), 2.0f);
}

TEST(GeneratorTotalLoss, MatchesFiniteDifferencesOnTinyModel) {
  for (std::uint64_t seed : {11u, 21u}) {
    const auto rep = testing::tiny_total_loss_gradcheck(seed);
    EXPECT_LT(rep.forward_gap, 1e-4);
    EXPECT_GT(rep.grad.checked, 100);
    EXPECT_LT(rep.grad.rel_error, 1e-3) << "seed " << seed;
  }
}

}  // namespace
}  // namespace melgan

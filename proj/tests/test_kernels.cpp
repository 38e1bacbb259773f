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
#include <vector>

#include "melgan/kernels.hpp"

namespace melgan::kernels {
namespace {

std::vector<float> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// C = A B in double with A (m x k), B (k x n) in row-major.
std::vector<double> naive(int m, int n, int k, const std::vector<float>& a, bool a_t,
                          const std::vector<float>& b) {
  std::vector<double> c(static_cast<std::size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      const double av = a_t ? a[static_cast<std::size_t>(p) * m + i] : a[static_cast<std::size_t>(i) * k + p];
      for (int j = 0; j < n; ++j) c[static_cast<std::size_t>(i) * n + j] += av * b[static_cast<std::size_t>(p) * n + j];
    }
  return c;
}

struct GemmCase {
  int m, n, k;
  bool a_t, by_column, accumulate;
};

// Shapes chosen to hit each dispatch route: small-M in-place B, packed
// blocks with edges, the transposed narrow product and K > one panel.
TEST(Gemm, MatchesNaiveAcrossDispatchPaths) {
  std::mt19937_64 rng(1);
  const std::vector<GemmCase> cases = {
      {1, 1, 1, false, false, false},   {7, 300, 13, false, false, false},
      {48, 512, 41, false, false, true}, {96, 1030, 300, false, false, false},
      {100, 70, 33, true, false, false}, {640, 16, 64, true, false, true},
      {5120, 32, 1024, true, false, false}, {33, 47, 515, false, true, false},
      {16, 164, 128, false, true, true}, {13, 3, 2, true, true, false},
  };
  for (const auto& tc : cases) {
    const auto a = random_vec(static_cast<std::size_t>(tc.m) * tc.k, rng);
    const auto b = random_vec(static_cast<std::size_t>(tc.k) * tc.n, rng);
    std::vector<float> bt(b.size());
    for (int p = 0; p < tc.k; ++p)
      for (int j = 0; j < tc.n; ++j) bt[static_cast<std::size_t>(j) * tc.k + p] = b[static_cast<std::size_t>(p) * tc.n + j];
    std::vector<const float*> lines;
    if (tc.by_column) {
      for (int j = 0; j < tc.n; ++j) lines.push_back(bt.data() + static_cast<std::size_t>(j) * tc.k);
    } else {
      for (int p = 0; p < tc.k; ++p) lines.push_back(b.data() + static_cast<std::size_t>(p) * tc.n);
    }
    const std::ptrdiff_t ldc = tc.n + 3;
    std::vector<float> c(static_cast<std::size_t>(tc.m) * ldc, 0.5f);
    gemm(tc.m, tc.n, tc.k, MatA{a.data(), tc.a_t ? tc.m : tc.k, tc.a_t},
         MatB{lines.data(), tc.by_column}, c.data(), ldc, tc.accumulate);
    const auto want = naive(tc.m, tc.n, tc.k, a, tc.a_t, b);
    double worst = 0.0;
    for (int i = 0; i < tc.m; ++i) {
      for (int j = 0; j < tc.n; ++j) {
        const double w = want[static_cast<std::size_t>(i) * tc.n + j] + (tc.accumulate ? 0.5 : 0.0);
        worst = std::max(worst, std::fabs(c[static_cast<std::size_t>(i) * ldc + j] - w));
      }
      // Padding columns past n are untouched.
      for (std::ptrdiff_t j = tc.n; j < ldc; ++j) ASSERT_EQ(c[static_cast<std::size_t>(i) * ldc + j], 0.5f);
    }
    EXPECT_LT(worst, 1e-4 * std::sqrt(static_cast<double>(tc.k)))
        << tc.m << "x" << tc.n << "x" << tc.k;
  }
}

TEST(Gemm, BitIdenticalForAnyThreadCount) {
  std::mt19937_64 rng(2);
  const int m = 200, n = 700, k = 300;
  const auto a = random_vec(static_cast<std::size_t>(m) * k, rng);
  const auto b = random_vec(static_cast<std::size_t>(k) * n, rng);
  std::vector<const float*> lines;
  for (int p = 0; p < k; ++p) lines.push_back(b.data() + static_cast<std::size_t>(p) * n);
  std::vector<std::vector<float>> results;
  for (int threads : {1, 2, 3, 4}) {
    set_num_threads(threads);
    std::vector<float> c(static_cast<std::size_t>(m) * n);
    gemm(m, n, k, MatA{a.data(), k, false}, MatB{lines.data(), false}, c.data(), n, false);
    results.push_back(c);
  }
  set_num_threads(1);
  for (std::size_t i = 1; i < results.size(); ++i) EXPECT_EQ(results[i], results[0]);
}

CorrGeometry random_geometry(std::mt19937_64& rng) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  CorrGeometry g;
  g.groups = pick(1, 3);
  g.in_channels = g.groups * pick(1, 5);
  g.out_channels = g.groups * pick(1, 5);
  g.kernel = pick(1, 9);
  g.stride = pick(1, 4);
  g.dilation = pick(1, 3);
  g.pad_left = pick(0, 4);
  g.pad_right = pick(0, 4);
  return g;
}

TEST(Corr, BatchedFoldingMatchesPerItem) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 60; ++trial) {
    const CorrGeometry g = random_geometry(rng);
    const std::int64_t span = std::int64_t{g.kernel - 1} * g.dilation + 1;
    const std::int64_t tin = std::max<std::int64_t>(1, span - g.pad_left - g.pad_right) +
                             std::uniform_int_distribution<int>(0, 50)(rng);
    const std::int64_t tout = g.out_length(tin);
    const int batch = std::uniform_int_distribution<int>(2, 4)(rng);
    const auto x = random_vec(static_cast<std::size_t>(batch * g.in_channels * tin), rng);
    const auto w = random_vec(static_cast<std::size_t>(g.out_channels * g.weights_per_output()), rng);
    const auto gy = random_vec(static_cast<std::size_t>(batch * g.out_channels * tout), rng);
    Workspace ws;

    std::vector<float> y1(gy.size()), y2(gy.size());
    for (int n = 0; n < batch; ++n)
      corr_forward(g, x.data() + n * g.in_channels * tin, tin, w.data(),
                   y1.data() + n * g.out_channels * tout, false, ws);
    corr_forward_batched(g, x.data(), batch, tin, w.data(), y2.data(), false, ws);
    for (std::size_t i = 0; i < y1.size(); ++i) ASSERT_NEAR(y1[i], y2[i], 1e-5);

    std::vector<float> gx1(x.size(), 0.0f), gx2(x.size(), 0.0f);
    for (int n = 0; n < batch; ++n)
      corr_input_grad(g, gy.data() + n * g.out_channels * tout, tin, w.data(),
                      gx1.data() + n * g.in_channels * tin, ws);
    corr_input_grad_batched(g, gy.data(), batch, tin, w.data(), gx2.data(), ws);
    for (std::size_t i = 0; i < gx1.size(); ++i) ASSERT_NEAR(gx1[i], gx2[i], 1e-5);

    std::vector<float> gw1(w.size(), 0.0f), gw2(w.size(), 0.0f);
    for (int n = 0; n < batch; ++n)
      corr_weight_grad(g, x.data() + n * g.in_channels * tin, tin,
                       gy.data() + n * g.out_channels * tout, gw1.data(), ws);
    corr_weight_grad_batched(g, x.data(), batch, tin, gy.data(), gw2.data(), ws);
    for (std::size_t i = 0; i < gw1.size(); ++i) ASSERT_NEAR(gw1[i], gw2[i], 1e-4);
  }
}

TEST(ReflectPad, MirrorsWithoutRepeatingEdge) {
  const std::vector<float> x{1, 2, 3, 4};
  std::vector<float> out(4 + 4);
  reflect_pad(x.data(), 1, 4, 2, out.data());
  EXPECT_EQ(out, (std::vector<float>{3, 2, 1, 2, 3, 4, 3, 2}));
  // Pads longer than the signal keep bouncing.
  std::vector<float> wide(2 + 6);
  reflect_pad(x.data(), 1, 2, 3, wide.data());
  EXPECT_EQ(wide, (std::vector<float>{2, 1, 2, 1, 2, 1, 2, 1}));
  std::vector<float> one(1 + 6);
  reflect_pad(x.data(), 1, 1, 3, one.data());
  EXPECT_EQ(one, std::vector<float>(7, 1.0f));
}

TEST(ReflectPad, AdjointIdentity) {
  std::mt19937_64 rng(4);
  for (int pad : {1, 3, 9}) {
    for (int t : {1, 2, 5, 16}) {
      const auto x = random_vec(static_cast<std::size_t>(2 * t), rng);
      const auto gp = random_vec(static_cast<std::size_t>(2 * (t + 2 * pad)), rng);
      std::vector<float> px(gp.size());
      reflect_pad(x.data(), 2, t, pad, px.data());
      std::vector<float> gx(x.size(), 0.0f);
      reflect_pad_adjoint(gp.data(), 2, t, pad, gx.data());
      double lhs = 0.0, rhs = 0.0;
      for (std::size_t i = 0; i < px.size(); ++i) lhs += double{px[i]} * gp[i];
      for (std::size_t i = 0; i < x.size(); ++i) rhs += double{x[i]} * gx[i];
      EXPECT_NEAR(lhs, rhs, 1e-4);
    }
  }
}

TEST(DotF64, MatchesLongSum) {
  std::mt19937_64 rng(5);
  for (std::int64_t n : {0, 1, 7, 8, 9, 1000}) {
    const auto a = random_vec(static_cast<std::size_t>(n), rng);
    const auto b = random_vec(static_cast<std::size_t>(n), rng);
    double want = 0.0;
    for (std::int64_t i = 0; i < n; ++i) want += double{a[i]} * b[i];
    EXPECT_NEAR(dot_f64(a.data(), b.data(), n), want, 1e-9);
  }
}

}  // namespace
}  // namespace melgan::kernels

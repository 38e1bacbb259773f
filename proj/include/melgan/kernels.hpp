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

// Low-level float32 compute kernels shared by the autodiff ops and the
// compiled inference path. Everything here works on raw single-item
// buffers laid out as [channels, time]; batching happens in the callers.
//
// Parallel kernels split work into tiles whose boundaries do not depend
// on the worker count, and every output element is reduced in the same
// order, so results are bit-identical for any thread count.

#include <cstddef>
#include <cstdint>
#include <vector>

namespace melgan::kernels {

void set_num_threads(int n);
int num_threads();

/// Row-major A operand: element (i, p) is data[i * ld + p], or
/// data[p * ld + i] when `transposed`.
struct MatA {
  const float* data;
  std::ptrdiff_t ld;
  bool transposed = false;
};

/// B operand described by per-line pointers. When `by_column` is false,
/// lines[p] points at row p (n contiguous floats); otherwise lines[j]
/// points at column j (k contiguous floats). Shifted rows of one padded
/// signal therefore form an implicit im2col matrix without a copy.
struct MatB {
  const float* const* lines;
  bool by_column = false;
};

/// C[m, n] (+)= A[m, k] * B[k, n], C row-major with leading dimension ldc.
void gemm(int m, int n, int k, MatA a, MatB b, float* c, std::ptrdiff_t ldc,
          bool accumulate);

/// Geometry of a zero-padded grouped, strided, dilated cross-correlation.
/// Weights are laid out [out_channels, in_channels / groups, kernel].
struct CorrGeometry {
  int in_channels = 1;
  int out_channels = 1;
  int kernel = 1;
  int stride = 1;
  int dilation = 1;
  int groups = 1;
  int pad_left = 0;
  int pad_right = 0;

  std::int64_t out_length(std::int64_t in_length) const {
    const std::int64_t span = std::int64_t{kernel - 1} * dilation + 1;
    const std::int64_t padded = in_length + pad_left + pad_right;
    if (padded < span) return 0;
    return (padded - span) / stride + 1;
  }
  int weights_per_output() const { return (in_channels / groups) * kernel; }
};

/// Reusable scratch for the correlation kernels. Buffers only grow.
struct Workspace {
  std::vector<float> padded;
  std::vector<float> cols;
  std::vector<const float*> lines;
  std::vector<float> gathered;  // batch-folded gy or y
};

Workspace& thread_workspace();

/// y[out, out_length(tin)] (+)= corr(x[in, tin], w).
void corr_forward(const CorrGeometry& geom, const float* x, std::int64_t tin,
                  const float* w, float* y, bool accumulate, Workspace& ws);

/// gx[in, tin] += adjoint of corr_forward applied to gy[out, out_length(tin)].
/// This is also the forward pass of a transposed convolution.
void corr_input_grad(const CorrGeometry& geom, const float* gy, std::int64_t tin,
                     const float* w, float* gx, Workspace& ws);

/// gw += d(corr_forward)/dw contracted with gy.
void corr_weight_grad(const CorrGeometry& geom, const float* x, std::int64_t tin,
                      const float* gy, float* gw, Workspace& ws);

/// Batched forms over `batch` contiguous items ([batch, channels, time]).
/// Short outputs fold the batch into the GEMM column dimension so each
/// weight matrix is streamed once per call instead of once per item.
void corr_forward_batched(const CorrGeometry& geom, const float* x, std::int64_t batch,
                          std::int64_t tin, const float* w, float* y, bool accumulate,
                          Workspace& ws);
void corr_input_grad_batched(const CorrGeometry& geom, const float* gy, std::int64_t batch,
                             std::int64_t tin, const float* w, float* gx, Workspace& ws);
void corr_weight_grad_batched(const CorrGeometry& geom, const float* x, std::int64_t batch,
                              std::int64_t tin, const float* gy, float* gw, Workspace& ws);

/// out[c, pad + t] = x[c, t] extended by mirror reflection (edge sample
/// not repeated). Pads of `time` or more keep reflecting back and forth;
/// a one-sample signal extends as a constant. Requires time >= 1.
void reflect_pad(const float* x, std::int64_t channels, std::int64_t time,
                 int pad, float* out);
/// Adjoint of reflect_pad: folds gradients of the padded signal back.
void reflect_pad_adjoint(const float* gpadded, std::int64_t channels,
                         std::int64_t time, int pad, float* gx);

/// sum_i a[i] * b[i] accumulated in double.
double dot_f64(const float* a, const float* b, std::int64_t n);

/// w = g * v / ||v|| per output channel. `channel_axis` 0 treats v as
/// [out, rest...]; 1 treats v as [a, out, k] (transposed-conv layout).
/// Norms are accumulated in double. Returns false on a zero-norm channel.
bool weight_norm(const float* v, const float* g, std::int64_t dim0,
                 std::int64_t dim1, std::int64_t dim2, int channel_axis,
                 float* w, std::vector<double>* norms = nullptr);

/// Gradients of weight_norm given dL/dw and the norms it returned:
/// gv += g/n * gw - g (gw . v) / n^3 * v and gg += (gw . v) / n, per
/// channel. Either output may be null.
void weight_norm_backward(const float* v, const float* g, const float* gw,
                          const std::vector<double>& norms, std::int64_t dim0,
                          std::int64_t dim1, std::int64_t dim2, int channel_axis,
                          float* gv, float* gg);

}  // namespace melgan::kernels

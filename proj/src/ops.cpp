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

#include "melgan/ops.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "melgan/errors.hpp"

namespace melgan {

std::string to_string(PaddingMode mode) {
  return mode == PaddingMode::reflect ? "reflect" : "zeros";
}

PaddingMode padding_mode_from_string(const std::string& s) {
  if (s == "zeros") return PaddingMode::zeros;
  if (s == "reflect") return PaddingMode::reflect;
  throw ConfigError("unknown padding mode '" + s + "'");
}

void ConvSpec::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("conv spec: " + m); };
  if (in_channels < 1 || out_channels < 1) fail("channel counts must be >= 1");
  if (kernel_size < 1) fail("kernel_size must be >= 1");
  if (stride < 1) fail("stride must be >= 1");
  if (dilation < 1) fail("dilation must be >= 1");
  if (groups < 1) fail("groups must be >= 1");
  if (padding < 0) fail("padding must be >= 0");
  if (in_channels % groups != 0 || out_channels % groups != 0)
    fail("in_channels and out_channels must be divisible by groups");
  if (transposed && dilation != 1) fail("transposed convolution requires dilation 1");
  if (transposed && padding_mode != PaddingMode::zeros)
    fail("transposed convolution requires zeros padding");
}

Shape ConvSpec::weight_shape() const {
  if (transposed) return {in_channels, out_channels / groups, kernel_size};
  return {out_channels, in_channels / groups, kernel_size};
}

std::int64_t ConvSpec::output_length(std::int64_t t) const {
  if (transposed) return (t - 1) * stride - 2 * std::int64_t{padding} + kernel_size;
  const std::int64_t padded = t + 2 * std::int64_t{padding};
  const std::int64_t span = std::int64_t{kernel_size - 1} * dilation + 1;
  if (padded < span) return 0;
  return (padded - span) / stride + 1;
}

kernels::CorrGeometry ConvSpec::geometry() const {
  kernels::CorrGeometry geom;
  geom.in_channels = transposed ? out_channels : in_channels;
  geom.out_channels = transposed ? in_channels : out_channels;
  geom.kernel = kernel_size;
  geom.stride = stride;
  geom.dilation = dilation;
  geom.groups = groups;
  const bool zero_pad = padding_mode == PaddingMode::zeros;
  geom.pad_left = geom.pad_right = zero_pad ? padding : 0;
  return geom;
}

namespace {

void expect_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  const Shape& x = a.shape();
  const Shape& y = b.shape();
  auto mismatch = [&](const char* axis) {
    throw ShapeError(axis, std::string(op) + ": operand shapes " + x.str() + " and " +
                               y.str() + " differ");
  };
  if (x.batch != y.batch) mismatch("batch");
  if (x.channels != y.channels) mismatch("channels");
  if (x.time != y.time) mismatch("time");
}

void check_conv_operands(const Tensor& x, const Tensor& w, const Tensor& b,
                         const ConvSpec& spec, const char* op) {
  const std::string name(op);
  if (x.shape().channels != spec.in_channels)
    throw ShapeError("channels", name + ": input has " +
                                     std::to_string(x.shape().channels) +
                                     " channels, layer expects " +
                                     std::to_string(spec.in_channels));
  const Shape ws = spec.weight_shape();
  if (w.shape().batch != ws.batch || w.shape().channels != ws.channels)
    throw ShapeError("channels", name + ": weight " + w.shape().str() +
                                     " does not match expected " + ws.str());
  if (w.shape().time != ws.time)
    throw ShapeError("kernel", name + ": weight " + w.shape().str() +
                                   " does not match expected " + ws.str());
  if (b.defined() && (b.shape().batch != 1 || b.shape().channels != spec.out_channels ||
                      b.shape().time != 1))
    throw ShapeError("channels", name + ": bias " + b.shape().str() +
                                     " must be [1, " + std::to_string(spec.out_channels) +
                                     ", 1]");
}

void add_bias(float* y, const Tensor& b, std::int64_t batch, std::int64_t channels,
              std::int64_t time) {
  if (!b.defined()) return;
  auto bias = b.data();
  for (std::int64_t n = 0; n < batch; ++n)
    for (std::int64_t c = 0; c < channels; ++c) {
      float* row = y + (n * channels + c) * time;
      const float v = bias[static_cast<std::size_t>(c)];
      for (std::int64_t t = 0; t < time; ++t) row[t] += v;
    }
}

void accumulate_bias_grad(std::span<const float> gy, Tensor& b, std::int64_t batch,
                          std::int64_t channels, std::int64_t time) {
  auto gb = b.grad();
  for (std::int64_t c = 0; c < channels; ++c) {
    double s = 0.0;
    for (std::int64_t n = 0; n < batch; ++n) {
      const float* row = gy.data() + (n * channels + c) * time;
      for (std::int64_t t = 0; t < time; ++t) s += row[t];
    }
    gb[static_cast<std::size_t>(c)] += static_cast<float>(s);
  }
}

template <typename Fn>
Tensor unary(const Tensor& x, Fn&& fwd) {
  Tensor y = Tensor::empty(x.shape());
  auto in = x.data();
  auto out = y.data();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
  return y;
}

Tensor scalar_result(double v) { return Tensor::scalar(static_cast<float>(v)); }

}  // namespace

Tensor conv1d(Graph& g, const Tensor& x, const Tensor& w, const Tensor& b,
              const ConvSpec& spec) {
  spec.validate();
  if (spec.transposed) throw ConfigError("conv1d: spec is transposed");
  check_conv_operands(x, w, b, spec, "conv1d");

  const Shape xs = x.shape();
  const bool reflect = spec.padding_mode == PaddingMode::reflect && spec.padding > 0;
  if (reflect && xs.time < 1)
    throw ShapeError("time", "conv1d: reflect padding of an empty signal");
  const kernels::CorrGeometry geom = spec.geometry();
  const std::int64_t tin = reflect ? xs.time + 2 * spec.padding : xs.time;
  const std::int64_t tout = geom.out_length(tin);
  if (tout < 1)
    throw ShapeError("time", "conv1d: padded input time " +
                                 std::to_string(xs.time + 2 * spec.padding) +
                                 " is shorter than the kernel extent " +
                                 std::to_string((spec.kernel_size - 1) * spec.dilation + 1));

  const std::int64_t cin = spec.in_channels;
  const std::int64_t cout = spec.out_channels;
  Tensor y = Tensor::empty({xs.batch, cout, tout});
  auto& ws = kernels::thread_workspace();
  FloatBuffer padded;
  const float* src = x.data().data();
  if (reflect) {
    padded.resize(static_cast<std::size_t>(xs.batch * cin * tin));
    for (std::int64_t n = 0; n < xs.batch; ++n)
      kernels::reflect_pad(src + n * cin * xs.time, cin, xs.time, spec.padding,
                           padded.data() + n * cin * tin);
    src = padded.data();
  }
  kernels::corr_forward_batched(geom, src, xs.batch, tin, w.data().data(), y.data().data(),
                                false, ws);
  add_bias(y.data().data(), b, xs.batch, cout, tout);

  if (g.needs_record({&x, &w, &b})) {
    g.record(y, {x, w, b},
             [x = Tensor(x), w = Tensor(w), b = Tensor(b), spec, geom, reflect, tin, tout](std::span<const float> gy) mutable {
               const Shape xs = x.shape();
               const std::int64_t cin = spec.in_channels;
               const std::int64_t cout = spec.out_channels;
               auto& ws = kernels::thread_workspace();
               FloatBuffer padded, gpadded;
               const float* src = x.data().data();
               if (reflect) {
                 padded.resize(static_cast<std::size_t>(xs.batch * cin * tin));
                 for (std::int64_t n = 0; n < xs.batch; ++n)
                   kernels::reflect_pad(src + n * cin * xs.time, cin, xs.time, spec.padding,
                                        padded.data() + n * cin * tin);
                 src = padded.data();
               }
               if (x.requires_grad()) {
                 float* gx = x.grad().data();
                 if (reflect) {
                   gpadded.assign(padded.size(), 0.0f);
                   kernels::corr_input_grad_batched(geom, gy.data(), xs.batch, tin,
                                                    w.data().data(), gpadded.data(), ws);
                   for (std::int64_t n = 0; n < xs.batch; ++n)
                     kernels::reflect_pad_adjoint(gpadded.data() + n * cin * tin, cin,
                                                  xs.time, spec.padding, gx + n * cin * xs.time);
                 } else {
                   kernels::corr_input_grad_batched(geom, gy.data(), xs.batch, tin,
                                                    w.data().data(), gx, ws);
                 }
               }
               if (w.requires_grad())
                 kernels::corr_weight_grad_batched(geom, src, xs.batch, tin, gy.data(),
                                                   w.grad().data(), ws);
               if (b.defined() && b.requires_grad())
                 accumulate_bias_grad(gy, b, xs.batch, cout, tout);
             });
  }
  return y;
}

Tensor conv_transpose1d(Graph& g, const Tensor& x, const Tensor& w, const Tensor& b,
                        const ConvSpec& spec) {
  spec.validate();
  if (!spec.transposed) throw ConfigError("conv_transpose1d: spec is not transposed");
  check_conv_operands(x, w, b, spec, "conv_transpose1d");
  const Shape xs = x.shape();
  const std::int64_t tout = spec.output_length(xs.time);
  if (xs.time < 1 || tout < 1)
    throw ShapeError("time", "conv_transpose1d: computed output length " +
                                 std::to_string(tout) + " is not positive");
  const kernels::CorrGeometry geom = spec.geometry();
  const std::int64_t cout = spec.out_channels;
  Tensor y = Tensor::zeros({xs.batch, cout, tout});
  auto& ws = kernels::thread_workspace();
  kernels::corr_input_grad_batched(geom, x.data().data(), xs.batch, tout, w.data().data(),
                                   y.data().data(), ws);
  add_bias(y.data().data(), b, xs.batch, cout, tout);

  if (g.needs_record({&x, &w, &b})) {
    g.record(y, {x, w, b}, [x = Tensor(x), w = Tensor(w), b = Tensor(b), spec, geom, tout](std::span<const float> gy) mutable {
      const Shape xs = x.shape();
      const std::int64_t cout = spec.out_channels;
      auto& ws = kernels::thread_workspace();
      if (x.requires_grad())
        kernels::corr_forward_batched(geom, gy.data(), xs.batch, tout, w.data().data(),
                                      x.grad().data(), true, ws);
      if (w.requires_grad())
        kernels::corr_weight_grad_batched(geom, gy.data(), xs.batch, tout, x.data().data(),
                                          w.grad().data(), ws);
      if (b.defined() && b.requires_grad())
        accumulate_bias_grad(gy, b, xs.batch, cout, tout);
    });
  }
  return y;
}

Tensor avg_pool1d(Graph& g, const Tensor& x, int kernel, int stride, int padding) {
  if (kernel < 1 || stride < 1 || padding < 0 || padding >= kernel)
    throw ConfigError("avg_pool1d: need kernel >= 1, stride >= 1, 0 <= padding < kernel");
  const Shape xs = x.shape();
  if (xs.time + 2 * padding < kernel)
    throw ShapeError("time", "avg_pool1d: kernel " + std::to_string(kernel) +
                                 " exceeds input time " + std::to_string(xs.time));
  const std::int64_t tout = (xs.time + 2 * padding - kernel) / stride + 1;
  const std::int64_t rows = xs.batch * xs.channels;
  Tensor y = Tensor::empty({xs.batch, xs.channels, tout});
  auto in = x.data();
  auto out = y.data();
  for (std::int64_t r = 0; r < rows; ++r) {
    const float* src = in.data() + r * xs.time;
    float* dst = out.data() + r * tout;
    for (std::int64_t t = 0; t < tout; ++t) {
      const std::int64_t lo = std::max<std::int64_t>(0, t * stride - padding);
      const std::int64_t hi = std::min<std::int64_t>(xs.time, t * stride - padding + kernel);
      float s = 0.0f;
      for (std::int64_t i = lo; i < hi; ++i) s += src[i];
      dst[t] = s / static_cast<float>(hi - lo);
    }
  }
  if (g.needs_record({&x})) {
    g.record(y, {x}, [x = Tensor(x), kernel, stride, padding, tout](std::span<const float> gy) mutable {
      const Shape xs = x.shape();
      auto gx = x.grad();
      for (std::int64_t r = 0; r < xs.batch * xs.channels; ++r) {
        float* dst = gx.data() + r * xs.time;
        const float* src = gy.data() + r * tout;
        for (std::int64_t t = 0; t < tout; ++t) {
          const std::int64_t lo = std::max<std::int64_t>(0, t * stride - padding);
          const std::int64_t hi =
              std::min<std::int64_t>(xs.time, t * stride - padding + kernel);
          const float share = src[t] / static_cast<float>(hi - lo);
          for (std::int64_t i = lo; i < hi; ++i) dst[i] += share;
        }
      }
    });
  }
  return y;
}

Tensor leaky_relu(Graph& g, const Tensor& x, float slope) {
  if (!(slope > 0.0f && slope < 1.0f)) throw ConfigError("leaky_relu: slope must be in (0, 1)");
  Tensor y = unary(x, [slope](float v) { return v >= 0.0f ? v : slope * v; });
  if (g.needs_record({&x})) {
    g.record(y, {x}, [x = Tensor(x), slope](std::span<const float> gy) mutable {
      auto in = x.data();
      auto gx = x.grad();
      for (std::size_t i = 0; i < in.size(); ++i)
        gx[i] += in[i] >= 0.0f ? gy[i] : slope * gy[i];
    });
  }
  return y;
}

Tensor relu(Graph& g, const Tensor& x) {
  // NaN passes through so a broken input stays visible downstream.
  Tensor y = unary(x, [](float v) { return v < 0.0f ? 0.0f : v; });
  if (g.needs_record({&x})) {
    g.record(y, {x}, [x = Tensor(x)](std::span<const float> gy) mutable {
      auto in = x.data();
      auto gx = x.grad();
      for (std::size_t i = 0; i < in.size(); ++i)
        if (in[i] > 0.0f) gx[i] += gy[i];
    });
  }
  return y;
}

Tensor tanh(Graph& g, const Tensor& x) {
  Tensor y = unary(x, [](float v) { return std::tanh(v); });
  if (g.needs_record({&x})) {
    g.record(y, {x}, [x = Tensor(x), out = y.detach()](std::span<const float> gy) mutable {
      auto o = out.data();
      auto gx = x.grad();
      for (std::size_t i = 0; i < o.size(); ++i) gx[i] += gy[i] * (1.0f - o[i] * o[i]);
    });
  }
  return y;
}

Tensor affine(Graph& g, const Tensor& x, float scale, float shift) {
  Tensor y = unary(x, [=](float v) { return scale * v + shift; });
  if (g.needs_record({&x})) {
    g.record(y, {x}, [x = Tensor(x), scale](std::span<const float> gy) mutable {
      auto gx = x.grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += scale * gy[i];
    });
  }
  return y;
}

Tensor add(Graph& g, const Tensor& a, const Tensor& b) {
  expect_same_shape(a, b, "add");
  Tensor y = Tensor::empty(a.shape());
  auto pa = a.data();
  auto pb = b.data();
  auto out = y.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = pa[i] + pb[i];
  if (g.needs_record({&a, &b})) {
    g.record(y, {a, b}, [a = Tensor(a), b = Tensor(b)](std::span<const float> gy) mutable {
      if (a.requires_grad()) {
        auto ga = a.grad();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad();
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gy[i];
      }
    });
  }
  return y;
}

Tensor slice_batch(Graph& g, const Tensor& x, std::int64_t begin, std::int64_t count) {
  const Shape xs = x.shape();
  if (begin < 0 || count < 1 || begin + count > xs.batch)
    throw ShapeError("batch", "slice_batch: [" + std::to_string(begin) + ", " +
                                  std::to_string(begin + count) + ") outside batch of " +
                                  std::to_string(xs.batch));
  const std::int64_t item = xs.channels * xs.time;
  const auto src = x.data().subspan(static_cast<std::size_t>(begin * item),
                                    static_cast<std::size_t>(count * item));
  Tensor y = Tensor::from({count, xs.channels, xs.time}, {src.begin(), src.end()});
  if (g.needs_record({&x})) {
    g.record(y, {x}, [x = Tensor(x), offset = begin * item](std::span<const float> gy) mutable {
      float* gx = x.grad().data() + offset;
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
    });
  }
  return y;
}

Tensor concat_batch(Graph& g, const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("batch", "concat_batch: no inputs");
  const Shape first = parts.front().shape();
  std::int64_t batch = 0;
  for (const auto& p : parts) {
    const Shape s = p.shape();
    if (s.channels != first.channels) throw ShapeError("channels", "concat_batch: channel mismatch");
    if (s.time != first.time) throw ShapeError("time", "concat_batch: time mismatch");
    batch += s.batch;
  }
  std::vector<float> values;
  values.reserve(static_cast<std::size_t>(batch * first.channels * first.time));
  for (const auto& p : parts) values.insert(values.end(), p.data().begin(), p.data().end());
  Tensor y = Tensor::from({batch, first.channels, first.time}, std::move(values));
  bool any = false;
  for (const auto& p : parts) any = any || (g.recording() && p.requires_grad());
  if (any) {
    g.record(y, parts, [parts = std::vector<Tensor>(parts)](std::span<const float> gy) mutable {
      std::size_t offset = 0;
      for (auto& p : parts) {
        const std::size_t n = static_cast<std::size_t>(p.numel());
        if (p.requires_grad()) {
          auto gp = p.grad();
          for (std::size_t i = 0; i < n; ++i) gp[i] += gy[offset + i];
        }
        offset += n;
      }
    });
  }
  return y;
}

Tensor sum(Graph& g, const Tensor& x) {
  double s = 0.0;
  for (float v : x.data()) s += v;
  Tensor y = scalar_result(s);
  if (g.needs_record({&x})) {
    g.record(y, {x}, [x = Tensor(x)](std::span<const float> gy) mutable {
      for (float& v : x.grad()) v += gy[0];
    });
  }
  return y;
}

Tensor mean(Graph& g, const Tensor& x) {
  const double n = static_cast<double>(x.numel());
  if (n == 0) throw ShapeError("time", "mean of empty tensor");
  double s = 0.0;
  for (float v : x.data()) s += v;
  Tensor y = scalar_result(s / n);
  if (g.needs_record({&x})) {
    g.record(y, {x}, [x = Tensor(x), n](std::span<const float> gy) mutable {
      const float share = static_cast<float>(gy[0] / n);
      for (float& v : x.grad()) v += share;
    });
  }
  return y;
}

Tensor l1_mean(Graph& g, const Tensor& a, const Tensor& b) {
  expect_same_shape(a, b, "l1_mean");
  const double n = static_cast<double>(a.numel());
  if (n == 0) throw ShapeError("time", "l1_mean of empty tensors");
  auto pa = a.data();
  auto pb = b.data();
  double s = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) s += std::fabs(double{pa[i]} - pb[i]);
  Tensor y = scalar_result(s / n);
  if (g.needs_record({&a, &b})) {
    g.record(y, {a, b}, [a = Tensor(a), b = Tensor(b), n](std::span<const float> gy) mutable {
      const float share = static_cast<float>(gy[0] / n);
      auto pa = a.data();
      auto pb = b.data();
      const bool ga_on = a.requires_grad();
      const bool gb_on = b.requires_grad();
      std::span<float> ga = ga_on ? a.grad() : std::span<float>{};
      std::span<float> gb = gb_on ? b.grad() : std::span<float>{};
      for (std::size_t i = 0; i < pa.size(); ++i) {
        const float d = pa[i] - pb[i];
        const float s = d > 0.0f ? share : (d < 0.0f ? -share : 0.0f);
        if (ga_on) ga[i] += s;
        if (gb_on) gb[i] -= s;
      }
    });
  }
  return y;
}

Tensor weight_norm(Graph& g, const Tensor& v, const Tensor& gain, int channel_axis) {
  if (channel_axis != 0 && channel_axis != 1)
    throw ConfigError("weight_norm: channel_axis must be 0 or 1");
  const Shape vs = v.shape();
  const std::int64_t channels = channel_axis == 0 ? vs.batch : vs.channels;
  if (gain.shape() != Shape{1, channels, 1})
    throw ShapeError("channels", "weight_norm: gain " + gain.shape().str() +
                                     " must be [1, " + std::to_string(channels) + ", 1]");
  Tensor w = Tensor::empty(vs);
  std::vector<double> norms;
  if (!kernels::weight_norm(v.data().data(), gain.data().data(), vs.batch, vs.channels,
                            vs.time, channel_axis, w.data().data(), &norms))
    throw Error("weight_norm: a weight channel has zero norm");
  if (g.needs_record({&v, &gain})) {
    g.record(w, {v, gain},
             [v = Tensor(v), gain = Tensor(gain), channel_axis, norms](std::span<const float> gw) mutable {
               const Shape vs = v.shape();
               kernels::weight_norm_backward(
                   v.data().data(), gain.data().data(), gw.data(), norms, vs.batch, vs.channels,
                   vs.time, channel_axis, v.requires_grad() ? v.grad().data() : nullptr,
                   gain.requires_grad() ? gain.grad().data() : nullptr);
             });
  }
  return w;
}

Tensor spectral_normalize(Graph& g, const Tensor& w, int iterations) {
  const Shape s = w.shape();
  const std::int64_t rows = s.batch;
  const std::int64_t cols = s.channels * s.time;
  auto pw = w.data();
  std::vector<double> u(static_cast<std::size_t>(rows), 1.0 / std::sqrt(double(rows)));
  std::vector<double> vv(static_cast<std::size_t>(cols), 0.0);
  double sigma = 0.0;
  for (int it = 0; it < std::max(1, iterations); ++it) {
    std::fill(vv.begin(), vv.end(), 0.0);
    for (std::int64_t r = 0; r < rows; ++r)
      for (std::int64_t c = 0; c < cols; ++c) vv[c] += pw[r * cols + c] * u[r];
    double nv = 0.0;
    for (double x : vv) nv += x * x;
    nv = std::sqrt(nv);
    if (nv == 0.0) throw Error("spectral_normalize: zero weight matrix");
    for (double& x : vv) x /= nv;
    double nu = 0.0;
    for (std::int64_t r = 0; r < rows; ++r) {
      double acc = 0.0;
      for (std::int64_t c = 0; c < cols; ++c) acc += pw[r * cols + c] * vv[c];
      u[r] = acc;
      nu += acc * acc;
    }
    sigma = std::sqrt(nu);
    for (double& x : u) x /= sigma;
  }
  const float inv = static_cast<float>(1.0 / sigma);
  Tensor y = Tensor::empty(s);
  auto out = y.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = pw[i] * inv;
  if (g.needs_record({&w})) {
    g.record(y, {w}, [w = Tensor(w), inv](std::span<const float> gy) mutable {
      auto gw = w.grad();
      for (std::size_t i = 0; i < gw.size(); ++i) gw[i] += gy[i] * inv;
    });
  }
  return y;
}

}  // namespace melgan

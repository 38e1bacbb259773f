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

#include "melgan/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include <json.hpp>

#include "melgan/errors.hpp"

namespace melgan {
namespace {

void add_bias(float* y, const std::vector<float>& bias, std::int64_t channels,
              std::int64_t time) {
  for (std::int64_t c = 0; c < channels; ++c) {
    float* row = y + c * time;
    const float b = bias[static_cast<std::size_t>(c)];
    for (std::int64_t t = 0; t < time; ++t) row[t] += b;
  }
}

inline void leaky_inplace(float* x, std::int64_t n, float slope) {
  for (std::int64_t i = 0; i < n; ++i) x[i] = x[i] >= 0.0f ? x[i] : slope * x[i];
}

inline void leaky_copy(const float* x, std::int64_t n, float slope, float* out) {
  for (std::int64_t i = 0; i < n; ++i) out[i] = x[i] >= 0.0f ? x[i] : slope * x[i];
}

// Reflect-pads x into out and, when `slope` > 0, applies the leaky ReLU
// (which commutes with the mirror extension).
void pad_activate(const CompiledGenerator::Layer& l, const float* x, std::int64_t channels,
                  std::int64_t time, float slope, float* out) {
  kernels::reflect_pad(x, channels, time, l.pad, out);
  if (slope > 0.0f) leaky_inplace(out, channels * (time + 2 * l.pad), slope);
}

struct Sizes {
  std::size_t act = 0;
  std::size_t padded = 0;
};

}  // namespace

CompiledGenerator CompiledGenerator::compile(const Generator& gen, std::int64_t max_frames) {
  gen.config.validate();
  if (max_frames < 1) throw ConfigError("compile: max_frames must be positive");
  CompiledGenerator cg;
  cg.config_ = gen.config;
  cg.max_frames_ = max_frames;
  Graph graph(false);
  for (const auto& l : gen.params.layers) {
    Layer out;
    out.name = l.name;
    out.geom = l.spec.geometry();
    out.transposed = l.spec.transposed;
    out.reflect = l.spec.padding_mode == PaddingMode::reflect && l.spec.padding > 0;
    out.pad = out.reflect ? l.spec.padding : 0;
    const Tensor w = l.weight(graph);
    out.weight.assign(w.data().begin(), w.data().end());
    if (l.bias.defined())
      out.bias.assign(l.bias.data().begin(), l.bias.data().end());
    else
      out.bias.assign(static_cast<std::size_t>(l.spec.out_channels), 0.0f);
    cg.layers_.push_back(std::move(out));
  }
  cg.scratch_ = cg.make_scratch();
  // One pass at full size grows the kernels' thread-local workspaces.
  std::vector<float> mel(static_cast<std::size_t>(cg.mel_channels() * max_frames), 0.0f);
  std::vector<float> audio(static_cast<std::size_t>(cg.hop() * max_frames));
  cg.synthesize_into(mel, max_frames, audio);
  return cg;
}

CompiledGenerator::Scratch CompiledGenerator::make_scratch() const {
  Sizes s;
  const auto& cfg = config_;
  std::int64_t t = max_frames_;
  auto grow = [&](std::int64_t channels, std::int64_t time, int pad) {
    s.act = std::max(s.act, static_cast<std::size_t>(channels * time));
    s.padded = std::max(s.padded, static_cast<std::size_t>(channels * (time + 2 * pad)));
  };
  int res_pad = cfg.io_kernel / 2;
  for (int d : cfg.resblock_dilations) res_pad = std::max(res_pad, d * (cfg.resblock_kernel - 1) / 2);
  std::int64_t c = cfg.base_width;
  grow(cfg.mel_channels, t, cfg.io_kernel / 2);
  grow(c, t, 0);
  for (int i = 0; i < cfg.stages(); ++i) {
    t *= cfg.upsample_ratios[i];
    c = cfg.stage_width(i);
    grow(c, t, res_pad);
  }
  Scratch sc;
  sc.x.assign(s.act, 0.0f);
  sc.y.assign(s.act, 0.0f);
  sc.h.assign(s.act, 0.0f);
  sc.padded.assign(std::max(s.padded, s.act), 0.0f);
  return sc;
}

void CompiledGenerator::synthesize_into(std::span<const float> mel, std::int64_t frames,
                                        std::span<float> out, Scratch& sc) const {
  const auto& cfg = config_;
  if (frames < 1) throw ShapeError("time", "synthesize: empty mel");
  if (frames > max_frames_)
    throw ShapeError("time", "synthesize: " + std::to_string(frames) +
                                 " frames exceed the compiled maximum of " +
                                 std::to_string(max_frames_));
  if (static_cast<std::int64_t>(mel.size()) != cfg.mel_channels * frames)
    throw ShapeError("channels", "synthesize: mel buffer holds " + std::to_string(mel.size()) +
                                     " values, expected " +
                                     std::to_string(cfg.mel_channels * frames));
  if (static_cast<std::int64_t>(out.size()) != hop() * frames)
    throw ShapeError("time", "synthesize: output buffer holds " + std::to_string(out.size()) +
                                 " samples, expected " + std::to_string(hop() * frames));

  auto& ws = kernels::thread_workspace();
  const float slope = cfg.leaky_slope;
  float* x = sc.x.data();
  float* y = sc.y.data();
  float* h = sc.h.data();
  float* padded = sc.padded.data();
  std::size_t next = 0;
  std::int64_t t = frames;
  std::int64_t c = cfg.mel_channels;

  const Layer& in = layers_[next++];
  pad_activate(in, mel.data(), c, t, 0.0f, padded);
  kernels::corr_forward(in.geom, padded, t + 2 * in.pad, in.weight.data(), x, false, ws);
  c = in.geom.out_channels;
  add_bias(x, in.bias, c, t);

  for (int i = 0; i < cfg.stages(); ++i) {
    const Layer& up = layers_[next++];
    leaky_copy(x, c * t, slope, padded);
    const std::int64_t tout = t * cfg.upsample_ratios[i];
    // Transposed conv = adjoint of the correlation: in/out roles swap.
    c = up.geom.in_channels;
    std::fill(y, y + c * tout, 0.0f);
    kernels::corr_input_grad(up.geom, padded, tout, up.weight.data(), y, ws);
    add_bias(y, up.bias, c, tout);
    std::swap(x, y);
    t = tout;

    for (std::size_t j = 0; j < cfg.resblock_dilations.size(); ++j) {
      const Layer& dil = layers_[next++];
      const Layer& pw = layers_[next++];
      pad_activate(dil, x, c, t, slope, padded);
      kernels::corr_forward(dil.geom, padded, t + 2 * dil.pad, dil.weight.data(), h, false, ws);
      add_bias(h, dil.bias, c, t);
      leaky_inplace(h, c * t, slope);
      if (cfg.shortcut == ResidualShortcut::conv1x1) {
        const Layer& sh = layers_[next++];
        kernels::corr_forward(sh.geom, x, t, sh.weight.data(), y, false, ws);
        add_bias(y, sh.bias, c, t);
      } else {
        std::copy(x, x + c * t, y);
      }
      kernels::corr_forward(pw.geom, h, t, pw.weight.data(), y, true, ws);
      add_bias(y, pw.bias, c, t);
      std::swap(x, y);
    }
  }

  const Layer& last = layers_[next++];
  pad_activate(last, x, c, t, slope, padded);
  kernels::corr_forward(last.geom, padded, t + 2 * last.pad, last.weight.data(), out.data(),
                        false, ws);
  const float b = last.bias[0];
  for (auto& v : out) v = std::tanh(v + b);
}

void CompiledGenerator::synthesize_into(std::span<const float> mel, std::int64_t frames,
                                        std::span<float> out) {
  synthesize_into(mel, frames, out, scratch_);
}

AudioClip CompiledGenerator::synthesize(const Tensor& mel, int sample_rate) {
  const Shape s = mel.shape();
  if (s.batch != 1) throw ShapeError("batch", "synthesize: expected a single mel");
  if (s.channels != mel_channels())
    throw ShapeError("channels", "synthesize: mel has " + std::to_string(s.channels) +
                                     " channels, expected " + std::to_string(mel_channels()));
  AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.samples.resize(static_cast<std::size_t>(hop() * s.time));
  synthesize_into(mel.data(), s.time, clip.samples);
  return clip;
}

BenchReport make_report(std::int64_t samples, double seconds, int sample_rate) {
  if (!(seconds > 0.0)) throw ConfigError("make_report: seconds must be positive");
  if (sample_rate < 1) throw ConfigError("make_report: sample rate must be positive");
  BenchReport r;
  r.samples_generated = samples;
  r.seconds = seconds;
  r.sample_rate = sample_rate;
  r.khz = static_cast<double>(samples) / seconds / 1000.0;
  r.rtf = r.khz * 1000.0 / sample_rate;
  return r;
}

BenchReport benchmark(const CompiledGenerator& gen, std::int64_t frames, int repeats,
                      int threads, int warmup, int sample_rate) {
  if (repeats < 3) throw ConfigError("benchmark: need at least 3 repeats");
  if (warmup < 1) throw ConfigError("benchmark: need at least 1 warmup run");
  if (threads < 1) throw ConfigError("benchmark: thread count must be positive");
  std::mt19937_64 rng(frames);
  std::uniform_real_distribution<float> u(-8.0f, 0.0f);
  std::vector<float> mel(static_cast<std::size_t>(gen.mel_channels() * frames));
  for (auto& v : mel) v = u(rng);
  std::vector<float> audio(static_cast<std::size_t>(gen.hop() * frames));
  auto scratch = gen.make_scratch();

  const int saved = kernels::num_threads();
  kernels::set_num_threads(threads);
  std::vector<double> times;
  try {
    for (int i = 0; i < warmup; ++i) gen.synthesize_into(mel, frames, audio, scratch);
    for (int i = 0; i < repeats; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      gen.synthesize_into(mel, frames, audio, scratch);
      times.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
  } catch (...) {
    kernels::set_num_threads(saved);
    throw;
  }
  kernels::set_num_threads(saved);
  std::sort(times.begin(), times.end());
  const std::size_t mid = times.size() / 2;
  const double median =
      times.size() % 2 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
  BenchReport r = make_report(static_cast<std::int64_t>(audio.size()), median, sample_rate);
  r.frames = frames;
  r.threads = threads;
  r.warmup = warmup;
  r.repeats = repeats;
  return r;
}

std::string BenchReport::to_json() const {
  nlohmann::ordered_json j;
  j["frames"] = frames;
  j["samples_generated"] = samples_generated;
  j["seconds"] = seconds;
  j["khz"] = khz;
  j["rtf"] = rtf;
  j["sample_rate"] = sample_rate;
  j["threads"] = threads;
  j["warmup"] = warmup;
  j["repeats"] = repeats;
  j["reference_khz"] = kReferenceCpuKhz;
  return j.dump();
}

std::string BenchReport::to_table() const {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "frames             %lld\n"
                "samples/repeat     %lld\n"
                "median seconds     %.6f\n"
                "throughput         %.1f kHz\n"
                "real-time factor   %.2f (at %d Hz)\n"
                "threads            %d\n"
                "warmup / repeats   %d / %d\n"
                "reference          %.1f kHz (original model, 1 CPU core)\n",
                static_cast<long long>(frames), static_cast<long long>(samples_generated),
                seconds, khz, rtf, sample_rate, threads, warmup, repeats, kReferenceCpuKhz);
  return buf;
}

}  // namespace melgan

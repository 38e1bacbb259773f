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
#include <string>
#include <vector>

#include "melgan/arch.hpp"
#include "melgan/audio.hpp"
#include "melgan/kernels.hpp"
#include "melgan/tensor.hpp"

namespace melgan {

/// Generator forward path without autodiff. Weight norm is folded at
/// compile time and every intermediate buffer is sized for `max_frames`,
/// so steady-state synthesis performs no heap allocation.
///
/// The compiled weights are immutable and may be shared between threads;
/// each thread then brings its own Scratch.
class CompiledGenerator {
 public:
  struct Layer {
    std::string name;
    kernels::CorrGeometry geom;
    bool transposed = false;
    bool reflect = false;
    int pad = 0;
    std::vector<float> weight;
    std::vector<float> bias;
  };

  /// Per-thread activation buffers.
  struct Scratch {
    std::vector<float> x, y, h, padded;
  };

  static CompiledGenerator compile(const Generator& gen, std::int64_t max_frames);

  std::int64_t max_frames() const { return max_frames_; }
  std::int64_t hop() const { return config_.hop(); }
  int mel_channels() const { return config_.mel_channels; }
  const GeneratorConfig& config() const { return config_; }
  const std::vector<Layer>& layers() const { return layers_; }

  Scratch make_scratch() const;

  /// mel is [mel_channels, frames] row-major; out receives hop * frames
  /// samples. Throws ShapeError when frames exceeds max_frames or the spans
  /// are mis-sized.
  void synthesize_into(std::span<const float> mel, std::int64_t frames, std::span<float> out,
                       Scratch& scratch) const;
  /// Same, using the generator's own scratch (not thread-safe).
  void synthesize_into(std::span<const float> mel, std::int64_t frames, std::span<float> out);

  /// mel [1, mel_channels, frames] -> clip of hop * frames samples.
  AudioClip synthesize(const Tensor& mel, int sample_rate = 22050);

 private:
  GeneratorConfig config_;
  std::int64_t max_frames_ = 0;
  std::vector<Layer> layers_;
  Scratch scratch_;
};

struct BenchReport {
  std::int64_t frames = 0;
  std::int64_t samples_generated = 0;  // per repeat
  double seconds = 0.0;                // median wall time of one repeat
  double khz = 0.0;
  double rtf = 0.0;
  int sample_rate = 22050;
  int threads = 1;
  int warmup = 1;
  int repeats = 3;

  std::string to_json() const;
  std::string to_table() const;
};

/// CPU throughput quoted for the original model on one core.
inline constexpr double kReferenceCpuKhz = 51.9;

/// Arithmetic of a report: khz = samples / seconds / 1000, rtf = khz * 1000 / rate.
BenchReport make_report(std::int64_t samples, double seconds, int sample_rate);

/// Times synthesize_into on a random mel of `frames` frames. Requires
/// repeats >= 3 and warmup >= 1. The thread count is applied for the run
/// and restored afterwards.
BenchReport benchmark(const CompiledGenerator& gen, std::int64_t frames, int repeats,
                      int threads, int warmup = 1, int sample_rate = 22050);

}  // namespace melgan

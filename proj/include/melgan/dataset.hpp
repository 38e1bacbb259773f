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
#include <filesystem>
#include <string>
#include <vector>

#include "melgan/audio.hpp"
#include "melgan/tensor.hpp"

namespace melgan {

/// Seeded stream of fixed-length training windows drawn from a set of
/// clips. Window i depends only on (seed, i): the clip order is reshuffled
/// every epoch of `clip_count()` windows and each window starts at a
/// uniformly random offset. Clips shorter than the window are zero-padded
/// at the tail.
class WindowDataset {
 public:
  // Reads every *.wav under `dir` (non-recursive, sorted by file name).
  // Throws IoError when the directory is missing or holds no WAV files and
  // FormatError when a clip's sample rate differs from `sample_rate`.
  static WindowDataset from_directory(const std::filesystem::path& dir,
                                      std::int64_t window_samples, std::uint64_t seed,
                                      int sample_rate = 22050);
  static WindowDataset from_clips(std::vector<std::vector<float>> clips,
                                  std::int64_t window_samples, std::uint64_t seed);

  std::size_t clip_count() const { return clips_.size(); }
  std::int64_t window_samples() const { return window_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<std::string>& names() const { return names_; }

  std::vector<float> window(std::uint64_t index) const;
  // Windows [step * batch, (step + 1) * batch) as [batch, 1, window].
  Tensor batch(std::uint64_t step, int batch_size) const;

 private:
  WindowDataset() = default;

  std::vector<std::vector<float>> clips_;
  std::vector<std::string> names_;
  std::int64_t window_ = 0;
  std::uint64_t seed_ = 0;
};

}  // namespace melgan

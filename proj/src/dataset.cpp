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

#include "melgan/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "melgan/errors.hpp"

namespace melgan {

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (std::uint64_t{out[1]} << 32) | out[0];
}

void check_window(std::int64_t window_samples) {
  if (window_samples < 1) throw ConfigError("dataset: window_samples must be >= 1");
}

}  // namespace

WindowDataset WindowDataset::from_directory(const std::filesystem::path& dir,
                                            std::int64_t window_samples, std::uint64_t seed,
                                            int sample_rate) {
  check_window(window_samples);
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec))
    throw IoError("dataset: '" + dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".wav") files.push_back(entry.path());
  }
  if (files.empty()) throw IoError("dataset: no .wav files in '" + dir.string() + "'");
  std::sort(files.begin(), files.end());
  WindowDataset ds;
  ds.window_ = window_samples;
  ds.seed_ = seed;
  for (const auto& f : files) {
    AudioClip clip = read_wav(f);
    if (clip.sample_rate != sample_rate)
      throw FormatError("fmt ", "'" + f.filename().string() + "' is sampled at " +
                                    std::to_string(clip.sample_rate) + " Hz, expected " +
                                    std::to_string(sample_rate));
    if (clip.samples.empty()) continue;
    ds.clips_.push_back(std::move(clip.samples));
    ds.names_.push_back(f.filename().string());
  }
  if (ds.clips_.empty()) throw IoError("dataset: every .wav in '" + dir.string() + "' is empty");
  return ds;
}

WindowDataset WindowDataset::from_clips(std::vector<std::vector<float>> clips,
                                        std::int64_t window_samples, std::uint64_t seed) {
  check_window(window_samples);
  if (clips.empty()) throw IoError("dataset: no clips");
  WindowDataset ds;
  ds.window_ = window_samples;
  ds.seed_ = seed;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    if (clips[i].empty()) throw ConfigError("dataset: clip " + std::to_string(i) + " is empty");
    ds.names_.push_back("clip" + std::to_string(i));
  }
  ds.clips_ = std::move(clips);
  return ds;
}

std::vector<float> WindowDataset::window(std::uint64_t index) const {
  const std::uint64_t n = clips_.size();
  const std::uint64_t epoch = index / n;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 shuffle_rng(mix(seed_, 2 * epoch));
  std::shuffle(order.begin(), order.end(), shuffle_rng);
  const auto& clip = clips_[order[index % n]];

  std::vector<float> out(static_cast<std::size_t>(window_), 0.0f);
  const std::int64_t len = static_cast<std::int64_t>(clip.size());
  std::int64_t offset = 0;
  if (len > window_) {
    std::mt19937_64 offset_rng(mix(seed_, 2 * index + 1));
    offset = std::uniform_int_distribution<std::int64_t>(0, len - window_)(offset_rng);
  }
  const std::int64_t count = std::min(window_, len - offset);
  std::copy_n(clip.begin() + offset, count, out.begin());
  return out;
}

Tensor WindowDataset::batch(std::uint64_t step, int batch_size) const {
  if (batch_size < 1) throw ConfigError("dataset: batch size must be >= 1");
  std::vector<float> values;
  values.reserve(static_cast<std::size_t>(batch_size * window_));
  for (int b = 0; b < batch_size; ++b) {
    const auto w = window(step * static_cast<std::uint64_t>(batch_size) + b);
    values.insert(values.end(), w.begin(), w.end());
  }
  return Tensor::from({batch_size, 1, window_}, std::move(values));
}

}  // namespace melgan

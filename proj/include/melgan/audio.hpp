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

#include <filesystem>
#include <span>
#include <vector>

#include "melgan/kv_config.hpp"
#include "melgan/tensor.hpp"

namespace melgan {

/// Mono waveform with samples in [-1, 1].
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = 22050;
};

enum class WavEncoding { pcm16, float32 };

/// Reads a RIFF/WAVE file (PCM-16 or IEEE float32, any channel count; the
/// first channel is kept). Throws FormatError naming the offending chunk.
AudioClip read_wav(const std::filesystem::path& path);
AudioClip decode_wav(std::span<const unsigned char> bytes);

/// Writes a mono WAV. Samples are clipped to [-1, 1]; PCM-16 stores
/// round(x * 32768) saturated to the int16 range.
void write_wav(const std::filesystem::path& path, const AudioClip& clip,
               WavEncoding encoding = WavEncoding::pcm16);
std::vector<unsigned char> encode_wav(const AudioClip& clip,
                                      WavEncoding encoding = WavEncoding::pcm16);

/// Mel analysis settings. The hop is fixed at 256 samples, the temporal
/// resolution ratio between mel frames and waveform samples the generator
/// inverts.
struct MelConfig {
  static constexpr int kHop = 256;

  int sample_rate = 22050;
  int n_fft = 1024;
  int hop = kHop;
  int win_length = 1024;
  int n_mels = 80;
  double fmin = 0.0;
  double fmax = 11025.0;
  double log_floor = 1e-5;

  void validate() const;
  KeyValues to_kv() const;
  static MelConfig from_kv(const KeyValues& kv);
  bool operator==(const MelConfig&) const = default;
};

/// Slaney-style mel scale (linear below 1 kHz, logarithmic above).
double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// [n_mels, n_fft / 2 + 1] triangular filters, area-normalized.
std::vector<float> mel_filterbank(const MelConfig& cfg);
/// Center frequency in Hz of each mel band.
std::vector<double> mel_band_centers(const MelConfig& cfg);

/// Periodic Hann window of win_length, zero-padded to n_fft and centered.
std::vector<double> analysis_window(const MelConfig& cfg);

/// Magnitude STFT, [1, n_fft / 2 + 1, len / hop + 1], computed on the
/// signal reflect-padded by n_fft / 2 on each side.
Tensor stft_magnitude(std::span<const float> samples, const MelConfig& cfg);

/// Natural-log mel spectrogram, [1, n_mels, ceil(len / hop)], floored at
/// log(log_floor).
Tensor mel_spectrogram(std::span<const float> samples, const MelConfig& cfg);
Tensor mel_spectrogram(const AudioClip& clip, const MelConfig& cfg);

/// Number of mel frames for a clip of `samples` samples.
std::int64_t mel_frame_count(std::int64_t samples, const MelConfig& cfg);

}  // namespace melgan

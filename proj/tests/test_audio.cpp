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

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "melgan/audio.hpp"
#include "melgan/errors.hpp"

namespace melgan {
namespace {

std::vector<float> sine(double hz, std::int64_t n, double amp = 0.5, int rate = 22050) {
  std::vector<float> s(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i)
    s[i] = static_cast<float>(amp * std::sin(2.0 * std::numbers::pi * hz * i / rate));
  return s;
}

// Slaney scale written out independently of the library.
double slaney_mel(double hz) {
  return hz < 1000.0 ? 3.0 * hz / 200.0 : 15.0 + 27.0 * std::log(hz / 1000.0) / std::log(6.4);
}
double slaney_hz(double mel) {
  return mel < 15.0 ? 200.0 * mel / 3.0 : 1000.0 * std::exp((mel - 15.0) * std::log(6.4) / 27.0);
}

TEST(Wav, Pcm16RoundTripWithinOneStep) {
  AudioClip clip{sine(440, 1000), 22050};
  clip.samples.push_back(1.0f);
  clip.samples.push_back(-1.0f);
  const AudioClip back = decode_wav(encode_wav(clip));
  ASSERT_EQ(back.sample_rate, 22050);
  ASSERT_EQ(back.samples.size(), clip.samples.size());
  for (std::size_t i = 0; i < clip.samples.size(); ++i)
    EXPECT_NEAR(back.samples[i], clip.samples[i], 1.0 / 32768.0);
}

TEST(Wav, Float32RoundTripExactAndClipped) {
  AudioClip clip{sine(1000, 300, 0.9), 16000};
  clip.samples.push_back(2.5f);
  const AudioClip back = decode_wav(encode_wav(clip, WavEncoding::float32));
  ASSERT_EQ(back.sample_rate, 16000);
  for (std::size_t i = 0; i + 1 < clip.samples.size(); ++i) EXPECT_EQ(back.samples[i], clip.samples[i]);
  EXPECT_EQ(back.samples.back(), 1.0f);
}

TEST(Wav, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "melgan_test_roundtrip.wav";
  const AudioClip clip{sine(220, 512), 22050};
  write_wav(path, clip, WavEncoding::float32);
  EXPECT_EQ(read_wav(path).samples, clip.samples);
  std::filesystem::remove(path);
  EXPECT_THROW(read_wav(path), IoError);
}

TEST(Wav, MalformedInputNamesChunk) {
  auto bytes = encode_wav(AudioClip{sine(440, 64), 22050});
  auto expect_section = [](std::vector<unsigned char> b, const std::string& section) {
    try {
      decode_wav(b);
      ADD_FAILURE() << "expected FormatError in " << section;
    } catch (const FormatError& e) {
      EXPECT_EQ(e.section(), section);
    }
  };
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  expect_section(bad_magic, "RIFF");
  auto truncated = bytes;
  truncated.resize(bytes.size() - 1);
  expect_section(truncated, "data");
  auto bad_codec = bytes;
  bad_codec[20] = 3;  // float codec with 16-bit samples
  bad_codec[21] = 0;
  expect_section(bad_codec, "fmt ");
  expect_section(std::vector<unsigned char>(bytes.begin(), bytes.begin() + 12), "fmt ");
}

TEST(Mel, SilenceIsLogFloorEverywhere) {
  const MelConfig cfg;
  const std::vector<float> silence(22050, 0.0f);
  const Tensor mel = mel_spectrogram(silence, cfg);
  const float floor = static_cast<float>(std::log(cfg.log_floor));
  for (float v : mel.data()) ASSERT_EQ(v, floor);
}

TEST(Mel, FrameCountIsCeilOfHops) {
  const MelConfig cfg;
  for (std::int64_t t : {1, 2, 7, 32}) {
    const Tensor mel = mel_spectrogram(std::vector<float>(256 * t, 0.1f), cfg);
    EXPECT_EQ(mel.shape(), (Shape{1, 80, t}));
    EXPECT_EQ(mel_frame_count(256 * t, cfg), t);
    EXPECT_EQ(mel_frame_count(256 * t + 1, cfg), t + 1);
  }
  EXPECT_EQ(mel_frame_count(8192, cfg), 32);
}

TEST(Mel, BandCentersMatchSlaneyScale) {
  const MelConfig cfg;
  const auto centers = mel_band_centers(cfg);
  ASSERT_EQ(centers.size(), 80u);
  const double lo = slaney_mel(cfg.fmin), hi = slaney_mel(cfg.fmax);
  for (int b = 0; b < 80; ++b)
    EXPECT_NEAR(centers[b], slaney_hz(lo + (hi - lo) * (b + 1) / 81.0), 1e-6 * (1.0 + centers[b]));
  for (double hz : {0.0, 200.0, 999.0, 1000.0, 4000.0, 11025.0}) {
    EXPECT_NEAR(hz_to_mel(hz), slaney_mel(hz), 1e-9);
    EXPECT_NEAR(mel_to_hz(hz_to_mel(hz)), hz, 1e-6);
  }
}

TEST(Mel, ToneLandsInNearestCenterBand) {
  const MelConfig cfg;
  const auto centers = mel_band_centers(cfg);
  for (double hz : {440.0, 300.0, 700.0}) {
    const Tensor mel = mel_spectrogram(sine(hz, 22050), cfg);
    int want = 0;
    for (int b = 1; b < 80; ++b)
      if (std::fabs(centers[b] - hz) < std::fabs(centers[want] - hz)) want = b;
    const std::int64_t frame = mel.shape().time / 2;
    int got = 0;
    for (int b = 1; b < 80; ++b)
      if (mel.at(0, b, frame) > mel.at(0, got, frame)) got = b;
    EXPECT_EQ(got, want) << hz << " Hz";
  }
}

TEST(Mel, FilterbankRowsHaveUnitArea) {
  const MelConfig cfg;
  const auto fb = mel_filterbank(cfg);
  const int bins = cfg.n_fft / 2 + 1;
  ASSERT_EQ(fb.size(), static_cast<std::size_t>(80 * bins));
  // Area normalization: each triangle scaled by 2 / (f_hi - f_lo).
  const double lo = slaney_mel(cfg.fmin), hi = slaney_mel(cfg.fmax);
  for (int b = 0; b < 80; b += 13) {
    const double f_lo = slaney_hz(lo + (hi - lo) * b / 81.0);
    const double f_hi = slaney_hz(lo + (hi - lo) * (b + 2) / 81.0);
    double peak = 0.0;
    for (int k = 0; k < bins; ++k) peak = std::max(peak, double{fb[static_cast<std::size_t>(b * bins + k)]});
    EXPECT_LE(peak, 2.0 / (f_hi - f_lo) + 1e-7);
    EXPECT_GT(peak, 0.0);
  }
}

TEST(Stft, ParsevalForSine) {
  MelConfig cfg;
  const auto s = sine(cfg.sample_rate / 16.0, 4096, 1.0);  // bin-centered tone
  const Tensor mag = stft_magnitude(s, cfg);
  EXPECT_EQ(mag.shape(), (Shape{1, 513, 4096 / 256 + 1}));
  const std::int64_t f = mag.shape().time / 2;
  int peak = 0;
  for (int k = 1; k < 513; ++k)
    if (mag.at(0, k, f) > mag.at(0, peak, f)) peak = k;
  EXPECT_EQ(peak, 64);
  // A periodic Hann window of length N sums to N / 2.
  EXPECT_NEAR(mag.at(0, 64, f), 0.25 * 1024, 1.0);
}

TEST(MelConfig, RoundTripAndValidation) {
  MelConfig cfg;
  cfg.n_mels = 64;
  cfg.fmax = 8000.0;
  EXPECT_EQ(MelConfig::from_kv(cfg.to_kv()), cfg);
  MelConfig bad = cfg;
  bad.hop = 200;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = cfg;
  bad.fmax = 20000.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = cfg;
  bad.log_floor = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_THROW(mel_spectrogram(std::vector<float>{}, cfg), Error);
}

}  // namespace
}  // namespace melgan

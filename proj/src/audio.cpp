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

#include "melgan/audio.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <numbers>

#include "melgan/errors.hpp"

namespace melgan {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

class ByteReader {
 public:
  explicit ByteReader(std::span<const unsigned char> b) : bytes_(b) {}

  bool has(std::size_t n) const { return pos_ + n <= bytes_.size(); }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n, const std::string& section) const {
    if (!has(n))
      throw FormatError(section, "truncated: need " + std::to_string(n) + " bytes, " +
                                     std::to_string(remaining()) + " left");
  }
  std::string tag(const std::string& section) {
    need(4, section);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), 4);
    pos_ += 4;
    return s;
  }
  std::uint32_t u32(const std::string& section) {
    need(4, section);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[pos_ + i];
    pos_ += 4;
    return v;
  }
  std::uint16_t u16(const std::string& section) {
    need(2, section);
    std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::span<const unsigned char> take(std::size_t n, const std::string& section) {
    need(n, section);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  void skip(std::size_t n, const std::string& section) { take(n, section); }

 private:
  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v));
  out.push_back(static_cast<unsigned char>(v >> 8));
}
void put_tag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

// Mirror-reflect index into [0, n) with period 2(n - 1).
std::int64_t reflect_index(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  const std::int64_t period = 2 * (n - 1);
  std::int64_t m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - m;
}

}  // namespace

AudioClip decode_wav(std::span<const unsigned char> bytes) {
  ByteReader r(bytes);
  if (r.tag("RIFF") != "RIFF") throw FormatError("RIFF", "missing RIFF magic");
  r.u32("RIFF");
  if (r.tag("RIFF") != "WAVE") throw FormatError("RIFF", "form type is not WAVE");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  while (r.remaining() > 0) {
    if (r.remaining() < 8) throw FormatError("RIFF", "truncated chunk header");
    const std::string id = r.tag("chunk");
    const std::uint32_t size = r.u32(id);
    if (id == "fmt ") {
      if (size < 16) throw FormatError("fmt ", "chunk shorter than 16 bytes");
      auto body = r.take(size, "fmt ");
      ByteReader f(body);
      format = f.u16("fmt ");
      channels = f.u16("fmt ");
      rate = f.u32("fmt ");
      f.u32("fmt ");
      f.u16("fmt ");
      bits = f.u16("fmt ");
      if (format == kFormatExtensible) {
        if (size < 40) throw FormatError("fmt ", "extensible header shorter than 40 bytes");
        f.skip(8, "fmt ");
        format = f.u16("fmt ");
      }
      have_fmt = true;
      if (size % 2) r.skip(1, "fmt ");
    } else if (id == "data") {
      if (!have_fmt) throw FormatError("data", "data chunk precedes fmt chunk");
      if (channels == 0) throw FormatError("fmt ", "zero channels");
      const bool pcm16 = format == kFormatPcm && bits == 16;
      const bool f32 = format == kFormatFloat && bits == 32;
      if (!pcm16 && !f32)
        throw FormatError("fmt ", "unsupported codec (format " + std::to_string(format) +
                                      ", " + std::to_string(bits) + " bits)");
      auto body = r.take(size, "data");
      const std::size_t frame_bytes = std::size_t{channels} * (bits / 8);
      if (size % frame_bytes != 0) throw FormatError("data", "partial sample frame");
      AudioClip clip;
      clip.sample_rate = static_cast<int>(rate);
      const std::size_t frames = size / frame_bytes;
      clip.samples.resize(frames);
      for (std::size_t i = 0; i < frames; ++i) {
        const unsigned char* p = body.data() + i * frame_bytes;
        if (pcm16) {
          const auto v = static_cast<std::int16_t>(p[0] | (p[1] << 8));
          clip.samples[i] = static_cast<float>(v) / 32768.0f;
        } else {
          std::uint32_t u = 0;
          for (int k = 3; k >= 0; --k) u = (u << 8) | p[k];
          float v;
          std::memcpy(&v, &u, 4);
          clip.samples[i] = std::clamp(v, -1.0f, 1.0f);
        }
      }
      return clip;
    } else {
      r.skip(size + (size % 2), id);
    }
  }
  throw FormatError(have_fmt ? "data" : "fmt ", "chunk not found");
}

AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return decode_wav(bytes);
}

std::vector<unsigned char> encode_wav(const AudioClip& clip, WavEncoding encoding) {
  const bool pcm = encoding == WavEncoding::pcm16;
  const std::uint16_t bits = pcm ? 16 : 32;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(clip.samples.size() * (bits / 8));
  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, pcm ? kFormatPcm : kFormatFloat);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * (bits / 8));
  put_u16(out, bits / 8);
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (float s : clip.samples) {
    const float x = std::isnan(s) ? 0.0f : std::clamp(s, -1.0f, 1.0f);
    if (pcm) {
      const long q = std::lround(double{x} * 32768.0);
      put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(
                       std::clamp<long>(q, -32768, 32767))));
    } else {
      std::uint32_t u;
      std::memcpy(&u, &x, 4);
      put_u32(out, u);
    }
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip,
               WavEncoding encoding) {
  const auto bytes = encode_wav(clip, encoding);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

void MelConfig::validate() const {
  if (hop != kHop) throw ConfigError("mel: hop must be 256, got " + std::to_string(hop));
  if (sample_rate <= 0) throw ConfigError("mel: sample_rate must be positive");
  if (n_fft < 2 || n_fft % 2) throw ConfigError("mel: n_fft must be even and >= 2");
  if (win_length < 1 || win_length > n_fft)
    throw ConfigError("mel: win_length must be in [1, n_fft]");
  if (n_mels < 1) throw ConfigError("mel: n_mels must be >= 1");
  if (!(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate / 2.0))
    throw ConfigError("mel: need 0 <= fmin < fmax <= sample_rate / 2");
  if (!(log_floor > 0.0)) throw ConfigError("mel: log_floor must be positive");
}

KeyValues MelConfig::to_kv() const {
  KeyValues kv;
  kv.set("sample_rate", sample_rate);
  kv.set("n_fft", n_fft);
  kv.set("hop", hop);
  kv.set("win_length", win_length);
  kv.set("n_mels", n_mels);
  kv.set("fmin", fmin);
  kv.set("fmax", fmax);
  kv.set("log_floor", log_floor);
  return kv;
}

MelConfig MelConfig::from_kv(const KeyValues& kv) {
  MelConfig c;
  c.sample_rate = static_cast<int>(kv.get_int("sample_rate"));
  c.n_fft = static_cast<int>(kv.get_int("n_fft"));
  c.hop = static_cast<int>(kv.get_int("hop"));
  c.win_length = static_cast<int>(kv.get_int("win_length"));
  c.n_mels = static_cast<int>(kv.get_int("n_mels"));
  c.fmin = kv.get_double("fmin");
  c.fmax = kv.get_double("fmax");
  c.log_floor = kv.get_double("log_floor");
  c.validate();
  return c;
}

namespace {
constexpr double kMelLinearStep = 200.0 / 3.0;
constexpr double kMelBreakHz = 1000.0;
constexpr double kMelBreak = kMelBreakHz / kMelLinearStep;
const double kMelLogStep = std::log(6.4) / 27.0;
}  // namespace

double hz_to_mel(double hz) {
  if (hz < kMelBreakHz) return hz / kMelLinearStep;
  return kMelBreak + std::log(hz / kMelBreakHz) / kMelLogStep;
}

double mel_to_hz(double mel) {
  if (mel < kMelBreak) return mel * kMelLinearStep;
  return kMelBreakHz * std::exp(kMelLogStep * (mel - kMelBreak));
}

namespace {
std::vector<double> mel_edges(const MelConfig& cfg) {
  const double lo = hz_to_mel(cfg.fmin);
  const double hi = hz_to_mel(cfg.fmax);
  std::vector<double> hz(static_cast<std::size_t>(cfg.n_mels + 2));
  for (std::size_t i = 0; i < hz.size(); ++i)
    hz[i] = mel_to_hz(lo + (hi - lo) * double(i) / double(cfg.n_mels + 1));
  return hz;
}
}  // namespace

std::vector<double> mel_band_centers(const MelConfig& cfg) {
  const auto edges = mel_edges(cfg);
  return {edges.begin() + 1, edges.end() - 1};
}

std::vector<float> mel_filterbank(const MelConfig& cfg) {
  cfg.validate();
  const int bins = cfg.n_fft / 2 + 1;
  const auto hz = mel_edges(cfg);
  std::vector<float> fb(static_cast<std::size_t>(cfg.n_mels) * bins, 0.0f);
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double left = hz[m], center = hz[m + 1], right = hz[m + 2];
    const double norm = 2.0 / (right - left);
    for (int k = 0; k < bins; ++k) {
      const double f = double(k) * cfg.sample_rate / cfg.n_fft;
      const double up = (f - left) / (center - left);
      const double down = (right - f) / (right - center);
      const double w = std::max(0.0, std::min(up, down));
      fb[static_cast<std::size_t>(m) * bins + k] = static_cast<float>(w * norm);
    }
  }
  return fb;
}

std::vector<double> analysis_window(const MelConfig& cfg) {
  std::vector<double> w(static_cast<std::size_t>(cfg.n_fft), 0.0);
  const int offset = (cfg.n_fft - cfg.win_length) / 2;
  for (int i = 0; i < cfg.win_length; ++i)
    w[offset + i] =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * double(i) / double(cfg.win_length));
  return w;
}

Tensor stft_magnitude(std::span<const float> samples, const MelConfig& cfg) {
  cfg.validate();
  if (samples.empty()) throw ShapeError("time", "stft: empty signal");
  const std::int64_t len = static_cast<std::int64_t>(samples.size());
  const std::int64_t frames = len / cfg.hop + 1;
  const int bins = cfg.n_fft / 2 + 1;
  const int half = cfg.n_fft / 2;
  const auto window = analysis_window(cfg);

  Tensor out = Tensor::zeros({1, bins, frames});
  auto mag = out.data();
  Eigen::FFT<double> fft;
  std::vector<double> frame(static_cast<std::size_t>(cfg.n_fft));
  std::vector<std::complex<double>> spectrum;
  for (std::int64_t f = 0; f < frames; ++f) {
    const std::int64_t start = f * cfg.hop - half;
    for (int i = 0; i < cfg.n_fft; ++i)
      frame[i] = window[i] * samples[static_cast<std::size_t>(reflect_index(start + i, len))];
    fft.fwd(spectrum, frame);
    for (int k = 0; k < bins; ++k)
      mag[static_cast<std::size_t>(k * frames + f)] = static_cast<float>(std::abs(spectrum[k]));
  }
  return out;
}

std::int64_t mel_frame_count(std::int64_t samples, const MelConfig& cfg) {
  return (samples + cfg.hop - 1) / cfg.hop;
}

Tensor mel_spectrogram(std::span<const float> samples, const MelConfig& cfg) {
  const Tensor mag = stft_magnitude(samples, cfg);
  const std::int64_t frames = mel_frame_count(static_cast<std::int64_t>(samples.size()), cfg);
  const std::int64_t stft_frames = mag.shape().time;
  const int bins = cfg.n_fft / 2 + 1;
  const auto fb = mel_filterbank(cfg);
  const double floor_log = std::log(cfg.log_floor);
  Tensor mel = Tensor::zeros({1, cfg.n_mels, frames});
  auto pm = mag.data();
  auto out = mel.data();
  for (int m = 0; m < cfg.n_mels; ++m) {
    const float* row = fb.data() + static_cast<std::size_t>(m) * bins;
    for (std::int64_t f = 0; f < frames; ++f) {
      double acc = 0.0;
      for (int k = 0; k < bins; ++k) acc += double{row[k]} * pm[static_cast<std::size_t>(k * stft_frames + f)];
      out[static_cast<std::size_t>(m * frames + f)] =
          static_cast<float>(acc > cfg.log_floor ? std::log(acc) : floor_log);
    }
  }
  return mel;
}

Tensor mel_spectrogram(const AudioClip& clip, const MelConfig& cfg) {
  if (clip.sample_rate != cfg.sample_rate)
    throw ConfigError("mel: clip sample rate " + std::to_string(clip.sample_rate) +
                      " differs from configured " + std::to_string(cfg.sample_rate));
  return mel_spectrogram(std::span<const float>(clip.samples), cfg);
}

}  // namespace melgan

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

#include "melgan/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <unordered_set>

#include "melgan/errors.hpp"

namespace melgan {

bool Checkpoint::contains(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return true;
  return false;
}

const Tensor& Checkpoint::tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw FormatError("tensor_table", "no tensor named '" + name + "'");
}

void Checkpoint::add(const std::string& name, const Tensor& t) {
  if (contains(name)) throw FormatError("tensor_table", "name collision on '" + name + "'");
  tensors.emplace_back(name, t);
}

namespace {

constexpr char kMagic[4] = {'M', 'G', 'K', '1'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename T>
  void uint(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i)
      out_.push_back(static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
  }
  std::vector<unsigned char>& out() { return out_; }

 private:
  std::vector<unsigned char> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const unsigned char> b) : b_(b) {}
  void need(std::size_t n, const std::string& section) const {
    if (b_.size() - pos_ < n)
      throw FormatError(section, "truncated: need " + std::to_string(n) + " bytes, " +
                                     std::to_string(b_.size() - pos_) + " left");
  }
  template <typename T>
  T uint(const std::string& section) {
    need(sizeof(T), section);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= std::uint64_t{b_[pos_ + i]} << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  std::span<const unsigned char> take(std::size_t n, const std::string& section) {
    need(n, section);
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  std::span<const unsigned char> b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic, 4);
  w.uint<std::uint32_t>(kCheckpointVersion);
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(ckpt.tensors.size()));
  std::unordered_set<std::string> seen;
  for (const auto& [name, t] : ckpt.tensors) {
    if (!seen.insert(name).second)
      throw FormatError("tensor_table", "name collision on '" + name + "'");
    if (name.empty() || name.size() > 0xffff)
      throw FormatError("tensor_table", "tensor name length must be 1..65535");
    w.uint<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    w.bytes(name.data(), name.size());
    const Shape s = t.shape();
    w.uint<std::uint8_t>(3);
    w.uint<std::uint64_t>(static_cast<std::uint64_t>(s.batch));
    w.uint<std::uint64_t>(static_cast<std::uint64_t>(s.channels));
    w.uint<std::uint64_t>(static_cast<std::uint64_t>(s.time));
    for (float v : t.data()) w.uint<std::uint32_t>(std::bit_cast<std::uint32_t>(v));
  }
  const std::string meta = ckpt.metadata.str();
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(meta.size()));
  w.bytes(meta.data(), meta.size());
  return std::move(w.out());
}

Checkpoint decode_checkpoint(std::span<const unsigned char> bytes) {
  Reader r(bytes);
  const auto magic = r.take(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), kMagic))
    throw FormatError("magic", "not a checkpoint (bad magic bytes)");
  const auto version = r.uint<std::uint32_t>("version");
  if (version != kCheckpointVersion)
    throw FormatError("version", "unsupported version " + std::to_string(version) +
                                     ", expected " + std::to_string(kCheckpointVersion));
  const auto count = r.uint<std::uint32_t>("tensor_table");
  Checkpoint ckpt;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string section = "tensor[" + std::to_string(i) + "]";
    const auto len = r.uint<std::uint16_t>(section);
    const auto name_bytes = r.take(len, section);
    std::string name(name_bytes.begin(), name_bytes.end());
    const auto ndim = r.uint<std::uint8_t>(section);
    if (ndim < 1 || ndim > 3)
      throw FormatError(section, "tensor '" + name + "' has unsupported rank " +
                                     std::to_string(ndim));
    std::uint64_t dims[3] = {1, 1, 1};
    for (int d = 0; d < ndim; ++d) dims[3 - ndim + d] = r.uint<std::uint64_t>(section);
    if (dims[0] < 1 || dims[1] < 1 || dims[0] > (1ull << 40) || dims[1] > (1ull << 40) ||
        dims[2] > (1ull << 40))
      throw FormatError(section, "tensor '" + name + "' has invalid dimensions");
    const std::uint64_t numel = dims[0] * dims[1] * dims[2];
    if (numel > r.remaining() / 4) r.need(numel * 4, section);
    const auto payload = r.take(static_cast<std::size_t>(numel * 4), section);
    std::vector<float> values(static_cast<std::size_t>(numel));
    for (std::size_t j = 0; j < values.size(); ++j) {
      std::uint32_t u = 0;
      for (int b = 0; b < 4; ++b) u |= std::uint32_t{payload[4 * j + b]} << (8 * b);
      values[j] = std::bit_cast<float>(u);
    }
    if (ckpt.contains(name)) throw FormatError(section, "name collision on '" + name + "'");
    ckpt.tensors.emplace_back(
        std::move(name),
        Tensor::from({static_cast<std::int64_t>(dims[0]), static_cast<std::int64_t>(dims[1]),
                      static_cast<std::int64_t>(dims[2])},
                     std::move(values)));
  }
  const auto meta_len = r.uint<std::uint32_t>("metadata");
  const auto meta = r.take(meta_len, "metadata");
  try {
    ckpt.metadata = KeyValues::parse(std::string(meta.begin(), meta.end()));
  } catch (const ConfigError& e) {
    throw FormatError("metadata", e.what());
  }
  if (r.remaining() != 0)
    throw FormatError("metadata", std::to_string(r.remaining()) + " trailing bytes");
  return ckpt;
}

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const unsigned char> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("error writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move checkpoint into '" + path.string() + "'");
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_bytes(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file_bytes(path));
}

}  // namespace melgan

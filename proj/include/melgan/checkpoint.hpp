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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "melgan/kv_config.hpp"
#include "melgan/tensor.hpp"

namespace melgan {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Ordered named tensors plus a key=value metadata block.
///
/// On disk: "MGK1", u32 version, u32 tensor count, then per tensor a u16
/// name length, the UTF-8 name, u8 ndim (always 3), u64 dims and the
/// little-endian float32 payload; finally u32 metadata length and the
/// metadata text. All integers are little-endian.
struct Checkpoint {
  std::vector<std::pair<std::string, Tensor>> tensors;
  KeyValues metadata;

  bool contains(const std::string& name) const;
  // Throws FormatError("tensor_table") when absent.
  const Tensor& tensor(const std::string& name) const;
  // Throws FormatError("tensor_table") on a duplicate name.
  void add(const std::string& name, const Tensor& t);
};

std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt);
// Parses the whole buffer before returning; trailing bytes are an error.
Checkpoint decode_checkpoint(std::span<const unsigned char> bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path);
// Writes through a temporary sibling and renames it into place.
void write_file_bytes(const std::filesystem::path& path, std::span<const unsigned char> bytes);

}  // namespace melgan

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
#include <map>
#include <string>
#include <vector>

namespace melgan {

/// Flat `key=value` text, one pair per line, keys sorted on output.
/// Floats are written in shortest round-trip form so a value read back
/// is bit-identical to the one written.
class KeyValues {
 public:
  static KeyValues parse(const std::string& text);
  static KeyValues read_file(const std::filesystem::path& path);

  std::string str() const;
  void write_file(const std::filesystem::path& path) const;

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& entries() const { return values_; }

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, std::int64_t value);
  void set(const std::string& key, int value) { set(key, std::int64_t{value}); }
  void set(const std::string& key, std::uint64_t value);
  void set(const std::string& key, double value);
  void set(const std::string& key, float value);
  void set(const std::string& key, const std::vector<int>& values);

  // Getters throw ConfigError on a missing key or unparsable value.
  const std::string& get(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  double get_double(const std::string& key) const;
  float get_float(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;

  // Keys starting with `prefix`, with the prefix removed.
  KeyValues with_prefix_removed(const std::string& prefix) const;
  void merge(const KeyValues& other, const std::string& prefix);

  bool operator==(const KeyValues&) const = default;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace melgan

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

#include "melgan/kv_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "melgan/errors.hpp"

namespace melgan {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last)
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  return value;
}

template <typename T>
std::string format_number(T value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

}  // namespace

KeyValues KeyValues::parse(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (kv.contains(key)) throw ConfigError("config key '" + key + "' repeated");
    kv.values_[key] = trim(t.substr(eq + 1));
  }
  return kv;
}

KeyValues KeyValues::read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string KeyValues::str() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

void KeyValues::write_file(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write config file " + path.string());
  out << str();
  if (!out) throw IoError("short write to " + path.string());
}

void KeyValues::set(const std::string& key, const std::string& value) {
  if (key.find_first_of("=\n") != std::string::npos || value.find('\n') != std::string::npos)
    throw ConfigError("config key '" + key + "' or its value contains a reserved character");
  values_[key] = value;
}
void KeyValues::set(const std::string& key, std::int64_t value) { set(key, format_number(value)); }
void KeyValues::set(const std::string& key, std::uint64_t value) { set(key, format_number(value)); }
void KeyValues::set(const std::string& key, double value) { set(key, format_number(value)); }
void KeyValues::set(const std::string& key, float value) { set(key, format_number(value)); }

void KeyValues::set(const std::string& key, const std::vector<int>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(values[i]);
  }
  set(key, s);
}

const std::string& KeyValues::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("config key '" + key + "' missing");
  return it->second;
}

std::int64_t KeyValues::get_int(const std::string& key) const {
  return parse_number<std::int64_t>(key, get(key));
}
std::uint64_t KeyValues::get_uint(const std::string& key) const {
  return parse_number<std::uint64_t>(key, get(key));
}
double KeyValues::get_double(const std::string& key) const {
  return parse_number<double>(key, get(key));
}
float KeyValues::get_float(const std::string& key) const {
  return parse_number<float>(key, get(key));
}

std::vector<int> KeyValues::get_int_list(const std::string& key) const {
  std::vector<int> out;
  const std::string& s = get(key);
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(static_cast<int>(
        parse_number<std::int64_t>(key, trim(s.substr(start, comma - start)))));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

KeyValues KeyValues::with_prefix_removed(const std::string& prefix) const {
  KeyValues kv;
  for (const auto& [k, v] : values_)
    if (k.rfind(prefix, 0) == 0) kv.values_[k.substr(prefix.size())] = v;
  return kv;
}

void KeyValues::merge(const KeyValues& other, const std::string& prefix) {
  for (const auto& [k, v] : other.values_) values_[prefix + k] = v;
}

}  // namespace melgan

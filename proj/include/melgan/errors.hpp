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

#include <stdexcept>
#include <string>

namespace melgan {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape disagreement between operands; `axis()` is one of
// "batch", "channels", "time", "kernel" or "groups".
class ShapeError : public Error {
 public:
  ShapeError(std::string axis, const std::string& message)
      : Error("shape error on axis '" + axis + "': " + message),
        axis_(std::move(axis)) {}
  const std::string& axis() const noexcept { return axis_; }

 private:
  std::string axis_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed file content. `section()` names the WAV chunk or checkpoint
// section where decoding stopped.
class FormatError : public Error {
 public:
  FormatError(std::string section, const std::string& message)
      : Error("format error in '" + section + "': " + message),
        section_(std::move(section)) {}
  const std::string& section() const noexcept { return section_; }

 private:
  std::string section_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  NumericError(std::string tensor, const std::string& message)
      : Error("non-finite value in '" + tensor + "': " + message),
        tensor_(std::move(tensor)) {}
  const std::string& tensor() const noexcept { return tensor_; }

 private:
  std::string tensor_;
};

}  // namespace melgan

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

#include <ostream>
#include <string>
#include <vector>

namespace melgan::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitValidation = 3;

/// Runs one command line (args[0] is the program name). Results go to
/// `out`; failures print a single "melgan: error: <kind>: <message>" line
/// to `err` and return the matching exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// `requested` workers (all hardware threads when <= 0), capped by the
/// MELGAN_THREADS environment variable when it is set.
int resolve_threads(int requested);

}  // namespace melgan::cli

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
#include <string>
#include <utility>
#include <vector>

namespace melgan {

/// Per-model opinion-score summary with a normal-approximation 95%
/// interval: halfwidth = 1.96 * sd / sqrt(n).
struct MosSummary {
  std::string model;
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample (n - 1) standard deviation; 0 when n == 1
  double halfwidth = 0.0;

  // "3.61 ± 0.06" style, with `digits` decimals.
  std::string format(int digits = 2) const;
};

inline constexpr double kZ95 = 1.96;

MosSummary summarize_scores(const std::string& model, const std::vector<double>& scores);

/// Groups (model, score) rows by model in first-appearance order.
std::vector<MosSummary> aggregate_mos(const std::vector<std::pair<std::string, double>>& rows);

/// Parses "model,score" lines. A first line whose score field is not a
/// number is taken as a header. Blank lines are skipped. Throws
/// FormatError("row N") on malformed rows.
std::vector<std::pair<std::string, double>> parse_scores_csv(const std::string& text);
std::vector<std::pair<std::string, double>> read_scores_csv(const std::filesystem::path& path);

}  // namespace melgan

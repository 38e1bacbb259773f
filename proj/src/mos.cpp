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

#include "melgan/mos.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "melgan/errors.hpp"

namespace melgan {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  std::size_t used = 0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == s.size();
}

}  // namespace

std::string MosSummary::format(int digits) const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.*f ± %.*f", digits, mean, digits, halfwidth);
  return buf;
}

MosSummary summarize_scores(const std::string& model, const std::vector<double>& scores) {
  if (scores.empty()) throw ConfigError("mos: model '" + model + "' has no scores");
  MosSummary s;
  s.model = model;
  s.n = scores.size();
  double sum = 0.0;
  for (double v : scores) {
    if (!std::isfinite(v)) throw ConfigError("mos: non-finite score for '" + model + "'");
    sum += v;
  }
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : scores) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  s.halfwidth = kZ95 * s.sd / std::sqrt(static_cast<double>(s.n));
  return s;
}

std::vector<MosSummary> aggregate_mos(const std::vector<std::pair<std::string, double>>& rows) {
  if (rows.empty()) throw ConfigError("mos: no score rows");
  std::vector<std::string> order;
  std::vector<std::vector<double>> groups;
  for (const auto& [model, score] : rows) {
    std::size_t i = 0;
    while (i < order.size() && order[i] != model) ++i;
    if (i == order.size()) {
      order.push_back(model);
      groups.emplace_back();
    }
    groups[i].push_back(score);
  }
  std::vector<MosSummary> out;
  for (std::size_t i = 0; i < order.size(); ++i)
    out.push_back(summarize_scores(order[i], groups[i]));
  return out;
}

std::vector<std::pair<std::string, double>> parse_scores_csv(const std::string& text) {
  std::vector<std::pair<std::string, double>> rows;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    const std::string row = "row " + std::to_string(lineno);
    if (comma == std::string::npos) throw FormatError(row, "expected 'model,score'");
    const std::string model = trim(line.substr(0, comma));
    double score = 0.0;
    if (!parse_double(trim(line.substr(comma + 1)), score)) {
      if (first) {
        first = false;
        continue;
      }
      throw FormatError(row, "score is not a number");
    }
    first = false;
    if (model.empty()) throw FormatError(row, "empty model name");
    rows.emplace_back(model, score);
  }
  return rows;
}

std::vector<std::pair<std::string, double>> read_scores_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_scores_csv(ss.str());
}

}  // namespace melgan

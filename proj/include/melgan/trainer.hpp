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
#include <functional>
#include <optional>
#include <string>

#include "melgan/arch.hpp"
#include "melgan/audio.hpp"
#include "melgan/checkpoint.hpp"
#include "melgan/dataset.hpp"
#include "melgan/optim.hpp"

namespace melgan {

struct TrainConfig {
  GeneratorConfig gen;
  DiscriminatorConfig disc;
  MelConfig mel;
  AdamConfig adam;  // shared by generator and discriminator
  float lambda_fm = 10.0f;
  int batch_size = 16;
  std::int64_t window_samples = 8192;
  std::uint64_t seed = 0;

  // Checks the pairing of the three configs: the generator must upsample
  // by the mel hop, consume n_mels channels, and windows must be whole
  // frames long enough for every discriminator scale.
  void validate() const;
  // Flat key=value form with "gen.", "disc.", "mel." and "train." prefixes.
  KeyValues to_kv() const;
  static TrainConfig from_kv(const KeyValues& kv);
};

struct StepMetrics {
  std::int64_t step = 0;  // 1-based index of the finished step
  double d_loss = 0.0;
  double g_adv = 0.0;
  double g_fm = 0.0;
  double wall_ms = 0.0;
};

inline constexpr const char* kMetricsHeader = "step,d_loss,g_adv,g_fm,wall_ms";
std::string metrics_csv_row(const StepMetrics& m);

/// Generator, discriminator and both optimizer states. Each step runs one
/// discriminator update followed by one generator update.
class Trainer {
 public:
  explicit Trainer(TrainConfig cfg);
  // Rebuilds the exact training position stored by checkpoint().
  static Trainer from_checkpoint(const Checkpoint& ckpt);

  // audio: [batch, 1, window]. Mels are computed from the same windows.
  StepMetrics train_step(const Tensor& audio);
  StepMetrics train_step(const Tensor& audio, const Tensor& mel);

  Checkpoint checkpoint() const;

  std::int64_t step() const { return step_; }
  const TrainConfig& config() const { return cfg_; }
  const Generator& generator() const { return gen_; }
  const Discriminator& discriminator() const { return disc_; }
  Generator& generator() { return gen_; }
  Discriminator& discriminator() { return disc_; }

 private:
  TrainConfig cfg_;
  Generator gen_;
  Discriminator disc_;
  std::vector<Tensor> gen_params_;
  std::vector<Tensor> disc_params_;
  AdamState gen_opt_;
  AdamState disc_opt_;
  std::int64_t step_ = 0;
};

/// Mel features for every item of an audio batch: [batch, n_mels, frames].
Tensor batch_mel(const Tensor& audio, const MelConfig& cfg);

/// Generator-only checkpoint contents (parameters and configs).
Checkpoint generator_checkpoint(const Generator& gen, const MelConfig& mel);
/// Loads the generator from a trainer or generator-only checkpoint.
Generator load_generator(const Checkpoint& ckpt);
MelConfig load_mel_config(const Checkpoint& ckpt);

struct RunOptions {
  std::int64_t steps = 0;                   // total steps to reach
  std::filesystem::path out_dir;            // checkpoints and metrics.csv
  std::int64_t checkpoint_every = 0;        // 0: only the final checkpoint
  std::function<void(const StepMetrics&)> on_step;
};

/// Trains until trainer.step() == opts.steps, appending one metrics row
/// per step to out_dir/metrics.csv and writing out_dir/checkpoint.mgk
/// (plus step-numbered copies every checkpoint_every steps).
void run_training(Trainer& trainer, const WindowDataset& data, const RunOptions& opts);

}  // namespace melgan

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

#include "melgan/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "melgan/errors.hpp"
#include "melgan/losses.hpp"
#include "melgan/ops.hpp"

namespace melgan {

void TrainConfig::validate() const {
  gen.validate();
  disc.validate();
  mel.validate();
  if (gen.hop() != mel.hop)
    throw ConfigError("train: generator upsamples by " + std::to_string(gen.hop()) +
                      " but the mel hop is " + std::to_string(mel.hop));
  if (gen.mel_channels != mel.n_mels)
    throw ConfigError("train: generator expects " + std::to_string(gen.mel_channels) +
                      " mel channels but the frontend produces " + std::to_string(mel.n_mels));
  if (window_samples < 1 || window_samples % mel.hop != 0)
    throw ConfigError("train: window_samples must be a positive multiple of " +
                      std::to_string(mel.hop));
  if (window_samples < disc.min_input_length())
    throw ConfigError("train: window_samples " + std::to_string(window_samples) +
                      " is shorter than the discriminator minimum " +
                      std::to_string(disc.min_input_length()));
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(lambda_fm >= 0.0f)) throw ConfigError("train: lambda_fm must be >= 0");
  if (!(adam.lr > 0.0f)) throw ConfigError("train: lr must be positive");
  if (!(adam.beta1 >= 0.0f && adam.beta1 < 1.0f) || !(adam.beta2 >= 0.0f && adam.beta2 < 1.0f))
    throw ConfigError("train: Adam betas must be in [0, 1)");
  if (!(adam.eps > 0.0f)) throw ConfigError("train: Adam eps must be positive");
}

KeyValues TrainConfig::to_kv() const {
  KeyValues kv;
  kv.merge(gen.to_kv(), "gen.");
  kv.merge(disc.to_kv(), "disc.");
  kv.merge(mel.to_kv(), "mel.");
  kv.set("train.lambda_fm", lambda_fm);
  kv.set("train.batch_size", batch_size);
  kv.set("train.window_samples", window_samples);
  kv.set("train.seed", seed);
  kv.set("train.lr", adam.lr);
  kv.set("train.beta1", adam.beta1);
  kv.set("train.beta2", adam.beta2);
  kv.set("train.eps", adam.eps);
  return kv;
}

TrainConfig TrainConfig::from_kv(const KeyValues& kv) {
  TrainConfig c;
  c.gen = GeneratorConfig::from_kv(kv.with_prefix_removed("gen."));
  c.disc = DiscriminatorConfig::from_kv(kv.with_prefix_removed("disc."));
  c.mel = MelConfig::from_kv(kv.with_prefix_removed("mel."));
  c.lambda_fm = kv.get_float("train.lambda_fm");
  c.batch_size = static_cast<int>(kv.get_int("train.batch_size"));
  c.window_samples = kv.get_int("train.window_samples");
  c.seed = kv.get_uint("train.seed");
  c.adam.lr = kv.get_float("train.lr");
  c.adam.beta1 = kv.get_float("train.beta1");
  c.adam.beta2 = kv.get_float("train.beta2");
  c.adam.eps = kv.get_float("train.eps");
  c.validate();
  return c;
}

std::string metrics_csv_row(const StepMetrics& m) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%lld,%.9g,%.9g,%.9g,%.3f", static_cast<long long>(m.step),
                m.d_loss, m.g_adv, m.g_fm, m.wall_ms);
  return buf;
}

namespace {

using Named = std::vector<std::pair<std::string, Tensor>>;

bool all_finite(const Tensor& t) {
  for (float v : t.data())
    if (!std::isfinite(v)) return false;
  return true;
}

[[noreturn]] void report_non_finite(const Named& tensors, const std::string& loss,
                                    std::int64_t step) {
  for (const auto& [name, t] : tensors)
    if (t.defined() && !all_finite(t))
      throw NumericError(name, "first non-finite tensor while computing " + loss + " at step " +
                                   std::to_string(step));
  throw NumericError(loss, "loss is non-finite at step " + std::to_string(step));
}

void append_outputs(Named& list, const std::vector<ScaleOutput>& outs, const char* tag) {
  for (std::size_t k = 0; k < outs.size(); ++k)
    for (std::size_t i = 0; i < outs[k].features.size(); ++i)
      list.emplace_back("disc" + std::to_string(k) + ".layer" + std::to_string(i) + "(" + tag + ")",
                        outs[k].features[i]);
}

void append_params(Named& list, const ModelParams& params) {
  for (auto& nt : params.named_tensors()) list.push_back(std::move(nt));
}

// Restores discriminator gradient tracking when the generator update ends.
class FreezeGuard {
 public:
  explicit FreezeGuard(ModelParams& p) : p_(p) { p_.set_requires_grad(false); }
  ~FreezeGuard() { p_.set_requires_grad(true); }
  FreezeGuard(const FreezeGuard&) = delete;
  FreezeGuard& operator=(const FreezeGuard&) = delete;

 private:
  ModelParams& p_;
};

void copy_into(Tensor& dst, const Tensor& src, const std::string& name) {
  if (dst.shape() != src.shape())
    throw FormatError("tensor_table", "tensor '" + name + "' has shape " + src.shape().str() +
                                          ", expected " + dst.shape().str());
  std::copy(src.data().begin(), src.data().end(), dst.data().begin());
}

void load_params(ModelParams& params, const Checkpoint& ckpt) {
  for (auto& [name, t] : params.named_tensors()) copy_into(t, ckpt.tensor(name), name);
}

void store_adam(Checkpoint& ckpt, const std::string& prefix, const ModelParams& params,
                const AdamState& st) {
  const auto named = params.named_tensors();
  for (std::size_t i = 0; i < named.size(); ++i) {
    const Shape s = named[i].second.shape();
    ckpt.add(prefix + ".m." + named[i].first, Tensor::from(s, st.m[i]));
    ckpt.add(prefix + ".v." + named[i].first, Tensor::from(s, st.v[i]));
  }
  ckpt.metadata.set(prefix + ".step", st.step);
}

void load_adam(const Checkpoint& ckpt, const std::string& prefix, const ModelParams& params,
               AdamState& st) {
  const auto named = params.named_tensors();
  for (std::size_t i = 0; i < named.size(); ++i) {
    const std::string m = prefix + ".m." + named[i].first;
    const std::string v = prefix + ".v." + named[i].first;
    const Tensor& tm = ckpt.tensor(m);
    const Tensor& tv = ckpt.tensor(v);
    if (tm.numel() != named[i].second.numel() || tv.numel() != named[i].second.numel())
      throw FormatError("tensor_table", "optimizer moment size mismatch for '" + named[i].first + "'");
    st.m[i].assign(tm.data().begin(), tm.data().end());
    st.v[i].assign(tv.data().begin(), tv.data().end());
  }
  st.step = ckpt.metadata.get_int(prefix + ".step");
}

}  // namespace

Tensor batch_mel(const Tensor& audio, const MelConfig& cfg) {
  const Shape s = audio.shape();
  if (s.channels != 1)
    throw ShapeError("channels", "batch_mel: expected mono audio, got " + s.str());
  Graph none(false);
  std::vector<Tensor> mels;
  for (std::int64_t b = 0; b < s.batch; ++b) {
    const auto item = audio.data().subspan(static_cast<std::size_t>(b * s.time),
                                           static_cast<std::size_t>(s.time));
    mels.push_back(mel_spectrogram(item, cfg));
  }
  return concat_batch(none, mels);
}

Trainer::Trainer(TrainConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  gen_ = build_generator(cfg_.gen, 2 * cfg_.seed);
  disc_ = build_discriminator(cfg_.disc, 2 * cfg_.seed + 1);
  gen_params_ = gen_.params.tensors();
  disc_params_ = disc_.params.tensors();
  gen_opt_ = AdamState::for_params(gen_params_);
  disc_opt_ = AdamState::for_params(disc_params_);
}

Trainer Trainer::from_checkpoint(const Checkpoint& ckpt) {
  Trainer t(TrainConfig::from_kv(ckpt.metadata));
  load_params(t.gen_.params, ckpt);
  load_params(t.disc_.params, ckpt);
  load_adam(ckpt, "adam.gen", t.gen_.params, t.gen_opt_);
  load_adam(ckpt, "adam.disc", t.disc_.params, t.disc_opt_);
  t.step_ = ckpt.metadata.get_int("train.step");
  return t;
}

StepMetrics Trainer::train_step(const Tensor& audio) {
  return train_step(audio, batch_mel(audio, cfg_.mel));
}

StepMetrics Trainer::train_step(const Tensor& audio, const Tensor& mel) {
  const auto t0 = std::chrono::steady_clock::now();
  const Shape as = audio.shape();
  if (as.channels != 1) throw ShapeError("channels", "train_step: audio must be mono");
  if (mel.shape().batch != as.batch)
    throw ShapeError("batch", "train_step: audio batch " + std::to_string(as.batch) +
                                  " vs mel batch " + std::to_string(mel.shape().batch));
  if (mel.shape().time * gen_.config.hop() != as.time)
    throw ShapeError("time", "train_step: " + std::to_string(mel.shape().time) +
                                 " mel frames do not cover " + std::to_string(as.time) +
                                 " samples");
  const std::int64_t batch = as.batch;
  const std::int64_t step_no = step_ + 1;

  // One generator forward serves both updates: the discriminator update
  // leaves the generator untouched, so a second forward would be identical.
  Graph g_graph;
  const Tensor fake = generator_forward(g_graph, gen_, mel);
  if (!all_finite(fake)) {
    Named list{{"audio", audio}, {"mel", mel}};
    append_params(list, gen_.params);
    list.emplace_back("fake_audio", fake);
    report_non_finite(list, "generator output", step_no);
  }

  // Discriminator update on [real; fake] with the generator path cut.
  Graph d_graph;
  const Tensor both = concat_batch(d_graph, {audio, fake.detach()});
  const auto d_outs = discriminator_forward(d_graph, disc_, both);
  std::vector<Tensor> real_scores, fake_scores;
  for (const auto& o : d_outs) {
    real_scores.push_back(slice_batch(d_graph, o.score, 0, batch));
    fake_scores.push_back(slice_batch(d_graph, o.score, batch, batch));
  }
  Tensor d_loss = discriminator_loss(d_graph, real_scores, fake_scores);
  if (!std::isfinite(d_loss.item())) {
    Named list{{"audio", audio}, {"mel", mel}};
    append_params(list, gen_.params);
    list.emplace_back("fake_audio", fake);
    append_params(list, disc_.params);
    append_outputs(list, d_outs, "real+fake");
    report_non_finite(list, "d_loss", step_no);
  }
  zero_grads(disc_params_);
  backward(d_graph, d_loss);
  adam_step(disc_params_, disc_opt_, cfg_.adam);

  // Generator update against the refreshed discriminator; real and fake
  // features both come from the updated weights.
  StepMetrics m;
  {
    FreezeGuard freeze(disc_.params);
    Graph none(false);
    const auto r_outs = discriminator_forward(none, disc_, audio);
    const auto f_outs = discriminator_forward(g_graph, disc_, fake);
    Tensor adv = generator_adversarial_loss(g_graph, scores_of(f_outs));
    Tensor fm = feature_matching_loss(g_graph, features_of(r_outs, true), features_of(f_outs));
    Tensor total = generator_total_loss(g_graph, adv, fm, cfg_.lambda_fm);
    if (!std::isfinite(total.item())) {
      Named list{{"audio", audio}, {"mel", mel}};
      append_params(list, gen_.params);
      list.emplace_back("fake_audio", fake);
      append_params(list, disc_.params);
      append_outputs(list, f_outs, "fake");
      list.emplace_back("g_adv", adv);
      list.emplace_back("g_fm", fm);
      report_non_finite(list, "g_total", step_no);
    }
    zero_grads(gen_params_);
    backward(g_graph, total);
    adam_step(gen_params_, gen_opt_, cfg_.adam);
    m.g_adv = adv.item();
    m.g_fm = fm.item();
  }

  step_ = step_no;
  m.step = step_no;
  m.d_loss = d_loss.item();
  m.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return m;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint ckpt;
  for (const auto& [name, t] : gen_.params.named_tensors()) ckpt.add(name, t);
  for (const auto& [name, t] : disc_.params.named_tensors()) ckpt.add(name, t);
  store_adam(ckpt, "adam.gen", gen_.params, gen_opt_);
  store_adam(ckpt, "adam.disc", disc_.params, disc_opt_);
  ckpt.metadata.merge(cfg_.to_kv(), "");
  ckpt.metadata.set("format", std::string("trainer"));
  ckpt.metadata.set("train.step", step_);
  return ckpt;
}

Checkpoint generator_checkpoint(const Generator& gen, const MelConfig& mel) {
  Checkpoint ckpt;
  for (const auto& [name, t] : gen.params.named_tensors()) ckpt.add(name, t);
  ckpt.metadata.merge(gen.config.to_kv(), "gen.");
  ckpt.metadata.merge(mel.to_kv(), "mel.");
  ckpt.metadata.set("format", std::string("generator"));
  return ckpt;
}

Generator load_generator(const Checkpoint& ckpt) {
  Generator gen = build_generator(GeneratorConfig::from_kv(ckpt.metadata.with_prefix_removed("gen.")));
  load_params(gen.params, ckpt);
  return gen;
}

MelConfig load_mel_config(const Checkpoint& ckpt) {
  return MelConfig::from_kv(ckpt.metadata.with_prefix_removed("mel."));
}

void run_training(Trainer& trainer, const WindowDataset& data, const RunOptions& opts) {
  const auto& cfg = trainer.config();
  if (data.window_samples() != cfg.window_samples)
    throw ConfigError("run_training: dataset windows are " + std::to_string(data.window_samples()) +
                      " samples, config expects " + std::to_string(cfg.window_samples));
  if (opts.steps < trainer.step())
    throw ConfigError("run_training: checkpoint is already at step " +
                      std::to_string(trainer.step()));
  std::error_code ec;
  std::filesystem::create_directories(opts.out_dir, ec);
  if (ec) throw IoError("cannot create '" + opts.out_dir.string() + "'");

  // Keep the rows up to the resume point so the file mirrors one run.
  const auto metrics_path = opts.out_dir / "metrics.csv";
  std::vector<std::string> kept{kMetricsHeader};
  if (trainer.step() > 0) {
    std::ifstream in(metrics_path);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      const auto comma = line.find(',');
      if (comma == std::string::npos) continue;
      if (std::stoll(line.substr(0, comma)) <= trainer.step()) kept.push_back(line);
    }
  }
  std::ofstream metrics(metrics_path, std::ios::trunc);
  if (!metrics) throw IoError("cannot write '" + metrics_path.string() + "'");
  for (const auto& l : kept) metrics << l << '\n';
  metrics.flush();

  const auto save = [&] {
    const auto ckpt = trainer.checkpoint();
    save_checkpoint(opts.out_dir / "checkpoint.mgk", ckpt);
    if (opts.checkpoint_every > 0 && trainer.step() % opts.checkpoint_every == 0)
      save_checkpoint(opts.out_dir / ("checkpoint_" + std::to_string(trainer.step()) + ".mgk"), ckpt);
  };
  while (trainer.step() < opts.steps) {
    const Tensor audio = data.batch(static_cast<std::uint64_t>(trainer.step()), cfg.batch_size);
    const StepMetrics m = trainer.train_step(audio);
    metrics << metrics_csv_row(m) << '\n';
    metrics.flush();
    if (opts.on_step) opts.on_step(m);
    if (opts.checkpoint_every > 0 && trainer.step() % opts.checkpoint_every == 0) save();
  }
  if (opts.checkpoint_every <= 0 || trainer.step() % opts.checkpoint_every != 0) save();
}

}  // namespace melgan

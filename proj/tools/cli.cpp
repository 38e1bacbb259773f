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

#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "melgan/arch.hpp"
#include "melgan/audio.hpp"
#include "melgan/checkpoint.hpp"
#include "melgan/errors.hpp"
#include "melgan/inference.hpp"
#include "melgan/kernels.hpp"
#include "melgan/mos.hpp"
#include "melgan/trainer.hpp"

namespace melgan::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// Thrown for command-level validation failures (exit code 3).
class ValidationFailure : public Error {
 public:
  using Error::Error;
};

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

KeyValues overlay(KeyValues base, const std::string& path) {
  if (!path.empty()) base.merge(KeyValues::read_file(path), "");
  return base;
}

GeneratorConfig generator_config_from(const std::string& path) {
  KeyValues kv;
  kv.merge(GeneratorConfig{}.to_kv(), "gen.");
  kv = overlay(kv, path);
  return GeneratorConfig::from_kv(kv.with_prefix_removed("gen."));
}

Checkpoint mel_file(const Tensor& mel, const MelConfig& cfg) {
  Checkpoint c;
  c.add("mel", mel);
  c.metadata.set("format", std::string("mel"));
  c.metadata.merge(cfg.to_kv(), "mel.");
  return c;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::string data, out, config;
  std::int64_t steps = 0;
  std::uint64_t seed = 0;
  int batch = 16;
  float lr = 1e-4f, beta1 = 0.5f, beta2 = 0.9f, lambda_fm = 10.0f;
  std::int64_t window = 8192;
  std::int64_t checkpoint_every = 0;
  bool resume = false, quiet = false;
  int threads = 0;
};

int cmd_train(const TrainArgs& a, CLI::App* sub, bool as_json, std::ostream& out) {
  kernels::set_num_threads(resolve_threads(a.threads));
  const fs::path ckpt_path = fs::path(a.out) / "checkpoint.mgk";
  std::unique_ptr<Trainer> trainer;
  bool resumed = false;
  if (a.resume && fs::exists(ckpt_path)) {
    trainer = std::make_unique<Trainer>(Trainer::from_checkpoint(load_checkpoint(ckpt_path)));
    resumed = true;
  } else {
    TrainConfig cfg;
    if (!a.config.empty()) cfg = TrainConfig::from_kv(overlay(cfg.to_kv(), a.config));
    auto set = [&](const char* flag) { return sub->count(flag) > 0; };
    if (set("--seed")) cfg.seed = a.seed;
    if (set("--batch")) cfg.batch_size = a.batch;
    if (set("--lr")) cfg.adam.lr = a.lr;
    if (set("--beta1")) cfg.adam.beta1 = a.beta1;
    if (set("--beta2")) cfg.adam.beta2 = a.beta2;
    if (set("--lambda-fm")) cfg.lambda_fm = a.lambda_fm;
    if (set("--window")) cfg.window_samples = a.window;
    cfg.validate();
    trainer = std::make_unique<Trainer>(cfg);
  }
  const TrainConfig& cfg = trainer->config();
  const auto data =
      WindowDataset::from_directory(a.data, cfg.window_samples, cfg.seed, cfg.mel.sample_rate);

  if (as_json) {
    json h;
    h["command"] = "train";
    h["lr"] = cfg.adam.lr;
    h["beta1"] = cfg.adam.beta1;
    h["beta2"] = cfg.adam.beta2;
    h["batch"] = cfg.batch_size;
    h["lambda_fm"] = cfg.lambda_fm;
    h["window"] = cfg.window_samples;
    h["seed"] = cfg.seed;
    h["steps"] = a.steps;
    h["start_step"] = trainer->step();
    h["clips"] = data.clip_count();
    out << h.dump() << '\n';
  } else {
    out << "train: lr=" << fmt_g(cfg.adam.lr) << " beta1=" << fmt_g(cfg.adam.beta1)
        << " beta2=" << fmt_g(cfg.adam.beta2) << " batch=" << cfg.batch_size
        << " lambda_fm=" << fmt_g(cfg.lambda_fm) << " window=" << cfg.window_samples
        << " seed=" << cfg.seed << " steps=" << a.steps << " clips=" << data.clip_count()
        << (resumed ? " resumed_at=" + std::to_string(trainer->step()) : std::string())
        << '\n';
    if (!a.quiet) out << kMetricsHeader << '\n';
  }
  RunOptions opts;
  opts.steps = a.steps;
  opts.out_dir = a.out;
  opts.checkpoint_every = a.checkpoint_every;
  if (!a.quiet && !as_json)
    opts.on_step = [&out](const StepMetrics& m) { out << metrics_csv_row(m) << std::endl; };
  run_training(*trainer, data, opts);
  if (as_json) {
    json r;
    r["final_step"] = trainer->step();
    r["checkpoint"] = ckpt_path.string();
    r["metrics"] = (fs::path(a.out) / "metrics.csv").string();
    out << r.dump() << '\n';
  } else {
    out << "checkpoint: " << ckpt_path.string() << '\n';
  }
  return kExitOk;
}

// ---- synth / mel ----------------------------------------------------------

int cmd_synth(const std::string& ckpt_file, const std::string& mel_path,
              const std::string& wav_path, const std::string& out_path, int threads,
              bool as_json, std::ostream& out) {
  kernels::set_num_threads(resolve_threads(threads));
  if (!fs::exists(ckpt_file)) throw IoError("checkpoint '" + ckpt_file + "' does not exist");
  const Checkpoint ckpt = load_checkpoint(ckpt_file);
  const Generator gen = load_generator(ckpt);
  const MelConfig mel_cfg = load_mel_config(ckpt);

  Tensor mel;
  if (!wav_path.empty()) {
    const AudioClip clip = read_wav(wav_path);
    if (clip.sample_rate != mel_cfg.sample_rate)
      throw ValidationFailure("input is " + std::to_string(clip.sample_rate) +
                              " Hz but the checkpoint expects " +
                              std::to_string(mel_cfg.sample_rate) + " Hz");
    mel = mel_spectrogram(clip, mel_cfg);
  } else {
    const Checkpoint mf = load_checkpoint(mel_path);
    const MelConfig given = MelConfig::from_kv(mf.metadata.with_prefix_removed("mel."));
    if (!(given == mel_cfg))
      throw ValidationFailure("mel settings of '" + mel_path +
                              "' differ from the checkpoint's mel settings");
    mel = mf.tensor("mel");
  }
  if (mel.shape().channels != gen.config.mel_channels)
    throw ValidationFailure("mel has " + std::to_string(mel.shape().channels) +
                            " bands, generator expects " +
                            std::to_string(gen.config.mel_channels));
  auto compiled = CompiledGenerator::compile(gen, mel.shape().time);
  const AudioClip audio = compiled.synthesize(mel, mel_cfg.sample_rate);
  write_wav(out_path, audio);
  if (as_json) {
    json r;
    r["frames"] = mel.shape().time;
    r["samples"] = audio.samples.size();
    r["sample_rate"] = audio.sample_rate;
    r["out"] = out_path;
    out << r.dump() << '\n';
  } else {
    out << "wrote " << audio.samples.size() << " samples (" << mel.shape().time
        << " frames) to " << out_path << '\n';
  }
  return kExitOk;
}

int cmd_mel(const std::string& wav_path, const std::string& out_path,
            const std::string& config, bool as_json, std::ostream& out) {
  KeyValues kv;
  kv.merge(MelConfig{}.to_kv(), "mel.");
  kv = overlay(kv, config);
  const MelConfig cfg = MelConfig::from_kv(kv.with_prefix_removed("mel."));
  const AudioClip clip = read_wav(wav_path);
  if (clip.sample_rate != cfg.sample_rate)
    throw ValidationFailure("input is " + std::to_string(clip.sample_rate) +
                            " Hz but the mel settings expect " +
                            std::to_string(cfg.sample_rate) + " Hz");
  const Tensor mel = mel_spectrogram(clip, cfg);
  save_checkpoint(out_path, mel_file(mel, cfg));
  if (as_json) {
    json r;
    r["n_mels"] = mel.shape().channels;
    r["frames"] = mel.shape().time;
    r["samples"] = clip.samples.size();
    r["out"] = out_path;
    out << r.dump() << '\n';
  } else {
    out << "wrote " << mel.shape().channels << " x " << mel.shape().time << " mel to "
        << out_path << '\n';
  }
  return kExitOk;
}

// ---- bench ----------------------------------------------------------------

int cmd_bench(const std::string& ckpt_file, std::int64_t frames, int repeats, int warmup,
              int threads, bool as_json, std::ostream& out) {
  const Generator gen = ckpt_file.empty() ? build_generator(GeneratorConfig{})
                                          : load_generator(load_checkpoint(ckpt_file));
  const int n = resolve_threads(threads);
  kernels::set_num_threads(n);
  const auto compiled = CompiledGenerator::compile(gen, frames);
  const BenchReport r = benchmark(compiled, frames, repeats, n, warmup);
  if (as_json)
    out << r.to_json() << '\n';
  else
    out << r.to_table();
  return kExitOk;
}

// ---- validate-arch / count-params -------------------------------------------

int cmd_validate_arch(const GeneratorConfig& cfg, bool as_json, std::ostream& out) {
  const ArchReport rep = validate_checkerboard_free(cfg);
  if (as_json) {
    json r;
    r["passed"] = rep.passed();
    r["violations"] = json::array();
    for (const auto& v : rep.violations)
      r["violations"].push_back({{"location", v.location}, {"rule", v.rule}, {"detail", v.detail}});
    out << r.dump(2) << '\n';
  } else {
    out << (rep.passed() ? "PASS" : "FAIL") << '\n';
    for (const auto& v : rep.violations)
      out << "  " << v.location << ": " << v.rule << " (" << v.detail << ")\n";
  }
  return rep.passed() ? kExitOk : kExitValidation;
}

int cmd_count_params(const GeneratorConfig& gcfg, bool as_json, std::ostream& out) {
  const Generator gen = build_generator(gcfg);
  const Discriminator disc = build_discriminator(DiscriminatorConfig{});
  const std::int64_t g = count_parameters(gen.params);
  const std::int64_t d = count_parameters(disc.params);
  if (as_json) {
    json r;
    r["generator"] = {{"parameters", g},
                      {"mel_channels", gcfg.mel_channels},
                      {"residual_shortcut", to_string(gcfg.shortcut)},
                      {"norm", to_string(gcfg.norm)}};
    r["discriminator"] = {{"parameters", d}, {"scales", disc.config.num_scales}};
    out << r.dump(2) << '\n';
  } else {
    char buf[160];
    std::snprintf(buf, sizeof buf, "generator      %10lld  (%.2fM)\ndiscriminator  %10lld  (%.2fM)\n",
                  static_cast<long long>(g), g / 1e6, static_cast<long long>(d), d / 1e6);
    out << buf;
  }
  return kExitOk;
}

// ---- mos-ci ---------------------------------------------------------------

int cmd_mos_ci(const std::string& path, int digits, bool as_json, std::ostream& out) {
  const auto summaries = aggregate_mos(read_scores_csv(path));
  if (as_json) {
    json r;
    r["models"] = json::array();
    for (const auto& s : summaries)
      r["models"].push_back({{"model", s.model},
                             {"n", s.n},
                             {"mean", s.mean},
                             {"sd", s.sd},
                             {"halfwidth", s.halfwidth},
                             {"formatted", s.format(digits)}});
    out << r.dump(2) << '\n';
  } else {
    std::size_t w = 5;
    for (const auto& s : summaries) w = std::max(w, s.model.size());
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-*s  %5s  %s\n", static_cast<int>(w), "model", "n", "MOS");
    out << buf;
    for (const auto& s : summaries) {
      std::snprintf(buf, sizeof buf, "%-*s  %5zu  %s\n", static_cast<int>(w), s.model.c_str(),
                    s.n, s.format(digits).c_str());
      out << buf;
    }
  }
  return kExitOk;
}

void print_error(std::ostream& err, const char* kind, const std::string& what) {
  std::string msg = what;
  std::replace(msg.begin(), msg.end(), '\n', ' ');
  err << "melgan: error: " << kind << ": " << msg << std::endl;
}

}  // namespace

int resolve_threads(int requested) {
  int cap = 0;
  if (const char* env = std::getenv("MELGAN_THREADS")) {
    try {
      cap = std::stoi(env);
    } catch (const std::exception&) {
      cap = 0;
    }
  }
  int n = requested > 0 ? requested
                        : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (cap > 0) n = std::min(n, cap);
  return std::max(1, n);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"MelGAN vocoder: training, synthesis and benchmarking", "melgan"};
  app.require_subcommand(1);
  bool as_json = false;
  app.add_flag("--json", as_json, "Emit JSON instead of tables");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train on a directory of WAV files");
  train->add_option("--data", ta.data, "Directory of .wav clips")->required();
  train->add_option("--out", ta.out, "Output directory (checkpoints, metrics.csv)")->required();
  train->add_option("--steps", ta.steps, "Total steps to reach")->required()->check(CLI::NonNegativeNumber);
  train->add_option("--seed", ta.seed, "Seed for init and data order")->capture_default_str();
  train->add_option("--batch", ta.batch, "Batch size")->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--lr", ta.lr, "Adam learning rate")->capture_default_str();
  train->add_option("--beta1", ta.beta1, "Adam beta1")->capture_default_str();
  train->add_option("--beta2", ta.beta2, "Adam beta2")->capture_default_str();
  train->add_option("--lambda-fm", ta.lambda_fm, "Feature-matching weight")->capture_default_str();
  train->add_option("--window", ta.window, "Training window in samples")->capture_default_str();
  train->add_option("--checkpoint-every", ta.checkpoint_every, "Also keep checkpoint_<step>.mgk every N steps");
  train->add_option("--config", ta.config, "key=value file overriding defaults");
  train->add_option("--threads", ta.threads, "Worker threads (0: all, capped by MELGAN_THREADS)");
  train->add_flag("--resume", ta.resume, "Continue from <out>/checkpoint.mgk when present");
  train->add_flag("--quiet", ta.quiet, "Do not print per-step metrics");

  std::string s_ckpt, s_mel, s_wav, s_out;
  int s_threads = 0;
  auto* synth = app.add_subcommand("synth", "Invert a mel spectrogram (or a WAV's mel) to audio");
  synth->add_option("--ckpt", s_ckpt, "Trainer or generator checkpoint")->required();
  auto* s_mel_opt = synth->add_option("--mel", s_mel, "Mel file written by 'melgan mel'");
  auto* s_wav_opt = synth->add_option("--wav", s_wav, "WAV for analysis-synthesis");
  s_mel_opt->excludes(s_wav_opt);
  synth->add_option("--out", s_out, "Output WAV (PCM-16)")->required();
  synth->add_option("--threads", s_threads, "Worker threads");

  std::string m_wav, m_out, m_config;
  auto* mel = app.add_subcommand("mel", "Extract a log-mel spectrogram");
  mel->add_option("--wav", m_wav, "Input WAV")->required();
  mel->add_option("--out", m_out, "Output mel file")->required();
  mel->add_option("--config", m_config, "key=value file with mel.* overrides");

  std::string b_ckpt;
  std::int64_t b_frames = 64;
  int b_repeats = 5, b_warmup = 1, b_threads = 1;
  auto* bench = app.add_subcommand("bench", "Measure synthesis throughput");
  bench->add_option("--ckpt", b_ckpt, "Generator checkpoint (default: random init)");
  bench->add_option("--frames", b_frames, "Mel frames per call")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--repeats", b_repeats, "Timed repeats (>= 3)")->capture_default_str()->check(CLI::Range(3, 1000000));
  bench->add_option("--warmup", b_warmup, "Warmup runs (>= 1)")->capture_default_str()->check(CLI::Range(1, 1000000));
  bench->add_option("--threads", b_threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  std::string v_config;
  std::vector<int> v_ratios, v_kernels, v_dilations;
  int v_res_kernel = 0;
  auto* validate = app.add_subcommand("validate-arch", "Check the generator for checkerboard-prone layers");
  validate->add_option("--config", v_config, "key=value file with gen.* overrides");
  validate->add_option("--ratios", v_ratios, "Upsampling ratios")->delimiter(',');
  validate->add_option("--kernels", v_kernels, "Transposed-conv kernels")->delimiter(',');
  validate->add_option("--dilations", v_dilations, "Residual dilations")->delimiter(',');
  validate->add_option("--resblock-kernel", v_res_kernel, "Residual kernel size");

  std::string c_config, c_shortcut;
  int c_mels = 0;
  auto* count = app.add_subcommand("count-params", "Count trainable parameters");
  count->add_option("--config", c_config, "key=value file with gen.* overrides");
  count->add_option("--n-mels", c_mels, "Mel channels")->check(CLI::PositiveNumber);
  count->add_option("--shortcut", c_shortcut, "Residual shortcut")
      ->check(CLI::IsMember({"conv1x1", "identity"}));

  std::string q_scores;
  int q_digits = 2;
  auto* mos = app.add_subcommand("mos-ci", "Mean opinion scores with 95% intervals");
  mos->add_option("--scores", q_scores, "CSV of model,score rows")->required();
  mos->add_option("--digits", q_digits, "Decimals in the formatted column")->capture_default_str()->check(CLI::Range(0, 6));

  for (auto* sub : {train, synth, mel, bench, validate, count, mos})
    sub->add_flag("--json", as_json, "Emit JSON instead of tables");

  std::vector<std::string> rev(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rev.begin(), rev.end());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    print_error(err, "usage", e.what());
    return kExitUsage;
  }

  try {
    if (*train) return cmd_train(ta, train, as_json, out);
    if (*synth) {
      if (s_mel.empty() == s_wav.empty())
        throw CLI::ValidationError("synth", "exactly one of --mel or --wav is required");
      return cmd_synth(s_ckpt, s_mel, s_wav, s_out, s_threads, as_json, out);
    }
    if (*mel) return cmd_mel(m_wav, m_out, m_config, as_json, out);
    if (*bench) return cmd_bench(b_ckpt, b_frames, b_repeats, b_warmup, b_threads, as_json, out);
    if (*validate) {
      KeyValues kv;
      kv.merge(GeneratorConfig{}.to_kv(), "gen.");
      kv = overlay(kv, v_config);
      GeneratorConfig cfg = GeneratorConfig::from_kv(kv.with_prefix_removed("gen."));
      if (!v_ratios.empty()) cfg.upsample_ratios = v_ratios;
      if (!v_kernels.empty()) cfg.upsample_kernels = v_kernels;
      if (!v_dilations.empty()) cfg.resblock_dilations = v_dilations;
      if (v_res_kernel > 0) cfg.resblock_kernel = v_res_kernel;
      return cmd_validate_arch(cfg, as_json, out);
    }
    if (*count) {
      GeneratorConfig cfg = generator_config_from(c_config);
      if (c_mels > 0) cfg.mel_channels = c_mels;
      if (!c_shortcut.empty())
        cfg.shortcut = c_shortcut == "identity" ? ResidualShortcut::identity
                                                : ResidualShortcut::conv1x1;
      return cmd_count_params(cfg, as_json, out);
    }
    if (*mos) return cmd_mos_ci(q_scores, q_digits, as_json, out);
  } catch (const CLI::ParseError& e) {
    print_error(err, "usage", e.what());
    return kExitUsage;
  } catch (const IoError& e) {
    print_error(err, "io", e.what());
    return kExitIo;
  } catch (const FormatError& e) {
    print_error(err, "io", e.what());
    return kExitIo;
  } catch (const Error& e) {
    print_error(err, "validation", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    print_error(err, "internal", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace melgan::cli

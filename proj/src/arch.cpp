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

#include "melgan/arch.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "melgan/errors.hpp"

namespace melgan {

std::string to_string(Norm n) {
  switch (n) {
    case Norm::weight: return "weight";
    case Norm::spectral: return "spectral";
    case Norm::none: return "none";
  }
  return "weight";
}

std::string to_string(ResidualShortcut s) {
  return s == ResidualShortcut::identity ? "identity" : "conv1x1";
}

std::string to_string(InitScheme s) { return s == InitScheme::normal ? "normal" : "fan_in"; }

namespace {

InitScheme init_from_string(const std::string& s) {
  if (s == "normal") return InitScheme::normal;
  if (s == "fan_in") return InitScheme::fan_in;
  throw ConfigError("unknown init scheme '" + s + "'");
}

Norm norm_from_string(const std::string& s) {
  if (s == "weight") return Norm::weight;
  if (s == "spectral") return Norm::spectral;
  if (s == "none") return Norm::none;
  throw ConfigError("unknown norm '" + s + "'");
}

ResidualShortcut shortcut_from_string(const std::string& s) {
  if (s == "conv1x1") return ResidualShortcut::conv1x1;
  if (s == "identity") return ResidualShortcut::identity;
  throw ConfigError("unknown residual shortcut '" + s + "'");
}

}  // namespace

int GeneratorConfig::upsample_kernel(int stage) const {
  if (!upsample_kernels.empty()) return upsample_kernels.at(static_cast<std::size_t>(stage));
  return 2 * upsample_ratios.at(static_cast<std::size_t>(stage));
}

int GeneratorConfig::stage_width(int stage) const { return base_width >> (stage + 1); }

std::int64_t GeneratorConfig::hop() const {
  std::int64_t h = 1;
  for (int r : upsample_ratios) h *= r;
  return h;
}

void GeneratorConfig::validate() const {
  if (mel_channels < 1) throw ConfigError("generator: mel_channels must be >= 1");
  if (upsample_ratios.empty()) throw ConfigError("generator: no upsampling stages");
  if (!upsample_kernels.empty() && upsample_kernels.size() != upsample_ratios.size())
    throw ConfigError("generator: upsample_kernels and upsample_ratios differ in length");
  if (stages() > 30 || base_width < (1 << stages()) || base_width % (1 << stages()) != 0)
    throw ConfigError("generator: base_width must be divisible by 2^stages");
  for (int i = 0; i < stages(); ++i) {
    const int r = upsample_ratios[i];
    const int k = upsample_kernel(i);
    if (r < 1) throw ConfigError("generator: upsample ratio must be >= 1");
    if (k < r) throw ConfigError("generator: stage " + std::to_string(i) +
                                 " kernel is shorter than its stride");
    if ((k - r) % 2 != 0)
      throw ConfigError("generator: stage " + std::to_string(i) + " ratio " +
                        std::to_string(r) + " with kernel " + std::to_string(k) +
                        " makes the transposed-conv padding fractional");
  }
  if (resblock_kernel < 1 || resblock_kernel % 2 == 0)
    throw ConfigError("generator: resblock_kernel must be odd");
  for (int d : resblock_dilations)
    if (d < 1) throw ConfigError("generator: dilations must be >= 1");
  if (io_kernel < 1 || io_kernel % 2 == 0)
    throw ConfigError("generator: io_kernel must be odd");
  if (!(leaky_slope > 0.0f && leaky_slope < 1.0f))
    throw ConfigError("generator: leaky_slope must be in (0, 1)");
  if (!(init_std > 0.0f)) throw ConfigError("generator: init_std must be positive");
}

KeyValues GeneratorConfig::to_kv() const {
  KeyValues kv;
  kv.set("mel_channels", mel_channels);
  kv.set("base_width", base_width);
  kv.set("upsample_ratios", upsample_ratios);
  kv.set("upsample_kernels", upsample_kernels);
  kv.set("resblock_kernel", resblock_kernel);
  kv.set("resblock_dilations", resblock_dilations);
  kv.set("io_kernel", io_kernel);
  kv.set("leaky_slope", leaky_slope);
  kv.set("residual_shortcut", to_string(shortcut));
  kv.set("norm", to_string(norm));
  kv.set("init", to_string(init));
  kv.set("init_std", init_std);
  return kv;
}

GeneratorConfig GeneratorConfig::from_kv(const KeyValues& kv) {
  GeneratorConfig c;
  c.mel_channels = static_cast<int>(kv.get_int("mel_channels"));
  c.base_width = static_cast<int>(kv.get_int("base_width"));
  c.upsample_ratios = kv.get_int_list("upsample_ratios");
  if (kv.contains("upsample_kernels")) c.upsample_kernels = kv.get_int_list("upsample_kernels");
  c.resblock_kernel = static_cast<int>(kv.get_int("resblock_kernel"));
  c.resblock_dilations = kv.get_int_list("resblock_dilations");
  if (kv.contains("io_kernel")) c.io_kernel = static_cast<int>(kv.get_int("io_kernel"));
  c.leaky_slope = kv.get_float("leaky_slope");
  if (kv.contains("residual_shortcut"))
    c.shortcut = shortcut_from_string(kv.get("residual_shortcut"));
  if (kv.contains("norm")) c.norm = norm_from_string(kv.get("norm"));
  if (kv.contains("init")) c.init = init_from_string(kv.get("init"));
  if (kv.contains("init_std")) c.init_std = kv.get_float("init_std");
  c.validate();
  return c;
}

std::int64_t DiscriminatorConfig::block_stride() const {
  std::int64_t s = 1;
  for (const auto& l : layers) s *= l.stride;
  return s;
}

std::int64_t DiscriminatorConfig::min_input_length() const {
  std::int64_t len = block_stride();
  for (int k = 1; k < num_scales; ++k) len *= pool_stride;
  return len;
}

void DiscriminatorConfig::validate() const {
  if (num_scales < 1) throw ConfigError("discriminator: num_scales must be >= 1");
  if (pool_kernel < 1 || pool_stride < 1 || pool_padding < 0 || pool_padding >= pool_kernel)
    throw ConfigError("discriminator: invalid pooling geometry");
  if (layers.empty()) throw ConfigError("discriminator: no layers");
  int in = 1;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const std::string where = "discriminator layer " + std::to_string(i);
    if (l.out_channels < 1 || l.kernel < 1 || l.stride < 1 || l.groups < 1)
      throw ConfigError(where + ": fields must be >= 1");
    if (in % l.groups != 0 || l.out_channels % l.groups != 0)
      throw ConfigError(where + ": channels not divisible by groups");
    in = l.out_channels;
  }
  if (!(leaky_slope > 0.0f && leaky_slope < 1.0f))
    throw ConfigError("discriminator: leaky_slope must be in (0, 1)");
  if (!(init_std > 0.0f)) throw ConfigError("discriminator: init_std must be positive");
}

KeyValues DiscriminatorConfig::to_kv() const {
  KeyValues kv;
  kv.set("num_scales", num_scales);
  kv.set("pool_kernel", pool_kernel);
  kv.set("pool_stride", pool_stride);
  kv.set("pool_padding", pool_padding);
  std::string spec;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (i) spec += ',';
    spec += std::to_string(l.out_channels) + ":" + std::to_string(l.kernel) + ":" +
            std::to_string(l.stride) + ":" + std::to_string(l.groups);
  }
  kv.set("layers", spec);
  kv.set("leaky_slope", leaky_slope);
  kv.set("norm", to_string(norm));
  kv.set("init", to_string(init));
  kv.set("init_std", init_std);
  return kv;
}

DiscriminatorConfig DiscriminatorConfig::from_kv(const KeyValues& kv) {
  DiscriminatorConfig c;
  c.num_scales = static_cast<int>(kv.get_int("num_scales"));
  c.pool_kernel = static_cast<int>(kv.get_int("pool_kernel"));
  c.pool_stride = static_cast<int>(kv.get_int("pool_stride"));
  c.pool_padding = static_cast<int>(kv.get_int("pool_padding"));
  c.layers.clear();
  std::istringstream in(kv.get("layers"));
  std::string item;
  while (std::getline(in, item, ',')) {
    DiscLayerSpec l{};
    char c1 = 0, c2 = 0, c3 = 0;
    std::istringstream f(item);
    if (!(f >> l.out_channels >> c1 >> l.kernel >> c2 >> l.stride >> c3 >> l.groups) ||
        c1 != ':' || c2 != ':' || c3 != ':')
      throw ConfigError("discriminator: cannot parse layer '" + item + "'");
    c.layers.push_back(l);
  }
  c.leaky_slope = kv.get_float("leaky_slope");
  if (kv.contains("norm")) c.norm = norm_from_string(kv.get("norm"));
  if (kv.contains("init")) c.init = init_from_string(kv.get("init"));
  if (kv.contains("init_std")) c.init_std = kv.get_float("init_std");
  c.validate();
  return c;
}

Tensor Layer::weight(Graph& graph) const {
  switch (norm) {
    case Norm::weight: return weight_norm(graph, v, g, spec.output_axis());
    case Norm::spectral: return spectral_normalize(graph, v);
    case Norm::none: return v;
  }
  return v;
}

std::vector<std::pair<std::string, Tensor>> Layer::named_tensors() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.emplace_back(name + ".v", v);
  if (g.defined()) out.emplace_back(name + ".g", g);
  if (bias.defined()) out.emplace_back(name + ".bias", bias);
  return out;
}

const Layer& ModelParams::layer(const std::string& name) const {
  for (const auto& l : layers)
    if (l.name == name) return l;
  throw Error("no layer named '" + name + "'");
}

std::vector<Tensor> ModelParams::tensors() const {
  std::vector<Tensor> out;
  for (const auto& [name, t] : named_tensors()) out.push_back(t);
  return out;
}

std::vector<std::pair<std::string, Tensor>> ModelParams::named_tensors() const {
  std::vector<std::pair<std::string, Tensor>> out;
  for (const auto& l : layers) {
    auto part = l.named_tensors();
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

void ModelParams::set_requires_grad(bool on) {
  for (auto& l : layers) {
    l.v.set_requires_grad(on);
    if (l.g.defined()) l.g.set_requires_grad(on);
    if (l.bias.defined()) l.bias.set_requires_grad(on);
  }
}

std::int64_t count_parameters(const ModelParams& params) {
  std::int64_t n = 0;
  for (const auto& [name, t] : params.named_tensors()) n += t.numel();
  return n;
}

namespace {

struct Init {
  InitScheme scheme;
  float std;
};

Layer make_layer(std::string name, const ConvSpec& spec, Norm norm, Init init,
                 std::mt19937_64& rng) {
  spec.validate();
  Layer l;
  l.name = std::move(name);
  l.spec = spec;
  l.norm = norm;
  const Shape ws = spec.weight_shape();
  const float bound = 1.0f / std::sqrt(static_cast<float>(ws.channels * ws.time));
  std::normal_distribution<float> normal(0.0f, init.std);
  std::uniform_real_distribution<float> uniform(-bound, bound);
  auto draw = [&] { return init.scheme == InitScheme::normal ? normal(rng) : uniform(rng); };
  std::vector<float> v(static_cast<std::size_t>(ws.numel()));
  for (float& x : v) x = draw();
  l.v = Tensor::from(ws, std::move(v), true);
  const std::int64_t out = spec.out_channels;
  if (norm == Norm::weight) {
    // g = ||v|| per output channel, so the initial weight equals v.
    std::vector<double> sq(static_cast<std::size_t>(out), 0.0);
    const int axis = spec.output_axis();
    auto pv = l.v.data();
    for (std::int64_t a = 0; a < ws.batch; ++a)
      for (std::int64_t b = 0; b < ws.channels; ++b)
        for (std::int64_t k = 0; k < ws.time; ++k) {
          const float x = pv[static_cast<std::size_t>((a * ws.channels + b) * ws.time + k)];
          sq[static_cast<std::size_t>(axis == 0 ? a : b)] += double{x} * x;
        }
    std::vector<float> gain(sq.size());
    for (std::size_t i = 0; i < sq.size(); ++i) gain[i] = static_cast<float>(std::sqrt(sq[i]));
    l.g = Tensor::from({1, out, 1}, std::move(gain), true);
  }
  std::vector<float> b(static_cast<std::size_t>(out), 0.0f);
  if (init.scheme == InitScheme::fan_in)
    for (float& x : b) x = uniform(rng);
  l.bias = Tensor::from({1, out, 1}, std::move(b), true);
  return l;
}

ConvSpec conv(int in, int out, int kernel, int stride = 1, int dilation = 1, int groups = 1,
              int padding = 0, PaddingMode mode = PaddingMode::zeros) {
  ConvSpec s;
  s.in_channels = in;
  s.out_channels = out;
  s.kernel_size = kernel;
  s.stride = stride;
  s.dilation = dilation;
  s.groups = groups;
  s.padding = padding;
  s.padding_mode = mode;
  return s;
}

std::string res_name(int stage, std::size_t block, const char* part) {
  return "gen.res" + std::to_string(stage) + "." + std::to_string(block) + "." + part;
}

}  // namespace

Generator build_generator(const GeneratorConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  Generator gen;
  gen.config = cfg;
  auto& layers = gen.params.layers;
  const Init sd{cfg.init, cfg.init_std};
  layers.push_back(make_layer("gen.conv_in",
                              conv(cfg.mel_channels, cfg.base_width, cfg.io_kernel, 1, 1, 1,
                                   cfg.io_kernel / 2, PaddingMode::reflect),
                              cfg.norm, sd, rng));
  int width = cfg.base_width;
  for (int i = 0; i < cfg.stages(); ++i) {
    const int r = cfg.upsample_ratios[i];
    const int k = cfg.upsample_kernel(i);
    ConvSpec up = conv(width, width / 2, k, r, 1, 1, (k - r) / 2);
    up.transposed = true;
    layers.push_back(make_layer("gen.up" + std::to_string(i), up, cfg.norm, sd, rng));
    width /= 2;
    for (std::size_t j = 0; j < cfg.resblock_dilations.size(); ++j) {
      const int d = cfg.resblock_dilations[j];
      layers.push_back(make_layer(res_name(i, j, "dilated"),
                                  conv(width, width, cfg.resblock_kernel, 1, d, 1,
                                       d * (cfg.resblock_kernel - 1) / 2, PaddingMode::reflect),
                                  cfg.norm, sd, rng));
      layers.push_back(
          make_layer(res_name(i, j, "pointwise"), conv(width, width, 1), cfg.norm, sd, rng));
      if (cfg.shortcut == ResidualShortcut::conv1x1)
        layers.push_back(
            make_layer(res_name(i, j, "shortcut"), conv(width, width, 1), cfg.norm, sd, rng));
    }
  }
  layers.push_back(make_layer(
      "gen.conv_out",
      conv(width, 1, cfg.io_kernel, 1, 1, 1, cfg.io_kernel / 2, PaddingMode::reflect),
      cfg.norm, sd, rng));
  return gen;
}

Discriminator build_discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  Discriminator disc;
  disc.config = cfg;
  for (int k = 0; k < cfg.num_scales; ++k) {
    int in = 1;
    for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
      const auto& l = cfg.layers[i];
      disc.params.layers.push_back(make_layer(
          "disc" + std::to_string(k) + ".layer" + std::to_string(i),
          conv(in, l.out_channels, l.kernel, l.stride, 1, l.groups, l.kernel / 2), cfg.norm,
          Init{cfg.init, cfg.init_std}, rng));
      in = l.out_channels;
    }
  }
  return disc;
}

namespace {

Tensor apply(Graph& graph, const Layer& layer, const Tensor& x) {
  const Tensor w = layer.weight(graph);
  if (layer.spec.transposed) return conv_transpose1d(graph, x, w, layer.bias, layer.spec);
  return conv1d(graph, x, w, layer.bias, layer.spec);
}

}  // namespace

Tensor generator_forward(Graph& graph, const Generator& gen, const Tensor& mel) {
  const auto& cfg = gen.config;
  if (mel.shape().channels != cfg.mel_channels)
    throw ShapeError("channels", "generator: mel has " + std::to_string(mel.shape().channels) +
                                     " channels, expected " + std::to_string(cfg.mel_channels));
  if (mel.shape().time < 1) throw ShapeError("time", "generator: empty mel");
  const auto& layers = gen.params.layers;
  std::size_t next = 0;
  auto take = [&]() -> const Layer& { return layers.at(next++); };
  const float slope = cfg.leaky_slope;

  Tensor x = apply(graph, take(), mel);
  for (int i = 0; i < cfg.stages(); ++i) {
    x = apply(graph, take(), leaky_relu(graph, x, slope));
    for (std::size_t j = 0; j < cfg.resblock_dilations.size(); ++j) {
      Tensor h = apply(graph, take(), leaky_relu(graph, x, slope));
      h = apply(graph, take(), leaky_relu(graph, h, slope));
      const Tensor skip =
          cfg.shortcut == ResidualShortcut::conv1x1 ? apply(graph, take(), x) : x;
      x = add(graph, skip, h);
    }
  }
  x = apply(graph, take(), leaky_relu(graph, x, slope));
  return tanh(graph, x);
}

std::vector<ScaleOutput> discriminator_forward(Graph& graph, const Discriminator& disc,
                                               const Tensor& audio) {
  const auto& cfg = disc.config;
  if (audio.shape().channels != 1)
    throw ShapeError("channels", "discriminator: expected 1-channel audio, got " +
                                     std::to_string(audio.shape().channels));
  if (audio.shape().time < cfg.min_input_length())
    throw ShapeError("time", "discriminator: input of " + std::to_string(audio.shape().time) +
                                 " samples is shorter than the minimum " +
                                 std::to_string(cfg.min_input_length()));
  std::vector<ScaleOutput> out;
  Tensor x = audio;
  const std::size_t per_block = cfg.layers.size();
  for (int k = 0; k < cfg.num_scales; ++k) {
    if (k > 0) x = avg_pool1d(graph, x, cfg.pool_kernel, cfg.pool_stride, cfg.pool_padding);
    ScaleOutput so;
    Tensor h = x;
    for (std::size_t i = 0; i < per_block; ++i) {
      h = apply(graph, disc.params.layers[k * per_block + i], h);
      if (i + 1 < per_block) h = leaky_relu(graph, h, cfg.leaky_slope);
      so.features.push_back(h);
    }
    so.score = h;
    out.push_back(std::move(so));
  }
  return out;
}

std::int64_t receptive_field(int kernel, const std::vector<int>& dilations) {
  if (kernel < 1 || kernel % 2 == 0)
    throw ConfigError("receptive_field: kernel must be odd, got " + std::to_string(kernel));
  std::int64_t rf = 1;
  for (int d : dilations) rf += std::int64_t{kernel - 1} * d;
  return rf;
}

ArchReport validate_checkerboard_free(const GeneratorConfig& cfg) {
  ArchReport report;
  for (int i = 0; i < cfg.stages(); ++i) {
    const int stride = cfg.upsample_ratios[i];
    const int kernel = (cfg.upsample_kernels.empty() ||
                        static_cast<std::size_t>(i) >= cfg.upsample_kernels.size())
                           ? 2 * stride
                           : cfg.upsample_kernels[i];
    if (stride < 1 || kernel % stride != 0)
      report.violations.push_back({"upsample[" + std::to_string(i) + "]",
                                   "kernel not multiple of stride",
                                   "kernel " + std::to_string(kernel) + ", stride " +
                                       std::to_string(stride)});
  }
  std::int64_t expected = 1;
  for (std::size_t j = 0; j < cfg.resblock_dilations.size(); ++j) {
    if (cfg.resblock_dilations[j] != expected)
      report.violations.push_back({"resblock[" + std::to_string(j) + "]",
                                   "dilation not power of kernel",
                                   "dilation " + std::to_string(cfg.resblock_dilations[j]) +
                                       ", expected " + std::to_string(cfg.resblock_kernel) +
                                       "^" + std::to_string(j) + " = " +
                                       std::to_string(expected)});
    expected *= cfg.resblock_kernel;
  }
  return report;
}

}  // namespace melgan

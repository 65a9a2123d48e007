// Copyright 2026 The boxsal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "boxsal/predictor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace boxsal {

namespace kn = boxsal::kernels;

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

struct LayerIndex {
  int stages;
  int enc_a(int k) const { return 2 * k; }
  int enc_b(int k) const { return 2 * k + 1; }
  int lat(int k) const { return 2 * stages + k; }
  int dec(int k) const { return 3 * stages + (stages - 1 - k); }
  int head() const { return 4 * stages; }
};

kn::ConvShape conv_shape(const LayerSpec& l, int kernel, int h, int w) {
  return {l.in_channels, l.out_channels, h, w, kernel, l.stride};
}

// Mirror index into [0, n) with period 2(n-1); degenerates to 0 for n == 1.
int mirror(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  const int m = i % period;
  return m < n ? m : period - m;
}

std::span<double> weights_of(std::vector<double>& p, const LayerSpec& l,
                             int kernel) {
  return {p.data() + l.weight_offset, l.weight_count(kernel)};
}
std::span<double> bias_of(std::vector<double>& p, const LayerSpec& l) {
  return {p.data() + l.bias_offset, static_cast<std::size_t>(l.out_channels)};
}

}  // namespace

void PredictorConfig::validate() const {
  if (stages < 2) throw ConfigError("predictor: stages must be >= 2");
  if (static_cast<int>(stage_channels.size()) != stages) {
    throw ConfigError("predictor: stage_channels must list one count per stage");
  }
  for (int c : stage_channels) {
    if (c < 1) throw ConfigError("predictor: stage channel counts must be >= 1");
  }
  if (lateral_channels < 1) {
    throw ConfigError("predictor: lateral_channels must be >= 1");
  }
  if (kernel_size < 1 || kernel_size % 2 == 0) {
    throw ConfigError("predictor: kernel_size must be odd");
  }
  if (input_channels < 1) {
    throw ConfigError("predictor: input_channels must be >= 1");
  }
  if (!(head_prior > 0.0 && head_prior < 1.0)) {
    throw ConfigError("predictor: head_prior must lie in (0, 1)");
  }
}

std::vector<LayerSpec> layer_layout(const PredictorConfig& config) {
  config.validate();
  const int s = config.stages;
  const int c = config.lateral_channels;
  std::vector<LayerSpec> layers;
  int prev = config.input_channels;
  for (int k = 0; k < s; ++k) {
    const int ch = config.stage_channels[k];
    layers.push_back({"enc" + std::to_string(k + 1) + "a", prev, ch, 2});
    layers.push_back({"enc" + std::to_string(k + 1) + "b", ch, ch, 1});
    prev = ch;
  }
  for (int k = 0; k < s; ++k) {
    layers.push_back({"lat" + std::to_string(k + 1), config.stage_channels[k], c, 1});
  }
  for (int k = s - 1; k >= 0; --k) {
    layers.push_back({"dec" + std::to_string(k + 1), c, c, 1});
  }
  layers.push_back({"head", c, 1, 1});

  std::size_t offset = 0;
  for (auto& l : layers) {
    l.weight_offset = offset;
    offset += l.weight_count(config.kernel_size);
    l.bias_offset = offset;
    offset += static_cast<std::size_t>(l.out_channels);
  }
  return layers;
}

std::size_t parameter_count(const PredictorConfig& config) {
  const auto layers = layer_layout(config);
  return layers.back().bias_offset +
         static_cast<std::size_t>(layers.back().out_channels);
}

std::span<const double> PredictorState::weights(const LayerSpec& l) const {
  return {parameters.data() + l.weight_offset,
          l.weight_count(config.kernel_size)};
}

std::span<const double> PredictorState::bias(const LayerSpec& l) const {
  return {parameters.data() + l.bias_offset,
          static_cast<std::size_t>(l.out_channels)};
}

PredictorState init_predictor(const PredictorConfig& config) {
  const auto layers = layer_layout(config);
  PredictorState state{config, std::vector<double>(parameter_count(config), 0.0)};
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int k = config.kernel_size;
  for (const auto& l : layers) {
    // ReLU layers use gain 2 and the linear laterals gain 1. The head starts
    // small so the initial saliency map is nearly flat at head_prior.
    double gain = 2.0;
    if (l.name.rfind("lat", 0) == 0) gain = 1.0;
    if (l.name == "head") gain = kHeadInitGain;
    const double scale =
        std::sqrt(gain / static_cast<double>(l.in_channels * k * k));
    for (double& w : weights_of(state.parameters, l, k)) w = scale * normal(rng);
  }
  const auto& head = layers.back();
  state.parameters[head.bias_offset] =
      std::log(config.head_prior / (1.0 - config.head_prior));
  return state;
}

ForwardResult forward(const PredictorState& state, const ImageGrid& image) {
  const auto& cfg = state.config;
  if (image.channels() != cfg.input_channels) {
    throw DimensionError("forward: image has " +
                         std::to_string(image.channels()) +
                         " channels, predictor expects " +
                         std::to_string(cfg.input_channels));
  }
  const auto layers = layer_layout(cfg);
  if (state.parameters.size() != parameter_count(cfg)) {
    throw DimensionError("forward: parameter vector does not match config");
  }
  const LayerIndex idx{cfg.stages};
  const int s = cfg.stages;
  const int kernel = cfg.kernel_size;
  const int c = cfg.lateral_channels;
  const int unit = 1 << s;

  ForwardTape t;
  t.height = image.height();
  t.width = image.width();
  t.padded_height = (t.height + unit - 1) / unit * unit;
  t.padded_width = (t.width + unit - 1) / unit * unit;
  const int ph = t.padded_height;
  const int pw = t.padded_width;

  t.input.resize(static_cast<std::size_t>(cfg.input_channels) * ph * pw);
  for (int ch = 0; ch < cfg.input_channels; ++ch) {
    for (int y = 0; y < ph; ++y) {
      for (int x = 0; x < pw; ++x) {
        t.input[(static_cast<std::size_t>(ch) * ph + y) * pw + x] =
            image.at(mirror(y, t.height), mirror(x, t.width), ch);
      }
    }
  }

  auto conv = [&](const LayerSpec& l, const std::vector<double>& in, int h,
                  int w, std::vector<double>& out) {
    const auto shape = conv_shape(l, kernel, h, w);
    out.resize(shape.out_size());
    kn::conv2d_forward(shape, in, state.weights(l), state.bias(l), out);
  };

  t.enc_a.resize(s);
  t.enc_b.resize(s);
  t.lateral.resize(s);
  t.dec_in.resize(s);
  t.dec_out.resize(s);

  const std::vector<double>* prev = &t.input;
  int h = ph;
  int w = pw;
  for (int k = 0; k < s; ++k) {
    conv(layers[idx.enc_a(k)], *prev, h, w, t.enc_a[k]);
    h /= 2;
    w /= 2;
    kn::relu_inplace(t.enc_a[k]);
    conv(layers[idx.enc_b(k)], t.enc_a[k], h, w, t.enc_b[k]);
    kn::relu_inplace(t.enc_b[k]);
    conv(layers[idx.lat(k)], t.enc_b[k], h, w, t.lateral[k]);
    prev = &t.enc_b[k];
  }

  // Top-down fusion; level k has extent (ph >> (k+1)) x (pw >> (k+1)).
  for (int k = s - 1; k >= 0; --k) {
    const int lh = ph >> (k + 1);
    const int lw = pw >> (k + 1);
    if (k == s - 1) {
      t.dec_in[k] = t.lateral[k];
    } else {
      t.dec_in[k].resize(static_cast<std::size_t>(c) * lh * lw);
      kn::upsample2x(c, lh / 2, lw / 2, t.dec_out[k + 1], t.dec_in[k]);
      for (std::size_t i = 0; i < t.dec_in[k].size(); ++i) {
        t.dec_in[k][i] += t.lateral[k][i];
      }
    }
    conv(layers[idx.dec(k)], t.dec_in[k], lh, lw, t.dec_out[k]);
    kn::relu_inplace(t.dec_out[k]);
  }

  t.head_in.resize(static_cast<std::size_t>(c) * ph * pw);
  kn::upsample2x(c, ph / 2, pw / 2, t.dec_out[0], t.head_in);
  conv(layers[idx.head()], t.head_in, ph, pw, t.output);
  for (double& v : t.output) v = 1.0 / (1.0 + std::exp(-v));

  std::vector<double> sal(static_cast<std::size_t>(t.height) * t.width);
  for (int y = 0; y < t.height; ++y) {
    for (int x = 0; x < t.width; ++x) {
      sal[static_cast<std::size_t>(y) * t.width + x] =
          t.output[static_cast<std::size_t>(y) * pw + x];
    }
  }
  ForwardResult result{ImageGrid(t.height, t.width, 1, std::move(sal)), {}};
  result.tape = std::move(t);
  return result;
}

std::vector<double> backward(const PredictorState& state,
                             const ForwardTape& t,
                             std::span<const double> grad_s) {
  if (grad_s.size() != static_cast<std::size_t>(t.height) * t.width) {
    throw DimensionError("backward: grad_s does not match the forward extent");
  }
  const auto& cfg = state.config;
  const auto layers = layer_layout(cfg);
  const LayerIndex idx{cfg.stages};
  const int s = cfg.stages;
  const int kernel = cfg.kernel_size;
  const int c = cfg.lateral_channels;
  const int ph = t.padded_height;
  const int pw = t.padded_width;

  std::vector<double> grad(state.parameters.size(), 0.0);

  auto conv_back = [&](const LayerSpec& l, const std::vector<double>& in,
                       int h, int w, const std::vector<double>& g_out,
                       std::vector<double>* g_in) {
    const auto shape = conv_shape(l, kernel, h, w);
    std::span<double> gi;
    if (g_in) {
      g_in->assign(shape.in_size(), 0.0);
      gi = *g_in;
    }
    kn::conv2d_backward(shape, in, state.weights(l), g_out, gi,
                        weights_of(grad, l, kernel), bias_of(grad, l));
  };

  // Sigmoid; the padded border carries no loss.
  std::vector<double> g_logit(t.output.size(), 0.0);
  for (int y = 0; y < t.height; ++y) {
    for (int x = 0; x < t.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * pw + x;
      const double o = t.output[i];
      g_logit[i] = grad_s[static_cast<std::size_t>(y) * t.width + x] * o * (1.0 - o);
    }
  }

  std::vector<double> g_head_in;
  conv_back(layers[idx.head()], t.head_in, ph, pw, g_logit, &g_head_in);

  std::vector<std::vector<double>> g_dec_out(s);
  std::vector<std::vector<double>> g_lat(s);
  g_dec_out[0].assign(t.dec_out[0].size(), 0.0);
  kn::upsample2x_backward(c, ph / 2, pw / 2, g_head_in, g_dec_out[0]);

  for (int k = 0; k < s; ++k) {
    const int lh = ph >> (k + 1);
    const int lw = pw >> (k + 1);
    kn::relu_backward_inplace(t.dec_out[k], g_dec_out[k]);
    std::vector<double> g_dec_in;
    conv_back(layers[idx.dec(k)], t.dec_in[k], lh, lw, g_dec_out[k], &g_dec_in);
    g_lat[k] = g_dec_in;
    if (k + 1 < s) {
      g_dec_out[k + 1].assign(t.dec_out[k + 1].size(), 0.0);
      kn::upsample2x_backward(c, lh / 2, lw / 2, g_dec_in, g_dec_out[k + 1]);
    }
  }

  std::vector<double> g_enc_b_next;  // gradient flowing into enc_b[k] from stage k+1
  for (int k = s - 1; k >= 0; --k) {
    const int lh = ph >> (k + 1);
    const int lw = pw >> (k + 1);
    std::vector<double> g_enc_b;
    conv_back(layers[idx.lat(k)], t.enc_b[k], lh, lw, g_lat[k], &g_enc_b);
    if (!g_enc_b_next.empty()) {
      for (std::size_t i = 0; i < g_enc_b.size(); ++i) g_enc_b[i] += g_enc_b_next[i];
    }
    kn::relu_backward_inplace(t.enc_b[k], g_enc_b);
    std::vector<double> g_enc_a;
    conv_back(layers[idx.enc_b(k)], t.enc_a[k], lh, lw, g_enc_b, &g_enc_a);
    kn::relu_backward_inplace(t.enc_a[k], g_enc_a);
    const std::vector<double>& in = k == 0 ? t.input : t.enc_b[k - 1];
    if (k == 0) {
      conv_back(layers[idx.enc_a(k)], in, 2 * lh, 2 * lw, g_enc_a, nullptr);
      g_enc_b_next.clear();
    } else {
      conv_back(layers[idx.enc_a(k)], in, 2 * lh, 2 * lw, g_enc_a,
                &g_enc_b_next);
    }
  }
  return grad;
}

namespace {

constexpr char kMagic[8] = {'B', 'O', 'X', 'S', 'A', 'L', 'C', 'K'};

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

void put_doubles(std::ostream& os, const std::vector<double>& v) {
  put<std::uint64_t>(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_doubles(std::istream& is, std::uint64_t limit) {
  const auto n = get<std::uint64_t>(is);
  if (n > limit) throw std::runtime_error("checkpoint: implausible vector size");
  std::vector<double> v(n);
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot write " + path.string());
  const auto& cfg = ck.state.config;
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kCheckpointVersion);
  put<std::int32_t>(os, cfg.stages);
  put<std::int32_t>(os, static_cast<std::int32_t>(cfg.stage_channels.size()));
  for (int ch : cfg.stage_channels) put<std::int32_t>(os, ch);
  put<std::int32_t>(os, cfg.lateral_channels);
  put<std::int32_t>(os, cfg.kernel_size);
  put<std::int32_t>(os, cfg.input_channels);
  put<std::uint64_t>(os, cfg.seed);
  put<double>(os, cfg.head_prior);
  put<std::int32_t>(os, ck.epoch);
  put_doubles(os, ck.state.parameters);
  put_doubles(os, ck.momentum);
  if (!os) throw std::runtime_error("checkpoint: write failed " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path.string());
  char magic[sizeof(kMagic)];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  }
  const auto version = get<std::uint32_t>(is);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version));
  }
  Checkpoint ck;
  auto& cfg = ck.state.config;
  cfg.stages = get<std::int32_t>(is);
  const auto n = get<std::int32_t>(is);
  if (n < 0 || n > 64) throw std::runtime_error("checkpoint: bad stage count");
  cfg.stage_channels.resize(static_cast<std::size_t>(n));
  for (auto& ch : cfg.stage_channels) ch = get<std::int32_t>(is);
  cfg.lateral_channels = get<std::int32_t>(is);
  cfg.kernel_size = get<std::int32_t>(is);
  cfg.input_channels = get<std::int32_t>(is);
  cfg.seed = get<std::uint64_t>(is);
  cfg.head_prior = get<double>(is);
  ck.epoch = get<std::int32_t>(is);
  cfg.validate();
  const std::size_t expected = parameter_count(cfg);
  ck.state.parameters = get_doubles(is, expected);
  if (ck.state.parameters.size() != expected) {
    throw std::runtime_error("checkpoint: parameter count does not match config");
  }
  ck.momentum = get_doubles(is, expected);
  if (!ck.momentum.empty() && ck.momentum.size() != expected) {
    throw std::runtime_error("checkpoint: momentum size does not match config");
  }
  is.peek();
  if (!is.eof()) throw std::runtime_error("checkpoint: trailing bytes");
  return ck;
}

}  // namespace boxsal

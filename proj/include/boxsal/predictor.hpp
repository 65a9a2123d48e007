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

#pragma once

// Compact encoder-decoder saliency network.
//
//   encoder   stage k: conv3x3/2 + ReLU, conv3x3 + ReLU   -> s_k (stride 2^k)
//   lateral   conv3x3 s_k -> C channels                    -> s'_k
//   decoder   d_S = ReLU(conv(s'_S))
//             d_k = ReLU(conv(up2(d_{k+1}) + s'_k))        k = S-1 .. 1
//   head      sigmoid(conv(up2(d_1)))                      -> 1 channel
//
// All parameters live in one flat vector; layer_layout() gives the offsets.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "boxsal/core.hpp"
#include "boxsal/kernels.hpp"

namespace boxsal {

struct PredictorConfig {
  int stages = 4;
  std::vector<int> stage_channels{8, 16, 16, 32};
  int lateral_channels = 16;
  int kernel_size = 3;
  int input_channels = 3;
  std::uint64_t seed = 17;
  /// Initial flat output of the network; sets the head bias at init.
  double head_prior = 0.01;

  void validate() const;
  friend bool operator==(const PredictorConfig&,
                         const PredictorConfig&) = default;
};

struct LayerSpec {
  std::string name;
  int in_channels = 0;
  int out_channels = 0;
  int stride = 1;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;

  std::size_t weight_count(int kernel) const {
    return static_cast<std::size_t>(in_channels) * out_channels * kernel *
           kernel;
  }
};

/// Layers in parameter order: enc{k}a, enc{k}b for every stage, lat{k} for
/// every stage, dec{S}..dec{1}, head.
std::vector<LayerSpec> layer_layout(const PredictorConfig& config);
std::size_t parameter_count(const PredictorConfig& config);

struct PredictorState {
  PredictorConfig config;
  std::vector<double> parameters;

  std::span<const double> weights(const LayerSpec& l) const;
  std::span<const double> bias(const LayerSpec& l) const;
};

/// Variance gain of the head conv at initialisation.
inline constexpr double kHeadInitGain = 1e-4;

/// Fan-in scaled normal weights, zero biases; deterministic in config.seed.
PredictorState init_predictor(const PredictorConfig& config);

/// Activations recorded by forward() for backward().
struct ForwardTape {
  int height = 0;         // unpadded input extent
  int width = 0;
  int padded_height = 0;  // multiple of 2^stages
  int padded_width = 0;
  std::vector<double> input;                 // padded CHW
  std::vector<std::vector<double>> enc_a;    // per stage, post-ReLU
  std::vector<std::vector<double>> enc_b;    // s_k
  std::vector<std::vector<double>> lateral;  // s'_k
  std::vector<std::vector<double>> dec_in;   // conv input of dec_k
  std::vector<std::vector<double>> dec_out;  // d_k, post-ReLU
  std::vector<double> head_in;
  std::vector<double> output;  // padded sigmoid output
};

struct ForwardResult {
  ImageGrid saliency;
  ForwardTape tape;
};

/// Inputs whose sides are not multiples of 2^stages are reflect-padded on
/// the bottom/right; the output is cropped back.
ForwardResult forward(const PredictorState& state, const ImageGrid& image);

/// dLoss/dparameters given dLoss/dsaliency (row-major, unpadded extent).
std::vector<double> backward(const PredictorState& state,
                             const ForwardTape& tape,
                             std::span<const double> grad_s);

/// Everything needed to resume training.
struct Checkpoint {
  PredictorState state;
  std::vector<double> momentum;
  int epoch = 0;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Little-endian binary container; doubles are stored bit-for-bit.
void save_checkpoint(const Checkpoint& checkpoint,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace boxsal

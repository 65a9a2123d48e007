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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "boxsal/core.hpp"
#include "boxsal/losses.hpp"
#include "boxsal/predictor.hpp"

namespace boxsal {

struct TrainConfig {
  int epochs = 15;
  int batch_size = 4;
  double lr = 2.5e-4;
  int decay_epoch = 20;
  double decay_rate = 0.9;
  double momentum = 0.9;
  /// Rescale the batch gradient to this global L2 norm when it is larger
  /// (0 = no clipping).
  double grad_clip = 0.0;
  std::uint64_t seed = 17;
  LossWeights loss_weights;
  PredictorConfig predictor;
  /// Write a checkpoint every N epochs (0 = final only).
  int checkpoint_every = 0;
  /// When set, every training image must be image_size x image_size.
  std::optional<int> image_size;

  void validate() const;
};

/// lr * decay_rate^floor(epoch / decay_epoch).
double lr_at_epoch(const TrainConfig& config, int epoch);

/// A training example with its supervision rasters precomputed.
struct TrainingExample {
  ImageGrid image;
  ImageGrid pseudo;
  ImageGrid box_mask;
};

/// Throws ConfigError listing every record without a pseudo-label.
std::vector<TrainingExample> make_training_set(
    const std::vector<DatasetRecord>& records);

struct EpochLog {
  int epoch = 0;  // 1-based in logs
  double lr = 0.0;
  double loss_total = 0.0;
  double loss_spn = 0.0;
  double loss_fore = 0.0;
  double loss_back = 0.0;
};

struct TrainerState {
  PredictorState predictor;
  std::vector<double> momentum;  // same size as parameters
};

/// Loss and mean parameter gradient over `batch` (indices into `data`).
/// Per-example work may run concurrently; the reduction order is fixed.
struct BatchGradient {
  TotalLoss mean_loss;  // grad_s unused
  std::vector<double> grad;
};
BatchGradient batch_gradient(const PredictorState& state,
                             const std::vector<TrainingExample>& data,
                             const std::vector<std::size_t>& batch,
                             const LossWeights& weights);

/// Scales `grad` in place so its L2 norm is at most `max_norm`; returns the
/// norm before scaling. max_norm <= 0 leaves the gradient untouched.
double clip_gradient(std::vector<double>& grad, double max_norm);

/// One SGD-with-momentum step: v = mu v + g; theta -= lr v.
void sgd_step(TrainerState& state, const std::vector<double>& grad, double lr,
              double momentum);

/// Shuffles with a seed derived from (config.seed, epoch), runs every batch
/// and returns the per-epoch means (losses are measured before each update).
EpochLog train_epoch(TrainerState& state,
                     const std::vector<TrainingExample>& data,
                     const TrainConfig& config, int epoch);

/// Mean losses without any update.
EpochLog evaluate_loss(const PredictorState& state,
                       const std::vector<TrainingExample>& data,
                       const LossWeights& weights);

struct TrainHooks {
  std::function<void(const EpochLog&)> on_epoch;
  std::function<void(const TrainerState&, int epoch)> on_checkpoint;
};

struct TrainResult {
  TrainerState state;
  std::vector<EpochLog> log;
};

TrainResult train(const std::vector<TrainingExample>& data,
                  const TrainConfig& config, const TrainHooks& hooks = {});

}  // namespace boxsal

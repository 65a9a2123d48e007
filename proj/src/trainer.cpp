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

#include "boxsal/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace boxsal {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(lr >= 0.0)) throw ConfigError("train: lr must be nonnegative");
  if (decay_epoch < 1) throw ConfigError("train: decay_epoch must be >= 1");
  if (!(decay_rate > 0.0 && decay_rate <= 1.0)) {
    throw ConfigError("train: decay_rate must lie in (0, 1]");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ConfigError("train: momentum must lie in [0, 1)");
  }
  if (!(grad_clip >= 0.0)) throw ConfigError("train: grad_clip must be >= 0");
  if (checkpoint_every < 0) {
    throw ConfigError("train: checkpoint_every must be >= 0");
  }
  if (image_size && *image_size < 1) {
    throw ConfigError("train: image_size must be >= 1");
  }
  loss_weights.validate();
  predictor.validate();
}

double lr_at_epoch(const TrainConfig& config, int epoch) {
  return config.lr * std::pow(config.decay_rate, epoch / config.decay_epoch);
}

std::vector<TrainingExample> make_training_set(
    const std::vector<DatasetRecord>& records) {
  std::string missing;
  for (const auto& r : records) {
    if (!r.pseudo_label) {
      missing += (missing.empty() ? "" : ", ") + r.annotation.image_ref();
    }
  }
  if (!missing.empty()) {
    throw ConfigError("train: records without pseudo-label: " + missing);
  }
  std::vector<TrainingExample> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    r.validate();
    out.push_back({r.image, r.pseudo_label->mask,
                   rasterize_boxes(r.annotation, r.image.height(),
                                   r.image.width())});
  }
  return out;
}

BatchGradient batch_gradient(const PredictorState& state,
                             const std::vector<TrainingExample>& data,
                             const std::vector<std::size_t>& batch,
                             const LossWeights& weights) {
  const std::size_t n = batch.size();
  std::vector<TotalLoss> losses(n);
  std::vector<std::vector<double>> grads(n);

#pragma omp parallel for schedule(static)
  for (std::size_t b = 0; b < n; ++b) {
    const auto& ex = data[batch[b]];
    const ForwardResult fwd = forward(state, ex.image);
    losses[b] = total_loss(fwd.saliency, ex.pseudo, ex.box_mask, ex.image, weights);
    grads[b] = backward(state, fwd.tape, losses[b].total.grad_s);
  }

  BatchGradient out;
  out.grad.assign(state.parameters.size(), 0.0);
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t b = 0; b < n; ++b) {
    out.mean_loss.total.value += inv * losses[b].total.value;
    out.mean_loss.spn += inv * losses[b].spn;
    out.mean_loss.fore += inv * losses[b].fore;
    out.mean_loss.back += inv * losses[b].back;
    for (std::size_t i = 0; i < out.grad.size(); ++i) {
      out.grad[i] += inv * grads[b][i];
    }
  }
  return out;
}

double clip_gradient(std::vector<double>& grad, double max_norm) {
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& g : grad) g *= scale;
  }
  return norm;
}

void sgd_step(TrainerState& state, const std::vector<double>& grad, double lr,
              double momentum) {
  auto& p = state.predictor.parameters;
  if (state.momentum.size() != p.size()) state.momentum.assign(p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    state.momentum[i] = momentum * state.momentum[i] + grad[i];
    p[i] -= lr * state.momentum[i];
  }
}

EpochLog train_epoch(TrainerState& state,
                     const std::vector<TrainingExample>& data,
                     const TrainConfig& config, int epoch) {
  if (data.empty()) throw ConfigError("train: empty dataset");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(config.seed * 1000003ULL + static_cast<std::uint64_t>(epoch));
  std::shuffle(order.begin(), order.end(), rng);

  const double lr = lr_at_epoch(config, epoch);
  EpochLog log;
  log.epoch = epoch + 1;
  log.lr = lr;
  const auto bs = static_cast<std::size_t>(config.batch_size);
  for (std::size_t start = 0; start < order.size(); start += bs) {
    const std::vector<std::size_t> batch(
        order.begin() + static_cast<std::ptrdiff_t>(start),
        order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + bs)));
    BatchGradient bg =
        batch_gradient(state.predictor, data, batch, config.loss_weights);
    // Weight by batch size so a short final batch counts per example.
    const double share = static_cast<double>(batch.size()) / data.size();
    log.loss_total += share * bg.mean_loss.total.value;
    log.loss_spn += share * bg.mean_loss.spn;
    log.loss_fore += share * bg.mean_loss.fore;
    log.loss_back += share * bg.mean_loss.back;
    clip_gradient(bg.grad, config.grad_clip);
    sgd_step(state, bg.grad, lr, config.momentum);
  }
  return log;
}

EpochLog evaluate_loss(const PredictorState& state,
                       const std::vector<TrainingExample>& data,
                       const LossWeights& weights) {
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const BatchGradient bg = batch_gradient(state, data, all, weights);
  EpochLog log;
  log.loss_total = bg.mean_loss.total.value;
  log.loss_spn = bg.mean_loss.spn;
  log.loss_fore = bg.mean_loss.fore;
  log.loss_back = bg.mean_loss.back;
  return log;
}

TrainResult train(const std::vector<TrainingExample>& data,
                  const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  if (data.empty()) throw ConfigError("train: empty dataset");
  if (config.image_size) {
    for (const auto& ex : data) {
      if (ex.image.height() != *config.image_size ||
          ex.image.width() != *config.image_size) {
        throw ConfigError("train: config requires " +
                          std::to_string(*config.image_size) + "x" +
                          std::to_string(*config.image_size) + " images");
      }
    }
  }
  TrainResult result;
  result.state.predictor = init_predictor(config.predictor);
  result.state.momentum.assign(result.state.predictor.parameters.size(), 0.0);
  for (int e = 0; e < config.epochs; ++e) {
    result.log.push_back(train_epoch(result.state, data, config, e));
    if (hooks.on_epoch) hooks.on_epoch(result.log.back());
    const bool periodic =
        config.checkpoint_every > 0 && (e + 1) % config.checkpoint_every == 0;
    if (hooks.on_checkpoint && (periodic || e + 1 == config.epochs)) {
      hooks.on_checkpoint(result.state, e + 1);
    }
  }
  return result;
}

}  // namespace boxsal

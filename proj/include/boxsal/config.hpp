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

#include <filesystem>
#include <string>

#include "boxsal/synthetic.hpp"
#include "boxsal/trainer.hpp"

namespace boxsal {

/// JSON training configuration. Every key is optional and unknown keys are
/// rejected:
///
///   {"epochs": 15, "batch_size": 4, "lr": 0.01, "decay_epoch": 20,
///    "decay_rate": 0.9, "momentum": 0.9, "seed": 17, "image_size": 32,
///    "checkpoint_every": 0,
///    "loss": {"alpha": 1, "beta": 1, "lambda1": 1, "lambda2": 1,
///             "edge_alpha": 10, "clamp_eps": 1e-7,
///             "smoothness_box_only": false},
///    "predictor": {"stages": 4, "stage_channels": [8, 16, 16, 32],
///                  "lateral_channels": 16, "kernel_size": 3,
///                  "input_channels": 3, "seed": 17}}
TrainConfig parse_train_config(const std::string& text);
TrainConfig load_train_config(const std::filesystem::path& path);
std::string train_config_to_json(const TrainConfig& config);

/// Synthetic scene spec with the same conventions; colours are [r, g, b]
/// triples and "placements" a list of [x0, y0, x1, y1] boxes.
SyntheticSceneSpec parse_scene_spec(const std::string& text);

}  // namespace boxsal

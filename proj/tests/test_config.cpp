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

#include <filesystem>

#include "boxsal/config.hpp"
#include "doctest.h"

using namespace boxsal;

namespace {

const std::filesystem::path kConfigs =
    std::filesystem::path(BOXSAL_SOURCE_DIR) / "configs";

}  // namespace

TEST_CASE("full-scale config schedule") {
  const auto c = load_train_config(kConfigs / "full.json");
  CHECK(c.epochs == 40);
  CHECK(c.batch_size == 16);
  CHECK(c.lr == 2.5e-4);
  CHECK(c.decay_epoch == 20);
  CHECK(c.decay_rate == 0.9);
  CHECK(c.loss_weights.alpha == 1.0);
  CHECK(c.loss_weights.beta == 1.0);
  CHECK(c.loss_weights.lambda1 == 1.0);
  CHECK(c.loss_weights.lambda2 == 1.0);
  CHECK(c.predictor.lateral_channels == 64);
}

TEST_CASE("desk config") {
  const auto c = load_train_config(kConfigs / "desk.json");
  CHECK(c.epochs == 15);
  CHECK(c.batch_size == 4);
  REQUIRE(c.image_size.has_value());
  CHECK(*c.image_size == 32);
  CHECK(c.grad_clip > 0.0);
}

TEST_CASE("json round trip preserves every field") {
  TrainConfig c;
  c.epochs = 7;
  c.lr = 0.0123;
  c.grad_clip = 2.5;
  c.image_size = 24;
  c.loss_weights.lambda1 = 0.25;
  c.loss_weights.smoothness_box_only = true;
  c.predictor.stage_channels = {4, 4, 8, 8};
  c.predictor.head_prior = 0.2;
  const auto back = parse_train_config(train_config_to_json(c));
  CHECK(back.epochs == 7);
  CHECK(back.lr == 0.0123);
  CHECK(back.grad_clip == 2.5);
  CHECK(back.image_size == std::optional<int>(24));
  CHECK(back.loss_weights.lambda1 == 0.25);
  CHECK(back.loss_weights.smoothness_box_only);
  CHECK(back.predictor == c.predictor);

  c.image_size.reset();
  CHECK_FALSE(parse_train_config(train_config_to_json(c)).image_size.has_value());
}

TEST_CASE("partial configs keep defaults") {
  const auto c = parse_train_config(R"({"epochs": 3})");
  CHECK(c.epochs == 3);
  CHECK(c.batch_size == TrainConfig{}.batch_size);
}

TEST_CASE("bad configs are rejected") {
  CHECK_THROWS_AS(parse_train_config(R"({"epoch": 3})"), ConfigError);
  CHECK_THROWS_AS(parse_train_config(R"({"loss": {"lambda3": 1}})"), ConfigError);
  CHECK_THROWS_AS(parse_train_config(R"({"epochs": "many"})"), ConfigError);
  CHECK_THROWS_AS(parse_train_config(R"({"epochs": 0})"), ConfigError);
  CHECK_THROWS_AS(parse_train_config(R"({"predictor": {"head_prior": 1.0}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_train_config("[1, 2"), ConfigError);
  CHECK_THROWS_AS(load_train_config(kConfigs / "missing.json"), ConfigError);
}

TEST_CASE("scene spec parsing") {
  const auto s = parse_scene_spec(R"({"height": 20, "width": 24, "shape": "ellipse",
      "min_size": 5, "max_size": 9, "fg_color": [1, 0, 0],
      "placements": [[1, 2, 8, 9]]})");
  CHECK(s.height == 20);
  CHECK(s.width == 24);
  CHECK(s.shape == ShapeKind::Ellipse);
  CHECK(s.fg_color[0] == 1.0);
  REQUIRE(s.placements.size() == 1);
  CHECK(s.placements[0] == BoundingBox{1, 2, 8, 9});
  CHECK_THROWS_AS(parse_scene_spec(R"({"shape": "star"})"), ConfigError);
  CHECK_THROWS_AS(parse_scene_spec(R"({"colour": [1, 0, 0]})"), ConfigError);
  CHECK_THROWS_AS(parse_scene_spec(R"({"height": 8, "max_size": 12})"), ConfigError);
}

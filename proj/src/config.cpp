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

#include "boxsal/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace boxsal {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& known,
                    const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!known.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": bad value for '" + key + "'");
  }
}

json parse_object(const std::string& text, const std::string& where) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(where + ": malformed JSON: " + e.what());
  }
  if (!doc.is_object()) throw ConfigError(where + ": expected an object");
  return doc;
}

}  // namespace

TrainConfig parse_train_config(const std::string& text) {
  const json doc = parse_object(text, "config");
  reject_unknown(doc,
                 {"epochs", "batch_size", "lr", "decay_epoch", "decay_rate",
                  "momentum", "grad_clip", "seed", "image_size", "checkpoint_every", "loss",
                  "predictor"},
                 "config");
  TrainConfig c;
  read(doc, "epochs", c.epochs, "config");
  read(doc, "batch_size", c.batch_size, "config");
  read(doc, "lr", c.lr, "config");
  read(doc, "decay_epoch", c.decay_epoch, "config");
  read(doc, "decay_rate", c.decay_rate, "config");
  read(doc, "momentum", c.momentum, "config");
  read(doc, "grad_clip", c.grad_clip, "config");
  read(doc, "seed", c.seed, "config");
  read(doc, "checkpoint_every", c.checkpoint_every, "config");
  if (doc.contains("image_size") && !doc["image_size"].is_null()) {
    int s = 0;
    read(doc, "image_size", s, "config");
    c.image_size = s;
  }
  if (doc.contains("loss")) {
    const auto& l = doc["loss"];
    if (!l.is_object()) throw ConfigError("config.loss: expected an object");
    reject_unknown(l,
                   {"alpha", "beta", "lambda1", "lambda2", "edge_alpha",
                    "clamp_eps", "smoothness_box_only"},
                   "config.loss");
    auto& w = c.loss_weights;
    read(l, "alpha", w.alpha, "config.loss");
    read(l, "beta", w.beta, "config.loss");
    read(l, "lambda1", w.lambda1, "config.loss");
    read(l, "lambda2", w.lambda2, "config.loss");
    read(l, "edge_alpha", w.edge_alpha, "config.loss");
    read(l, "clamp_eps", w.clamp_eps, "config.loss");
    read(l, "smoothness_box_only", w.smoothness_box_only, "config.loss");
  }
  if (doc.contains("predictor")) {
    const auto& p = doc["predictor"];
    if (!p.is_object()) throw ConfigError("config.predictor: expected an object");
    reject_unknown(p,
                   {"stages", "stage_channels", "lateral_channels",
                    "kernel_size", "input_channels", "seed", "head_prior"},
                   "config.predictor");
    auto& pc = c.predictor;
    read(p, "stages", pc.stages, "config.predictor");
    read(p, "stage_channels", pc.stage_channels, "config.predictor");
    read(p, "lateral_channels", pc.lateral_channels, "config.predictor");
    read(p, "kernel_size", pc.kernel_size, "config.predictor");
    read(p, "input_channels", pc.input_channels, "config.predictor");
    read(p, "seed", pc.seed, "config.predictor");
    read(p, "head_prior", pc.head_prior, "config.predictor");
  }
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_train_config(ss.str());
}

std::string train_config_to_json(const TrainConfig& c) {
  const auto& w = c.loss_weights;
  const auto& p = c.predictor;
  json doc = {
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"lr", c.lr},
      {"decay_epoch", c.decay_epoch},
      {"decay_rate", c.decay_rate},
      {"momentum", c.momentum},
      {"grad_clip", c.grad_clip},
      {"seed", c.seed},
      {"checkpoint_every", c.checkpoint_every},
      {"loss",
       {{"alpha", w.alpha},
        {"beta", w.beta},
        {"lambda1", w.lambda1},
        {"lambda2", w.lambda2},
        {"edge_alpha", w.edge_alpha},
        {"clamp_eps", w.clamp_eps},
        {"smoothness_box_only", w.smoothness_box_only}}},
      {"predictor",
       {{"stages", p.stages},
        {"stage_channels", p.stage_channels},
        {"lateral_channels", p.lateral_channels},
        {"kernel_size", p.kernel_size},
        {"input_channels", p.input_channels},
        {"seed", p.seed},
        {"head_prior", p.head_prior}}}};
  doc["image_size"] = c.image_size ? json(*c.image_size) : json(nullptr);
  return doc.dump(2);
}

SyntheticSceneSpec parse_scene_spec(const std::string& text) {
  const json doc = parse_object(text, "scene spec");
  reject_unknown(doc,
                 {"height", "width", "instances", "shape", "min_size",
                  "max_size", "fg_color", "bg_color", "color_jitter",
                  "noise_sigma", "seed", "placements"},
                 "scene spec");
  SyntheticSceneSpec s;
  const std::string where = "scene spec";
  read(doc, "height", s.height, where);
  read(doc, "width", s.width, where);
  read(doc, "instances", s.instances, where);
  read(doc, "min_size", s.min_size, where);
  read(doc, "max_size", s.max_size, where);
  read(doc, "fg_color", s.fg_color, where);
  read(doc, "bg_color", s.bg_color, where);
  read(doc, "color_jitter", s.color_jitter, where);
  read(doc, "noise_sigma", s.noise_sigma, where);
  read(doc, "seed", s.seed, where);
  if (doc.contains("shape")) {
    std::string shape;
    read(doc, "shape", shape, where);
    s.shape = parse_shape(shape);
  }
  if (doc.contains("placements")) {
    std::vector<std::array<int, 4>> boxes;
    read(doc, "placements", boxes, where);
    for (const auto& b : boxes) s.placements.push_back({b[0], b[1], b[2], b[3]});
  }
  s.validate();
  return s;
}

}  // namespace boxsal

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

#include <cmath>

#include "boxsal/synthetic.hpp"
#include "doctest.h"

using namespace boxsal;

TEST_CASE("zero instances give an empty scene") {
  SyntheticSceneSpec s;
  s.instances = 0;
  const auto r = generate_synthetic(s);
  for (double v : r.gt->values()) CHECK(v == 0.0);
  CHECK(r.annotation.empty());
}

TEST_CASE("one 8x8 rectangle") {
  SyntheticSceneSpec s;
  s.height = 16;
  s.width = 16;
  s.shape = ShapeKind::Rectangle;
  s.placements = {{3, 5, 11, 13}};
  const auto r = generate_synthetic(s);
  double fg = 0;
  for (double v : r.gt->values()) fg += v;
  CHECK(fg == 64.0);
  REQUIRE(r.annotation.boxes().size() == 1);
  CHECK(r.annotation.boxes()[0].area() == 64);
  CHECK(r.annotation.boxes()[0] == BoundingBox{3, 5, 11, 13});
}

TEST_CASE("fixed seed reproduces the scene") {
  SyntheticSceneSpec s;
  s.instances = 3;
  s.min_size = 5;
  s.max_size = 12;
  s.seed = 42;
  const auto a = generate_synthetic(s);
  const auto b = generate_synthetic(s);
  CHECK(a.image == b.image);
  CHECK(*a.gt == *b.gt);
  CHECK(a.annotation.boxes() == b.annotation.boxes());
  s.seed = 43;
  CHECK(!(generate_synthetic(s).image == a.image));
}

TEST_CASE("tight boxes cover the gt and never overlap") {
  for (auto shape : {ShapeKind::Rectangle, ShapeKind::Ellipse, ShapeKind::Blob}) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      SyntheticSceneSpec s;
      s.shape = shape;
      s.instances = 1 + static_cast<int>(seed % 4);
      s.min_size = 4;
      s.max_size = 14;
      s.seed = seed;
      const auto r = generate_synthetic(s);
      const auto box = rasterize_boxes(r.annotation, s.height, s.width);
      for (std::size_t i = 0; i < box.size(); ++i) {
        if (r.gt->values()[i] == 1.0) CHECK(box.values()[i] == 1.0);
      }
      const auto& b = r.annotation.boxes();
      for (std::size_t i = 0; i < b.size(); ++i)
        for (std::size_t j = i + 1; j < b.size(); ++j) CHECK(!b[i].overlaps(b[j]));
    }
  }
}

TEST_CASE("image values sit on the 8-bit grid") {
  SyntheticSceneSpec s;
  const auto r = generate_synthetic(s);
  for (double v : r.image.values()) CHECK(v * 255.0 == doctest::Approx(std::round(v * 255.0)).epsilon(1e-12));
}

TEST_CASE("spec validation and colour separation") {
  SyntheticSceneSpec s;
  s.fg_color = {1, 0, 0};
  s.bg_color = {0, 0, 1};
  CHECK(s.color_separation() == doctest::Approx(std::sqrt(2.0)));
  s.max_size = 100;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = SyntheticSceneSpec{};
  s.placements = {{0, 0, 40, 4}};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  CHECK(parse_shape("blob") == ShapeKind::Blob);
  CHECK_THROWS_AS(parse_shape("star"), ConfigError);
}

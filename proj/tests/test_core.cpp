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

#include <algorithm>
#include <random>

#include "boxsal/core.hpp"
#include "doctest.h"

using namespace boxsal;

TEST_CASE("ImageGrid rejects values outside [0,1] and bad extents") {
  CHECK_THROWS_AS(ImageGrid(2, 2, 1, 1.5), std::out_of_range);
  CHECK_THROWS_AS(ImageGrid(2, 2, 1, std::vector<double>{0, 0.5, -0.1, 1}),
                  std::out_of_range);
  CHECK_THROWS_AS(ImageGrid(2, 2, 1, std::vector<double>{0, 0.5, 1}),
                  DimensionError);
  CHECK_THROWS_AS(ImageGrid(0, 2, 1), DimensionError);
  ImageGrid g(2, 3, 3, 0.25);
  CHECK(g.size() == 18);
  CHECK(g.at(1, 2, 2) == 0.25);
  CHECK_THROWS_AS(g.set(0, 0, 0, 2.0), std::out_of_range);
  g.set(1, 1, 1, 0.75);
  CHECK(g.at(1, 1, 1) == 0.75);
}

TEST_CASE("intensity is the channel mean") {
  ImageGrid g(1, 1, 3, std::vector<double>{0.3, 0.6, 0.9});
  CHECK(g.intensity().at(0, 0) == doctest::Approx(0.6));
}

TEST_CASE("rasterize_boxes examples") {
  BoxAnnotation none("a", {});
  const auto empty = rasterize_boxes(none, 4, 4);
  CHECK(std::all_of(empty.values().begin(), empty.values().end(),
                    [](double v) { return v == 0.0; }));

  BoxAnnotation full("a", {{0, 0, 4, 4}});
  const auto ones = rasterize_boxes(full, 4, 4);
  CHECK(std::all_of(ones.values().begin(), ones.values().end(),
                    [](double v) { return v == 1.0; }));

  BoxAnnotation mid("a", {{1, 1, 3, 3}});
  const auto m = rasterize_boxes(mid, 4, 4);
  double s = 0;
  for (double v : m.values()) s += v;
  CHECK(s == 4.0);
  CHECK(m.at(1, 1) == 1.0);
  CHECK(m.at(2, 2) == 1.0);
  CHECK(m.at(3, 3) == 0.0);
}

TEST_CASE("count_foreground examples") {
  CHECK(count_foreground(BoxAnnotation("a", {{1, 1, 3, 3}}), 4, 4) == 4);
  CHECK(count_foreground(BoxAnnotation("a", {{0, 0, 7, 5}}), 5, 7) == 35);
  CHECK(count_foreground(BoxAnnotation("a", {}), 4, 4) == 0);
}

TEST_CASE("boxes outside the raster raise DimensionError") {
  BoxAnnotation a("a", {{2, 2, 5, 3}});
  CHECK_THROWS_AS(rasterize_boxes(a, 4, 4), DimensionError);
  CHECK_THROWS_AS(a.check_fits(4, 4), DimensionError);
}

TEST_CASE("overlapping or empty boxes are rejected") {
  CHECK_THROWS_AS(BoxAnnotation("a", {{0, 0, 3, 3}, {2, 2, 4, 4}}),
                  ValidationError);
  CHECK_THROWS_AS(BoxAnnotation("a", {{1, 1, 1, 3}}), ValidationError);
  // Touching edges do not overlap under half-open coordinates.
  CHECK_NOTHROW(BoxAnnotation("a", {{0, 0, 2, 2}, {2, 0, 4, 2}}));
}

TEST_CASE("dilated clips to the raster") {
  BoundingBox b{1, 1, 3, 3};
  CHECK(b.dilated(2, 4, 4) == BoundingBox{0, 0, 4, 4});
  CHECK(b.dilated(1, 10, 10) == BoundingBox{0, 0, 4, 4});
}

namespace {
std::vector<BoundingBox> random_disjoint_boxes(std::mt19937_64& rng, int h,
                                               int w) {
  std::vector<BoundingBox> out;
  std::uniform_int_distribution<int> n_boxes(0, 4);
  const int want = n_boxes(rng);
  for (int tries = 0; tries < 50 && static_cast<int>(out.size()) < want; ++tries) {
    std::uniform_int_distribution<int> xs(0, w - 1), ys(0, h - 1);
    const int x0 = xs(rng), y0 = ys(rng);
    std::uniform_int_distribution<int> xe(x0 + 1, w), ye(y0 + 1, h);
    BoundingBox b{x0, y0, xe(rng), ye(rng)};
    if (std::none_of(out.begin(), out.end(),
                     [&](const BoundingBox& o) { return o.overlaps(b); })) {
      out.push_back(b);
    }
  }
  return out;
}
}  // namespace

TEST_CASE("rasterize then count equals count_foreground, order-invariant") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    std::uniform_int_distribution<int> side(1, 8);
    const int h = side(rng), w = side(rng);
    auto boxes = random_disjoint_boxes(rng, h, w);
    BoxAnnotation a("r", boxes);
    const auto m = rasterize_boxes(a, h, w);
    double s = 0;
    for (double v : m.values()) s += v;
    CHECK(static_cast<long long>(s) == count_foreground(a, h, w));
    std::shuffle(boxes.begin(), boxes.end(), rng);
    CHECK(rasterize_boxes(BoxAnnotation("r", boxes), h, w) == m);
  }
}

TEST_CASE("enforce_background zeroes outside-box pixels") {
  ImageGrid mask(4, 4, 1, 1.0);
  enforce_background(mask, BoxAnnotation("a", {{1, 1, 3, 3}}));
  double s = 0;
  for (double v : mask.values()) s += v;
  CHECK(s == 4.0);
}

TEST_CASE("DatasetRecord validate checks extents") {
  DatasetRecord r;
  r.image = ImageGrid(4, 4, 3);
  r.annotation = BoxAnnotation("a", {{0, 0, 2, 2}});
  CHECK_NOTHROW(r.validate());
  r.gt = ImageGrid(4, 5, 1);
  CHECK_THROWS_AS(r.validate(), DimensionError);
  r.gt.reset();
  r.annotation = BoxAnnotation("a", {{0, 0, 5, 2}});
  CHECK_THROWS_AS(r.validate(), DimensionError);
}

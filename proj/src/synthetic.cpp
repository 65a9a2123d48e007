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

#include "boxsal/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "boxsal/io.hpp"

namespace boxsal {

namespace {

struct Ellipse {
  double cy, cx, ry, rx;
  bool contains(int y, int x) const {
    const double dy = (y + 0.5 - cy) / ry;
    const double dx = (x + 0.5 - cx) / rx;
    return dy * dy + dx * dx <= 1.0;
  }
};

void paint_instance(std::vector<char>& mask, int width, const BoundingBox& b,
                    ShapeKind kind, std::mt19937_64& rng) {
  std::vector<Ellipse> ellipses;
  const double h = b.y1 - b.y0;
  const double w = b.x1 - b.x0;
  if (kind == ShapeKind::Ellipse) {
    ellipses.push_back({b.y0 + h / 2, b.x0 + w / 2, h / 2, w / 2});
  } else if (kind == ShapeKind::Blob) {
    // Three overlapping ellipses anchored around the extent's centre.
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 3; ++i) {
      const double ry = h * (0.2 + 0.15 * u(rng));
      const double rx = w * (0.2 + 0.15 * u(rng));
      const double cy = b.y0 + ry + (h - 2 * ry) * u(rng);
      const double cx = b.x0 + rx + (w - 2 * rx) * u(rng);
      ellipses.push_back({cy, cx, ry, rx});
    }
    // Chain the parts so the blob stays one component.
    ellipses.push_back({b.y0 + h / 2, b.x0 + w / 2, h * 0.22, w * 0.22});
  }
  for (int y = b.y0; y < b.y1; ++y) {
    for (int x = b.x0; x < b.x1; ++x) {
      bool inside = kind == ShapeKind::Rectangle;
      for (const auto& e : ellipses) inside = inside || e.contains(y, x);
      if (inside) mask[static_cast<std::size_t>(y) * width + x] = 1;
    }
  }
}

}  // namespace

ShapeKind parse_shape(const std::string& name) {
  if (name == "rectangle") return ShapeKind::Rectangle;
  if (name == "ellipse") return ShapeKind::Ellipse;
  if (name == "blob") return ShapeKind::Blob;
  throw ConfigError("unknown shape '" + name + "'");
}

std::string shape_name(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::Rectangle:
      return "rectangle";
    case ShapeKind::Ellipse:
      return "ellipse";
    case ShapeKind::Blob:
      return "blob";
  }
  return "blob";
}

double SyntheticSceneSpec::color_separation() const {
  double s = 0.0;
  for (int c = 0; c < 3; ++c) s += (fg_color[c] - bg_color[c]) * (fg_color[c] - bg_color[c]);
  return std::sqrt(s);
}

void SyntheticSceneSpec::validate() const {
  if (height < 1 || width < 1) throw ConfigError("synthetic: bad canvas size");
  if (instances < 0) throw ConfigError("synthetic: negative instance count");
  if (placements.empty() && instances > 0 &&
      (min_size < 1 || max_size < min_size || max_size > std::min(height, width))) {
    throw ConfigError("synthetic: instance size range does not fit the canvas");
  }
  for (const auto& b : placements) {
    if (!b.fits(height, width)) {
      throw ConfigError("synthetic: placement outside the canvas");
    }
  }
  if (noise_sigma < 0 || color_jitter < 0) {
    throw ConfigError("synthetic: noise and jitter must be nonnegative");
  }
}

std::vector<BoundingBox> tight_boxes(const ImageGrid& mask) {
  const int h = mask.height();
  const int w = mask.width();
  std::vector<int> comp(mask.pixel_count(), -1);
  std::vector<BoundingBox> boxes;
  std::vector<int> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      if (mask.values()[p] <= 0.5 || comp[p] >= 0) continue;
      BoundingBox b{x, y, x + 1, y + 1};
      const int id = static_cast<int>(boxes.size());
      comp[p] = id;
      stack.push_back(static_cast<int>(p));
      while (!stack.empty()) {
        const int q = stack.back();
        stack.pop_back();
        const int qy = q / w;
        const int qx = q % w;
        b = {std::min(b.x0, qx), std::min(b.y0, qy), std::max(b.x1, qx + 1),
             std::max(b.y1, qy + 1)};
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int ny = qy + dy;
            const int nx = qx + dx;
            if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
            const std::size_t r = static_cast<std::size_t>(ny) * w + nx;
            if (mask.values()[r] > 0.5 && comp[r] < 0) {
              comp[r] = id;
              stack.push_back(static_cast<int>(r));
            }
          }
        }
      }
      boxes.push_back(b);
    }
  }
  // Merge overlapping boxes into their union until a fixed point.
  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t i = 0; i < boxes.size() && !merged; ++i) {
      for (std::size_t j = i + 1; j < boxes.size(); ++j) {
        if (!boxes[i].overlaps(boxes[j])) continue;
        const auto& a = boxes[i];
        const auto& c = boxes[j];
        boxes[i] = {std::min(a.x0, c.x0), std::min(a.y0, c.y0),
                    std::max(a.x1, c.x1), std::max(a.y1, c.y1)};
        boxes.erase(boxes.begin() + static_cast<std::ptrdiff_t>(j));
        merged = true;
        break;
      }
    }
  }
  return boxes;
}

DatasetRecord generate_synthetic(const SyntheticSceneSpec& spec,
                                 const std::string& image_ref) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> jitter(-spec.color_jitter,
                                                spec.color_jitter);
  std::array<double, 3> fg{};
  std::array<double, 3> bg{};
  for (int c = 0; c < 3; ++c) {
    fg[c] = std::clamp(spec.fg_color[c] + jitter(rng), 0.0, 1.0);
    bg[c] = std::clamp(spec.bg_color[c] + jitter(rng), 0.0, 1.0);
  }

  std::vector<BoundingBox> extents = spec.placements;
  if (extents.empty()) {
    std::uniform_int_distribution<int> side(spec.min_size, spec.max_size);
    for (int i = 0; i < spec.instances; ++i) {
      const int eh = side(rng);
      const int ew = side(rng);
      std::uniform_int_distribution<int> oy(0, spec.height - eh);
      std::uniform_int_distribution<int> ox(0, spec.width - ew);
      const int y0 = oy(rng);
      const int x0 = ox(rng);
      extents.push_back({x0, y0, x0 + ew, y0 + eh});
    }
  }

  const int h = spec.height;
  const int w = spec.width;
  std::vector<char> mask(static_cast<std::size_t>(h) * w, 0);
  for (const auto& e : extents) paint_instance(mask, w, e, spec.shape, rng);

  std::normal_distribution<double> noise(0.0, spec.noise_sigma);
  std::vector<double> pixels(static_cast<std::size_t>(h) * w * 3);
  std::vector<double> gt(static_cast<std::size_t>(h) * w);
  for (std::size_t p = 0; p < gt.size(); ++p) {
    gt[p] = mask[p] ? 1.0 : 0.0;
    const auto& base = mask[p] ? fg : bg;
    for (int c = 0; c < 3; ++c) {
      const double n = spec.noise_sigma > 0.0 ? noise(rng) : 0.0;
      pixels[p * 3 + c] = std::clamp(base[c] + n, 0.0, 1.0);
    }
  }

  DatasetRecord rec;
  rec.image = quantize8(ImageGrid(h, w, 3, std::move(pixels)));
  rec.gt = ImageGrid(h, w, 1, std::move(gt));
  rec.annotation = BoxAnnotation(image_ref, tight_boxes(*rec.gt));
  return rec;
}

}  // namespace boxsal

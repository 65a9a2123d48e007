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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "boxsal/core.hpp"

namespace boxsal {

enum class ShapeKind { Rectangle, Ellipse, Blob };

ShapeKind parse_shape(const std::string& name);
std::string shape_name(ShapeKind kind);

/// Scene recipe. Instances are drawn in fg colour over a bg canvas, then
/// Gaussian noise is added and the image is quantised to 8 bits.
struct SyntheticSceneSpec {
  int height = 32;
  int width = 32;
  int instances = 1;
  ShapeKind shape = ShapeKind::Blob;
  /// Side range of each instance's bounding extent, in pixels.
  int min_size = 10;
  int max_size = 18;
  std::array<double, 3> fg_color{0.95, 0.75, 0.45};
  std::array<double, 3> bg_color{0.15, 0.20, 0.30};
  /// Uniform per-scene perturbation of each colour channel, +/- jitter.
  double color_jitter = 0.08;
  double noise_sigma = 0.03;
  std::uint64_t seed = 17;
  /// Explicit instance extents; when non-empty they replace random placement
  /// and `instances`.
  std::vector<BoundingBox> placements;

  /// Euclidean distance between the nominal fg and bg colours.
  double color_separation() const;
  void validate() const;
};

/// Image + gt + tight-box annotation (one box per connected gt component,
/// overlapping boxes merged).
DatasetRecord generate_synthetic(const SyntheticSceneSpec& spec,
                                 const std::string& image_ref = "synthetic");

/// Tight boxes of the 8-connected foreground components of `mask`, with any
/// overlapping boxes merged until none overlap.
std::vector<BoundingBox> tight_boxes(const ImageGrid& mask);

}  // namespace boxsal

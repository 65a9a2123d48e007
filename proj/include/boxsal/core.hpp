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

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace boxsal {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major raster with interleaved channels. Every value lies in
/// [0, 1]; the constructor rejects anything else.
class ImageGrid {
 public:
  ImageGrid() = default;
  ImageGrid(int height, int width, int channels, double fill = 0.0);
  ImageGrid(int height, int width, int channels, std::vector<double> data);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double at(int y, int x, int c = 0) const { return data_[index(y, x, c)]; }
  std::span<const double> values() const { return data_; }

  /// Writes are range-checked so the [0,1] invariant cannot be broken.
  void set(int y, int x, int c, double v);
  void set(int y, int x, double v) { set(y, x, 0, v); }

  std::size_t index(int y, int x, int c = 0) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  bool same_shape(const ImageGrid& other) const {
    return height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_;
  }
  bool same_extent(const ImageGrid& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

  /// Single-channel intensity: mean over channels.
  ImageGrid intensity() const;

  friend bool operator==(const ImageGrid&, const ImageGrid&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct BoundingBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  long long area() const {
    return static_cast<long long>(x1 - x0) * static_cast<long long>(y1 - y0);
  }
  bool contains(int x, int y) const {
    return x >= x0 && x < x1 && y >= y0 && y < y1;
  }
  bool overlaps(const BoundingBox& o) const {
    return x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1;
  }
  bool fits(int height, int width) const {
    return 0 <= x0 && x0 < x1 && x1 <= width && 0 <= y0 && y0 < y1 &&
           y1 <= height;
  }
  /// Grows the box by `px` on every side, clipped to the raster.
  BoundingBox dilated(int px, int height, int width) const;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Box supervision for one image. Boxes are pairwise disjoint: overlapping
/// instances must be merged into one box before construction.
class BoxAnnotation {
 public:
  BoxAnnotation() = default;
  BoxAnnotation(std::string image_ref, std::vector<BoundingBox> boxes);

  const std::string& image_ref() const { return image_ref_; }
  const std::vector<BoundingBox>& boxes() const { return boxes_; }
  bool empty() const { return boxes_.empty(); }

  /// Throws DimensionError naming the first box outside height x width.
  void check_fits(int height, int width) const;

 private:
  std::string image_ref_;
  std::vector<BoundingBox> boxes_;
};

/// 1-channel mask: 1 inside any box, 0 elsewhere.
ImageGrid rasterize_boxes(const BoxAnnotation& annotation, int height,
                          int width);

/// Number of pixels covered by the boxes (z).
long long count_foreground(const BoxAnnotation& annotation, int height,
                           int width);

enum class LabelSource { RawBox, GrabCut };

struct PseudoLabel {
  ImageGrid mask;
  LabelSource source = LabelSource::GrabCut;
};

/// Zeroes every pixel of `mask` outside the annotation's boxes.
void enforce_background(ImageGrid& mask, const BoxAnnotation& annotation);

struct DatasetRecord {
  ImageGrid image;
  BoxAnnotation annotation;
  std::optional<PseudoLabel> pseudo_label;
  std::optional<ImageGrid> gt;

  /// Checks extents of every present raster against the image and that the
  /// boxes fit.
  void validate() const;
};

}  // namespace boxsal

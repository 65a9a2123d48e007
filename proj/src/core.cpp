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

#include "boxsal/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace boxsal {

namespace {

void check_dims(int height, int width, int channels) {
  if (height < 1 || width < 1 || channels < 1) {
    throw DimensionError("ImageGrid: dimensions must be positive, got " +
                         std::to_string(height) + "x" + std::to_string(width) +
                         "x" + std::to_string(channels));
  }
}

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

std::string box_str(const BoundingBox& b) {
  return "[" + std::to_string(b.x0) + "," + std::to_string(b.y0) + "," +
         std::to_string(b.x1) + "," + std::to_string(b.y1) + "]";
}

}  // namespace

ImageGrid::ImageGrid(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
  check_dims(height, width, channels);
  if (!in_unit(fill)) throw std::out_of_range("ImageGrid: fill outside [0,1]");
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

ImageGrid::ImageGrid(int height, int width, int channels,
                     std::vector<double> data)
    : height_(height), width_(width), channels_(channels),
      data_(std::move(data)) {
  check_dims(height, width, channels);
  if (data_.size() != static_cast<std::size_t>(height) * width * channels) {
    throw DimensionError("ImageGrid: data length " +
                         std::to_string(data_.size()) +
                         " does not match shape");
  }
  for (double v : data_) {
    if (!in_unit(v)) {
      throw std::out_of_range("ImageGrid: value " + std::to_string(v) +
                              " outside [0,1]");
    }
  }
}

void ImageGrid::set(int y, int x, int c, double v) {
  if (!in_unit(v)) {
    throw std::out_of_range("ImageGrid::set: value outside [0,1]");
  }
  data_[index(y, x, c)] = v;
}

ImageGrid ImageGrid::intensity() const {
  if (channels_ == 1) return *this;
  std::vector<double> out(pixel_count());
  for (std::size_t p = 0; p < out.size(); ++p) {
    double s = 0.0;
    for (int c = 0; c < channels_; ++c) s += data_[p * channels_ + c];
    out[p] = std::clamp(s / channels_, 0.0, 1.0);
  }
  return ImageGrid(height_, width_, 1, std::move(out));
}

BoundingBox BoundingBox::dilated(int px, int height, int width) const {
  return {std::max(0, x0 - px), std::max(0, y0 - px), std::min(width, x1 + px),
          std::min(height, y1 + px)};
}

BoxAnnotation::BoxAnnotation(std::string image_ref,
                             std::vector<BoundingBox> boxes)
    : image_ref_(std::move(image_ref)), boxes_(std::move(boxes)) {
  for (std::size_t i = 0; i < boxes_.size(); ++i) {
    const auto& b = boxes_[i];
    if (b.x0 < 0 || b.y0 < 0 || b.x1 <= b.x0 || b.y1 <= b.y0) {
      throw ValidationError("annotation '" + image_ref_ + "': box " +
                            box_str(b) + " is empty or has negative origin");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (b.overlaps(boxes_[j])) {
        throw ValidationError("annotation '" + image_ref_ + "': boxes " +
                              box_str(boxes_[j]) + " and " + box_str(b) +
                              " overlap");
      }
    }
  }
}

void BoxAnnotation::check_fits(int height, int width) const {
  for (const auto& b : boxes_) {
    if (!b.fits(height, width)) {
      throw DimensionError("annotation '" + image_ref_ + "': box " +
                           box_str(b) + " exceeds " + std::to_string(width) +
                           "x" + std::to_string(height) + " image");
    }
  }
}

ImageGrid rasterize_boxes(const BoxAnnotation& annotation, int height,
                          int width) {
  annotation.check_fits(height, width);
  std::vector<double> mask(static_cast<std::size_t>(height) * width, 0.0);
  for (const auto& b : annotation.boxes()) {
    for (int y = b.y0; y < b.y1; ++y) {
      std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(y) * width + b.x0,
                  b.x1 - b.x0, 1.0);
    }
  }
  return ImageGrid(height, width, 1, std::move(mask));
}

long long count_foreground(const BoxAnnotation& annotation, int height,
                           int width) {
  annotation.check_fits(height, width);
  // Boxes are disjoint, so areas add.
  long long z = 0;
  for (const auto& b : annotation.boxes()) z += b.area();
  return z;
}

void enforce_background(ImageGrid& mask, const BoxAnnotation& annotation) {
  const ImageGrid boxes =
      rasterize_boxes(annotation, mask.height(), mask.width());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (boxes.at(y, x) == 0.0) {
        for (int c = 0; c < mask.channels(); ++c) mask.set(y, x, c, 0.0);
      }
    }
  }
}

void DatasetRecord::validate() const {
  if (image.empty()) throw ValidationError("record has no image");
  annotation.check_fits(image.height(), image.width());
  if (pseudo_label && !pseudo_label->mask.same_extent(image)) {
    throw DimensionError("record '" + annotation.image_ref() +
                         "': pseudo-label extent differs from image");
  }
  if (gt && !gt->same_extent(image)) {
    throw DimensionError("record '" + annotation.image_ref() +
                         "': ground truth extent differs from image");
  }
}

}  // namespace boxsal

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
#include <stdexcept>
#include <string>
#include <vector>

#include "boxsal/core.hpp"

namespace boxsal {

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary PGM (P5, 1 channel) or PPM (P6, 3 channels) with maxval 255.
/// Values are scaled to [0, 1] by 1/255.
ImageGrid load_image(const std::filesystem::path& path);

/// Writes P5 or P6 depending on the channel count. Values are rounded to the
/// nearest 1/255 step, so grids already on that grid round-trip exactly.
void save_image(const ImageGrid& grid, const std::filesystem::path& path);

/// Rounds every value to the nearest multiple of 1/255.
ImageGrid quantize8(const ImageGrid& grid);

inline constexpr int kAnnotationSchemaVersion = 1;

/// JSON annotation file:
///   {"schema_version": 1,
///    "records": [{"image": "images/0000.ppm", "boxes": [[x0,y0,x1,y1], ...]}]}
/// Image paths are relative to the file's directory and kept verbatim as the
/// annotation's image_ref.
std::vector<BoxAnnotation> load_annotations(const std::filesystem::path& path);
std::vector<BoxAnnotation> parse_annotations(const std::string& text);
void save_annotations(const std::vector<BoxAnnotation>& annotations,
                      const std::filesystem::path& path);

/// Lists *.pgm / *.ppm files in `dir`, sorted by name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

}  // namespace boxsal

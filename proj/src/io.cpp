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

#include "boxsal/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace boxsal {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& is) {
  std::string tok;
  int ch;
  while ((ch = is.get()) != EOF) {
    if (ch == '#') {
      while ((ch = is.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

int header_int(std::istream& is, const fs::path& path, const char* field) {
  const std::string tok = header_token(is);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw DecodeError(path.string() + ": bad " + field + " '" + tok + "'");
  }
}

}  // namespace

ImageGrid load_image(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DecodeError("cannot open image " + path.string());
  const std::string magic = header_token(is);
  int channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw DecodeError(path.string() + ": not a binary PGM/PPM file");
  }
  const int width = header_int(is, path, "width");
  const int height = header_int(is, path, "height");
  const int maxval = header_int(is, path, "maxval");
  if (width < 1 || height < 1) {
    throw DecodeError(path.string() + ": non-positive dimensions");
  }
  if (maxval != 255) {
    throw DecodeError(path.string() + ": unsupported bit depth (maxval " +
                      std::to_string(maxval) + ")");
  }
  const std::size_t n = static_cast<std::size_t>(width) * height * channels;
  std::vector<unsigned char> bytes(n);
  is.read(reinterpret_cast<char*>(bytes.data()),
          static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n) {
    throw DecodeError(path.string() + ": truncated pixel data");
  }
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) data[i] = bytes[i] / 255.0;
  return ImageGrid(height, width, channels, std::move(data));
}

void save_image(const ImageGrid& grid, const fs::path& path) {
  if (grid.channels() != 1 && grid.channels() != 3) {
    throw DimensionError("save_image: only 1- or 3-channel grids are supported");
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write image " + path.string());
  os << (grid.channels() == 1 ? "P5" : "P6") << '\n'
     << grid.width() << ' ' << grid.height() << "\n255\n";
  std::vector<unsigned char> bytes(grid.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = static_cast<unsigned char>(std::lround(grid.values()[i] * 255.0));
  }
  os.write(reinterpret_cast<const char*>(bytes.data()),
           static_cast<std::streamsize>(bytes.size()));
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

ImageGrid quantize8(const ImageGrid& grid) {
  std::vector<double> q(grid.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    q[i] = static_cast<double>(std::lround(grid.values()[i] * 255.0)) / 255.0;
  }
  return ImageGrid(grid.height(), grid.width(), grid.channels(), std::move(q));
}

std::vector<BoxAnnotation> parse_annotations(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("annotations: malformed JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("records") || !doc["records"].is_array()) {
    throw ValidationError("annotations: expected an object with a 'records' array");
  }
  if (doc.contains("schema_version") &&
      doc["schema_version"] != kAnnotationSchemaVersion) {
    throw ValidationError("annotations: unsupported schema_version " +
                          doc["schema_version"].dump());
  }
  std::vector<BoxAnnotation> out;
  const auto& records = doc["records"];
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    const std::string where = "annotations: record " + std::to_string(i);
    if (!rec.is_object() || !rec.contains("image") || !rec["image"].is_string()) {
      throw ValidationError(where + " has no 'image' string");
    }
    const std::string image = rec["image"].get<std::string>();
    std::vector<BoundingBox> boxes;
    if (rec.contains("boxes")) {
      if (!rec["boxes"].is_array()) {
        throw ValidationError(where + " ('" + image + "'): 'boxes' must be an array");
      }
      for (const auto& b : rec["boxes"]) {
        if (!b.is_array() || b.size() != 4 ||
            !std::all_of(b.begin(), b.end(),
                         [](const json& v) { return v.is_number_integer(); })) {
          throw ValidationError(where + " ('" + image +
                                "'): each box must be [x0,y0,x1,y1] integers");
        }
        boxes.push_back({b[0].get<int>(), b[1].get<int>(), b[2].get<int>(),
                         b[3].get<int>()});
      }
    }
    try {
      out.emplace_back(image, std::move(boxes));
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  return out;
}

std::vector<BoxAnnotation> load_annotations(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open annotation file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_annotations(ss.str());
}

void save_annotations(const std::vector<BoxAnnotation>& annotations,
                      const fs::path& path) {
  json records = json::array();
  for (const auto& a : annotations) {
    json boxes = json::array();
    for (const auto& b : a.boxes()) boxes.push_back({b.x0, b.y0, b.x1, b.y1});
    records.push_back({{"image", a.image_ref()}, {"boxes", boxes}});
  }
  const json doc = {{"schema_version", kAnnotationSchemaVersion},
                    {"records", records}};
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << doc.dump(2) << '\n';
}

std::vector<fs::path> list_images(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext == ".pgm" || ext == ".ppm") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace boxsal

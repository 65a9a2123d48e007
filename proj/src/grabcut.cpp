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

#include "boxsal/grabcut.hpp"

#include <algorithm>
#include <cmath>
#include <spdlog/spdlog.h>

namespace boxsal {

namespace {

Color color_at(const ImageGrid& image, int y, int x) {
  if (image.channels() >= 3) {
    return {image.at(y, x, 0), image.at(y, x, 1), image.at(y, x, 2)};
  }
  const double v = image.at(y, x, 0);
  return {v, v, v};
}

std::vector<Color> colors_of(const ImageGrid& image) {
  std::vector<Color> out;
  out.reserve(image.pixel_count());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) out.push_back(color_at(image, y, x));
  }
  return out;
}

// Horizontal and vertical neighbour weights, indexed by the left/top pixel.
struct PairwiseWeights {
  std::vector<double> right;
  std::vector<double> down;
};

PairwiseWeights pairwise_weights(const ImageGrid& image,
                                 const std::vector<Color>& colors,
                                 double gamma_pairwise) {
  const int h = image.height();
  const int w = image.width();
  const double beta = contrast_beta(image);
  PairwiseWeights pw;
  pw.right.assign(colors.size(), 0.0);
  pw.down.assign(colors.size(), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      if (x + 1 < w) {
        pw.right[p] = gamma_pairwise *
                      std::exp(-beta * (colors[p] - colors[p + 1]).squaredNorm());
      }
      if (y + 1 < h) {
        pw.down[p] = gamma_pairwise *
                     std::exp(-beta * (colors[p] - colors[p + w]).squaredNorm());
      }
    }
  }
  return pw;
}

void check_extent(const ImageGrid& image, const Trimap& trimap) {
  if (image.height() != trimap.height || image.width() != trimap.width) {
    throw DimensionError("grabcut: image and trimap extents differ");
  }
}

}  // namespace

long long Trimap::count(TrimapLabel l) const {
  return std::count(labels.begin(), labels.end(), l);
}

Trimap init_trimap(const BoxAnnotation& annotation, int height, int width) {
  const ImageGrid boxes = rasterize_boxes(annotation, height, width);
  Trimap t{height, width, {}};
  t.labels.reserve(boxes.size());
  for (double v : boxes.values()) {
    t.labels.push_back(v > 0.0 ? TrimapLabel::ProbableForeground
                               : TrimapLabel::DefiniteBackground);
  }
  return t;
}

long long neighbour_pair_count(int height, int width) {
  return static_cast<long long>(height) * (width - 1) +
         static_cast<long long>(height - 1) * width;
}

double contrast_beta(const ImageGrid& image) {
  const int h = image.height();
  const int w = image.width();
  const long long pairs = neighbour_pair_count(h, w);
  if (pairs == 0) return 0.0;
  double sum = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Color c = color_at(image, y, x);
      if (x + 1 < w) sum += (c - color_at(image, y, x + 1)).squaredNorm();
      if (y + 1 < h) sum += (c - color_at(image, y + 1, x)).squaredNorm();
    }
  }
  const double mean = sum / static_cast<double>(pairs);
  return mean > 0.0 ? 1.0 / (2.0 * mean) : 0.0;
}

FlowNetwork build_graph(const ImageGrid& image, const Trimap& trimap,
                        const GmmModel& fg, const GmmModel& bg,
                        double gamma_pairwise) {
  check_extent(image, trimap);
  const int h = image.height();
  const int w = image.width();
  const auto colors = colors_of(image);
  const auto pw = pairwise_weights(image, colors, gamma_pairwise);

  std::vector<double> src(colors.size(), 0.0);
  std::vector<double> snk(colors.size(), 0.0);
  double finite_total = 0.0;
  for (std::size_t p = 0; p < colors.size(); ++p) {
    finite_total += 2.0 * (pw.right[p] + pw.down[p]);
    if (trimap.labels[p] == TrimapLabel::DefiniteBackground) continue;
    const double bg_nll = neg_log_likelihood(bg, colors[p]);
    const double fg_nll = neg_log_likelihood(fg, colors[p]);
    const double m = std::min(bg_nll, fg_nll);
    src[p] = bg_nll - m;
    snk[p] = fg_nll - m;
    finite_total += src[p] + snk[p];
  }
  const double hard = 1.0 + finite_total;

  FlowNetwork net(static_cast<int>(colors.size()));
  for (std::size_t p = 0; p < colors.size(); ++p) {
    const bool definite = trimap.labels[p] == TrimapLabel::DefiniteBackground;
    net.add_terminal_arcs(static_cast<int>(p), src[p], definite ? hard : snk[p]);
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int p = y * w + x;
      if (x + 1 < w) net.add_edge(p, p + 1, pw.right[p], pw.right[p]);
      if (y + 1 < h) net.add_edge(p, p + w, pw.down[p], pw.down[p]);
    }
  }
  return net;
}

double grabcut_energy(const ImageGrid& image, const std::vector<char>& fg_mask,
                      const GmmModel& fg, const GmmModel& bg,
                      double gamma_pairwise) {
  const int h = image.height();
  const int w = image.width();
  const auto colors = colors_of(image);
  const auto pw = pairwise_weights(image, colors, gamma_pairwise);
  double e = 0.0;
  for (std::size_t p = 0; p < colors.size(); ++p) {
    e += fg_mask[p] ? neg_log_likelihood(fg, colors[p])
                    : neg_log_likelihood(bg, colors[p]);
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      if (x + 1 < w && fg_mask[p] != fg_mask[p + 1]) e += pw.right[p];
      if (y + 1 < h && fg_mask[p] != fg_mask[p + w]) e += pw.down[p];
    }
  }
  return e;
}

GrabCutResult grabcut_iterate(const ImageGrid& image, const Trimap& trimap,
                              const GrabCutConfig& config) {
  check_extent(image, trimap);
  if (config.iters < 1) throw ConfigError("grabcut: iters must be >= 1");
  const auto colors = colors_of(image);
  const std::size_t n = colors.size();

  Trimap current = trimap;
  GrabCutResult result;
  auto finish = [&]() {
    std::vector<double> mask(n, 0.0);
    for (std::size_t p = 0; p < n; ++p) {
      if (current.labels[p] == TrimapLabel::ProbableForeground) mask[p] = 1.0;
    }
    result.label = {ImageGrid(image.height(), image.width(), 1, std::move(mask)),
                    LabelSource::GrabCut};
    return result;
  };

  if (current.count(TrimapLabel::ProbableForeground) == 0) {
    spdlog::warn("grabcut: empty initial foreground, emitting all-background");
    return finish();
  }

  GmmFitOptions fg_opts{config.k, config.em_iters, config.em_tol, config.seed,
                        config.covariance_floor};
  GmmFitOptions bg_opts = fg_opts;
  bg_opts.seed = config.seed + 1;
  GmmModel fg_model;
  GmmModel bg_model;

  for (int round = 0; round < config.iters; ++round) {
    std::vector<Color> fg_px;
    std::vector<Color> bg_px;
    for (std::size_t p = 0; p < n; ++p) {
      (current.labels[p] == TrimapLabel::ProbableForeground ? fg_px : bg_px)
          .push_back(colors[p]);
    }
    // A box covering the whole image leaves nothing to model the background.
    if (bg_px.empty()) break;

    // Warm starts keep each refit's likelihood at or above the previous
    // model's, so the round energy cannot increase.
    fg_model = fit_gmm(fg_px, fg_model, fg_opts).model;
    bg_model = fit_gmm(bg_px, bg_model, bg_opts).model;

    const FlowNetwork net =
        build_graph(image, current, fg_model, bg_model, config.gamma_pairwise);
    const MaxFlowResult cut = max_flow(net);

    Trimap next = current;
    long long fg_count = 0;
    for (std::size_t p = 0; p < n; ++p) {
      if (next.labels[p] == TrimapLabel::DefiniteBackground) continue;
      next.labels[p] = cut.labels[p] == CutSide::Source
                           ? TrimapLabel::ProbableForeground
                           : TrimapLabel::ProbableBackground;
      fg_count += cut.labels[p] == CutSide::Source;
    }
    result.iterations_used = round + 1;
    if (fg_count == 0) {
      spdlog::debug("grabcut: round {} emptied the foreground, keeping previous",
                    round + 1);
      break;
    }
    std::vector<char> fg_mask(n);
    for (std::size_t p = 0; p < n; ++p) {
      fg_mask[p] = next.labels[p] == TrimapLabel::ProbableForeground;
    }
    result.energy.push_back(grabcut_energy(image, fg_mask, fg_model, bg_model,
                                           config.gamma_pairwise));
    const bool unchanged = next.labels == current.labels;
    current = std::move(next);
    if (unchanged) break;
  }
  return finish();
}

GrabCutResult generate_pseudo_label(DatasetRecord& record,
                                    const GrabCutConfig& config) {
  record.validate();
  const Trimap trimap = init_trimap(record.annotation, record.image.height(),
                                    record.image.width());
  GrabCutResult result = grabcut_iterate(record.image, trimap, config);
  enforce_background(result.label.mask, record.annotation);
  record.pseudo_label = result.label;
  return result;
}

}  // namespace boxsal

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

#include "boxsal/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <spdlog/spdlog.h>

namespace boxsal {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void check_pair(const ImageGrid& pred, const ImageGrid& gt, const char* what) {
  if (pred.channels() != 1 || gt.channels() != 1 || !pred.same_extent(gt)) {
    throw DimensionError(std::string(what) +
                         ": expected 1-channel pred and gt of equal extent");
  }
}

inline bool is_fg(double g) { return g > 0.5; }

// Number of thresholds t in [0, 255] with p > t / 255.
int threshold_level(double p) {
  int g = static_cast<int>(std::ceil(p * 255.0)) - 1;
  g = std::clamp(g, -1, 255);
  while (g + 1 <= 255 && static_cast<double>(g + 1) / 255.0 < p) ++g;
  while (g >= 0 && !(static_cast<double>(g) / 255.0 < p)) --g;
  return g + 1;
}

// Counts per threshold: pixels predicted foreground, and those that are
// also gt foreground.
struct ThresholdCounts {
  std::array<double, kThresholdCount> predicted{};
  std::array<double, kThresholdCount> hits{};
  double gt_fg = 0.0;
  double n = 0.0;
};

ThresholdCounts threshold_counts(const ImageGrid& pred, const ImageGrid& gt) {
  std::array<double, kThresholdCount + 1> all{};
  std::array<double, kThresholdCount + 1> fg{};
  ThresholdCounts c;
  c.n = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const int lv = threshold_level(pred.values()[i]);
    all[lv] += 1.0;
    if (is_fg(gt.values()[i])) {
      fg[lv] += 1.0;
      c.gt_fg += 1.0;
    }
  }
  // A pixel with level L is on for thresholds 0..L-1.
  double run_all = 0.0;
  double run_fg = 0.0;
  for (int t = kThresholdCount - 1; t >= 0; --t) {
    run_all += all[t + 1];
    run_fg += fg[t + 1];
    c.predicted[t] = run_all;
    c.hits[t] = run_fg;
  }
  return c;
}

double enhanced(double g, double f, double mean_g, double mean_f) {
  const double pg = g - mean_g;
  const double pf = f - mean_f;
  const double xi = 2.0 * pg * pf / (pg * pg + pf * pf + kAlignmentEps);
  return (xi + 1.0) * (xi + 1.0) / 4.0;
}

struct Region {
  int y0, y1, x0, x1;
  std::size_t size() const {
    return static_cast<std::size_t>(std::max(0, y1 - y0)) *
           static_cast<std::size_t>(std::max(0, x1 - x0));
  }
};

double object_score(const ImageGrid& values_src, const ImageGrid& gt,
                    bool foreground, bool invert_pred) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (is_fg(gt.values()[i]) != foreground) continue;
    const double v = invert_pred ? 1.0 - values_src.values()[i]
                                 : values_src.values()[i];
    sum += v;
    ++n;
  }
  if (n == 0) return 0.0;
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (is_fg(gt.values()[i]) != foreground) continue;
    const double v = invert_pred ? 1.0 - values_src.values()[i]
                                 : values_src.values()[i];
    ss += (v - mean) * (v - mean);
  }
  const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
  return 2.0 * mean /
         (mean * mean + 1.0 + 2.0 * kObjectSigmaWeight * sd + kEps);
}

double region_ssim(const ImageGrid& pred, const ImageGrid& gt, const Region& r) {
  const std::size_t n = r.size();
  if (n == 0) return 0.0;
  const int w = pred.width();
  double sx = 0.0;
  double sy = 0.0;
  for (int y = r.y0; y < r.y1; ++y) {
    for (int x = r.x0; x < r.x1; ++x) {
      sx += pred.values()[static_cast<std::size_t>(y) * w + x];
      sy += is_fg(gt.values()[static_cast<std::size_t>(y) * w + x]) ? 1.0 : 0.0;
    }
  }
  const double mx = sx / static_cast<double>(n);
  const double my = sy / static_cast<double>(n);
  double vx = 0.0;
  double vy = 0.0;
  double cxy = 0.0;
  if (n > 1) {
    for (int y = r.y0; y < r.y1; ++y) {
      for (int x = r.x0; x < r.x1; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        const double dx = pred.values()[i] - mx;
        const double dy = (is_fg(gt.values()[i]) ? 1.0 : 0.0) - my;
        vx += dx * dx;
        vy += dy * dy;
        cxy += dx * dy;
      }
    }
    const double d = static_cast<double>(n - 1);
    vx /= d;
    vy /= d;
    cxy /= d;
  }
  const double alpha = 4.0 * mx * my * cxy;
  const double beta = (mx * mx + my * my) * (vx + vy);
  if (alpha != 0.0) return alpha / (beta + kEps);
  return beta == 0.0 ? 1.0 : 0.0;
}

double s_region(const ImageGrid& pred, const ImageGrid& gt) {
  const int h = gt.height();
  const int w = gt.width();
  double sy = 0.0;
  double sx = 0.0;
  double cnt = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (is_fg(gt.at(y, x))) {
        sy += y;
        sx += x;
        cnt += 1.0;
      }
    }
  }
  // Split point: rounded foreground centroid, one past it (half-even rounding).
  const int cx = static_cast<int>(std::nearbyint(sx / cnt)) + 1;
  const int cy = static_cast<int>(std::nearbyint(sy / cnt)) + 1;
  const double area = static_cast<double>(h) * w;
  const double w1 = static_cast<double>(cx) * cy / area;
  const double w2 = static_cast<double>(w - cx) * cy / area;
  const double w3 = static_cast<double>(cx) * (h - cy) / area;
  const double w4 = 1.0 - w1 - w2 - w3;
  return w1 * region_ssim(pred, gt, {0, cy, 0, cx}) +
         w2 * region_ssim(pred, gt, {0, cy, cx, w}) +
         w3 * region_ssim(pred, gt, {cy, h, 0, cx}) +
         w4 * region_ssim(pred, gt, {cy, h, cx, w});
}

}  // namespace

double mae(const ImageGrid& pred, const ImageGrid& gt) {
  check_pair(pred, gt, "mae");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    s += std::abs(pred.values()[i] - gt.values()[i]);
  }
  return s / static_cast<double>(pred.size());
}

double f_measure_mean(const ImageGrid& pred, const ImageGrid& gt) {
  check_pair(pred, gt, "f_measure_mean");
  const ThresholdCounts c = threshold_counts(pred, gt);
  if (c.gt_fg == 0.0) return 0.0;
  double total = 0.0;
  for (int t = 0; t < kThresholdCount; ++t) {
    const double tp = c.hits[t];
    const double precision = c.predicted[t] > 0.0 ? tp / c.predicted[t] : 0.0;
    const double recall = tp / c.gt_fg;
    const double denom = kFBetaSquared * precision + recall;
    total += denom > 0.0
                 ? (1.0 + kFBetaSquared) * precision * recall / denom
                 : 0.0;
  }
  return total / kThresholdCount;
}

double e_measure_mean(const ImageGrid& pred, const ImageGrid& gt) {
  check_pair(pred, gt, "e_measure_mean");
  const ThresholdCounts c = threshold_counts(pred, gt);
  const double n = c.n;
  double total = 0.0;
  for (int t = 0; t < kThresholdCount; ++t) {
    const double tp = c.hits[t];
    const double fp = c.predicted[t] - tp;
    const double fn = c.gt_fg - tp;
    const double tn = n - tp - fp - fn;
    if (c.gt_fg == 0.0) {
      total += tn / n;
    } else if (c.gt_fg == n) {
      total += tp / n;
    } else {
      const double mg = c.gt_fg / n;
      const double mf = c.predicted[t] / n;
      total += (tp * enhanced(1.0, 1.0, mg, mf) + fp * enhanced(0.0, 1.0, mg, mf) +
                fn * enhanced(1.0, 0.0, mg, mf) + tn * enhanced(0.0, 0.0, mg, mf)) /
               n;
    }
  }
  return total / kThresholdCount;
}

double s_measure(const ImageGrid& pred, const ImageGrid& gt) {
  check_pair(pred, gt, "s_measure");
  double fg = 0.0;
  double mean_pred = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    fg += is_fg(gt.values()[i]) ? 1.0 : 0.0;
    mean_pred += pred.values()[i];
  }
  const double n = static_cast<double>(gt.size());
  mean_pred /= n;
  const double u = fg / n;
  if (fg == 0.0) return 1.0 - mean_pred;
  if (fg == n) return mean_pred;
  const double object = u * object_score(pred, gt, true, false) +
                        (1.0 - u) * object_score(pred, gt, false, true);
  const double s = kStructureAlpha * object +
                   (1.0 - kStructureAlpha) * s_region(pred, gt);
  return std::clamp(s, 0.0, 1.0);
}

ImageMetrics evaluate_image(const ImageGrid& pred, const ImageGrid& gt) {
  ImageMetrics m;
  m.mae = mae(pred, gt);
  m.s_alpha = s_measure(pred, gt);
  m.degenerate = std::none_of(gt.values().begin(), gt.values().end(),
                              [](double g) { return is_fg(g); });
  if (!m.degenerate) {
    m.f_beta = f_measure_mean(pred, gt);
    m.e_xi = e_measure_mean(pred, gt);
  }
  return m;
}

MetricReport evaluate_dataset(const std::vector<ImageGrid>& preds,
                              const std::vector<ImageGrid>& gts) {
  if (preds.size() != gts.size()) {
    throw DimensionError("evaluate_dataset: " + std::to_string(preds.size()) +
                         " predictions vs " + std::to_string(gts.size()) +
                         " ground truths");
  }
  MetricReport r;
  r.per_image.resize(preds.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < preds.size(); ++i) {
    r.per_image[i] = evaluate_image(preds[i], gts[i]);
  }
  std::size_t counted = 0;
  for (std::size_t i = 0; i < r.per_image.size(); ++i) {
    const auto& m = r.per_image[i];
    r.mae += m.mae;
    r.s_alpha += m.s_alpha;
    if (m.degenerate) {
      spdlog::warn("evaluate: image {} has no foreground; excluded from F/E", i);
      continue;
    }
    r.f_beta += m.f_beta;
    r.e_xi += m.e_xi;
    ++counted;
  }
  if (!preds.empty()) {
    r.mae /= static_cast<double>(preds.size());
    r.s_alpha /= static_cast<double>(preds.size());
  }
  if (counted > 0) {
    r.f_beta /= static_cast<double>(counted);
    r.e_xi /= static_cast<double>(counted);
  }
  return r;
}

std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  std::string s(buf);
  if (s.rfind("0.", 0) == 0) s.erase(0, 1);
  return s;
}

}  // namespace boxsal

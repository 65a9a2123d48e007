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

#include <string>
#include <vector>

#include "boxsal/core.hpp"

namespace boxsal {

inline constexpr double kFBetaSquared = 0.3;
inline constexpr int kThresholdCount = 256;
/// Added to the E-measure alignment denominator.
inline constexpr double kAlignmentEps = 1e-12;
/// Object-score sigma weight (the structure measure's lambda = 0.5).
inline constexpr double kObjectSigmaWeight = 0.5;
/// Balance between object and region similarity in the S-measure.
inline constexpr double kStructureAlpha = 0.5;

/// Mean absolute error.
double mae(const ImageGrid& pred, const ImageGrid& gt);

/// Mean over t = 0..255 of F_beta for the map pred > t/255, beta^2 = 0.3.
/// Returns 0 when gt has no foreground.
double f_measure_mean(const ImageGrid& pred, const ImageGrid& gt);

/// Mean over t = 0..255 of the enhanced-alignment measure of pred > t/255.
/// For an all-background or all-foreground gt the per-threshold score is the
/// fraction of agreeing pixels.
double e_measure_mean(const ImageGrid& pred, const ImageGrid& gt);

/// Structure measure 0.5 * S_object + 0.5 * S_region, floored at 0.
/// All-zero gt gives 1 - mean(pred); all-one gt gives mean(pred).
double s_measure(const ImageGrid& pred, const ImageGrid& gt);

struct ImageMetrics {
  double mae = 0.0;
  double f_beta = 0.0;
  double e_xi = 0.0;
  double s_alpha = 0.0;
  /// gt without foreground: F and E are undefined and left out of means.
  bool degenerate = false;
};

struct MetricReport {
  double mae = 0.0;
  double f_beta = 0.0;
  double e_xi = 0.0;
  double s_alpha = 0.0;
  std::vector<ImageMetrics> per_image;
};

ImageMetrics evaluate_image(const ImageGrid& pred, const ImageGrid& gt);

MetricReport evaluate_dataset(const std::vector<ImageGrid>& preds,
                              const std::vector<ImageGrid>& gts);

/// ".796" style: three decimals without the leading zero.
std::string format_metric(double v);

}  // namespace boxsal

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

#include <vector>

#include "boxsal/core.hpp"

namespace boxsal {

/// Scalar objective plus its derivative with respect to every prediction
/// pixel (row-major, same extent as the prediction).
struct LossValue {
  double value = 0.0;
  std::vector<double> grad_s;
};

struct LossWeights {
  double alpha = 1.0;    // weight of CE(s, g)
  double beta = 1.0;     // weight of CE(g, s)
  double lambda1 = 1.0;  // smoothness term
  double lambda2 = 1.0;  // background term
  double edge_alpha = 10.0;
  double clamp_eps = 1e-7;
  /// Restricts the smoothness sum to pixels inside a box instead of only
  /// gating the edge weight.
  bool smoothness_box_only = false;

  void validate() const;
};

/// Charbonnier penalty floor used by smoothness_loss: sqrt(t^2 + 1e-6).
inline constexpr double kCharbonnierEps = 1e-6;

/// Mean over pixels of -[t log p + (1 - t) log(1 - p)]. Log arguments are
/// floored at clamp_eps, which is the same as clamping p to
/// [eps, 1 - eps] wherever the corresponding weight is nonzero.
LossValue cross_entropy(const ImageGrid& pred, const ImageGrid& target,
                        double clamp_eps = 1e-7);

/// alpha * CE(pred, pseudo) + beta * CE(pseudo, pred); grad_s covers both.
LossValue symmetric_ce(const ImageGrid& pred, const ImageGrid& pseudo,
                       const LossWeights& w);

/// Edge-aware smoothness summed over forward differences:
///   sum_{u,v} sum_{d in x,y} Psi(|d s| * exp(-edge_alpha * |d (y * I)|))
/// with Psi(t) = sqrt(t^2 + 1e-6). The last column has no x term and the
/// last row no y term. `image` may be RGB; its channel mean is used as I.
LossValue smoothness_loss(const ImageGrid& pred, const ImageGrid& box_mask,
                          const ImageGrid& image, const LossWeights& w);

/// gamma * CE(pred * (1 - box), 0) with gamma = HW / (HW - z). Returns 0
/// with a warning when the boxes cover every pixel.
LossValue background_loss(const ImageGrid& pred, const ImageGrid& box_mask,
                          const LossWeights& w);

double background_gamma(const ImageGrid& box_mask);

struct TotalLoss {
  LossValue total;
  double spn = 0.0;
  double fore = 0.0;
  double back = 0.0;
};

/// L_spn + lambda1 * L_fore + lambda2 * L_back.
TotalLoss total_loss(const ImageGrid& pred, const ImageGrid& pseudo,
                     const ImageGrid& box_mask, const ImageGrid& image,
                     const LossWeights& w);

}  // namespace boxsal

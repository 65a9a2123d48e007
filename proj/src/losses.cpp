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

#include "boxsal/losses.hpp"

#include <cmath>
#include <spdlog/spdlog.h>
#include <string>

namespace boxsal {

namespace {

void require_single_channel_match(const ImageGrid& a, const ImageGrid& b,
                                  const char* what) {
  if (a.channels() != 1 || b.channels() != 1 || !a.same_extent(b)) {
    throw DimensionError(std::string(what) +
                         ": expected two 1-channel grids of equal extent");
  }
}

// log with the argument floored at eps; derivative is zero on the floor.
inline double safe_log(double v, double eps) { return std::log(v > eps ? v : eps); }
inline double safe_inv(double v, double eps) { return v > eps ? 1.0 / v : 0.0; }

// Mean cross-entropy where `logp` sits inside the logarithms and `weight`
// multiplies them. Either gradient may be skipped by passing nullptr.
double ce_core(std::span<const double> logp, std::span<const double> weight,
               double eps, std::vector<double>* grad_logp,
               std::vector<double>* grad_weight) {
  const double inv_n = 1.0 / static_cast<double>(logp.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logp.size(); ++i) {
    const double p = logp[i];
    const double t = weight[i];
    const double lp = safe_log(p, eps);
    const double lq = safe_log(1.0 - p, eps);
    sum += -(t * lp + (1.0 - t) * lq);
    if (grad_logp) {
      (*grad_logp)[i] +=
          inv_n * (-t * safe_inv(p, eps) + (1.0 - t) * safe_inv(1.0 - p, eps));
    }
    if (grad_weight) (*grad_weight)[i] += inv_n * (lq - lp);
  }
  return sum * inv_n;
}

}  // namespace

void LossWeights::validate() const {
  if (alpha < 0 || beta < 0 || lambda1 < 0 || lambda2 < 0 || edge_alpha < 0) {
    throw ConfigError("LossWeights: weights must be nonnegative");
  }
  if (!(clamp_eps > 0.0 && clamp_eps < 0.5)) {
    throw ConfigError("LossWeights: clamp_eps must lie in (0, 0.5)");
  }
}

LossValue cross_entropy(const ImageGrid& pred, const ImageGrid& target,
                        double clamp_eps) {
  require_single_channel_match(pred, target, "cross_entropy");
  LossValue out;
  out.grad_s.assign(pred.size(), 0.0);
  out.value = ce_core(pred.values(), target.values(), clamp_eps, &out.grad_s,
                      nullptr);
  return out;
}

LossValue symmetric_ce(const ImageGrid& pred, const ImageGrid& pseudo,
                       const LossWeights& w) {
  require_single_channel_match(pred, pseudo, "symmetric_ce");
  LossValue fwd;
  fwd.grad_s.assign(pred.size(), 0.0);
  fwd.value = ce_core(pred.values(), pseudo.values(), w.clamp_eps,
                      &fwd.grad_s, nullptr);
  LossValue rev;
  rev.grad_s.assign(pred.size(), 0.0);
  rev.value = ce_core(pseudo.values(), pred.values(), w.clamp_eps, nullptr,
                      &rev.grad_s);
  LossValue out;
  out.value = w.alpha * fwd.value + w.beta * rev.value;
  out.grad_s.resize(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    out.grad_s[i] = w.alpha * fwd.grad_s[i] + w.beta * rev.grad_s[i];
  }
  return out;
}

LossValue smoothness_loss(const ImageGrid& pred, const ImageGrid& box_mask,
                          const ImageGrid& image, const LossWeights& w) {
  require_single_channel_match(pred, box_mask, "smoothness_loss");
  if (!image.same_extent(pred)) {
    throw DimensionError("smoothness_loss: image extent differs from pred");
  }
  const int h = pred.height();
  const int wd = pred.width();
  const ImageGrid intensity = image.intensity();
  std::vector<double> gated(pred.size());
  for (std::size_t i = 0; i < gated.size(); ++i) {
    gated[i] = box_mask.values()[i] * intensity.values()[i];
  }
  const auto s = pred.values();

  LossValue out;
  out.grad_s.assign(pred.size(), 0.0);
  auto term = [&](std::size_t p, std::size_t q) {
    const double ds = s[q] - s[p];
    const double e = std::exp(-w.edge_alpha * std::abs(gated[q] - gated[p]));
    const double psi = std::sqrt(ds * ds * e * e + kCharbonnierEps);
    out.value += psi;
    const double g = ds * e * e / psi;
    out.grad_s[q] += g;
    out.grad_s[p] -= g;
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < wd; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * wd + x;
      if (w.smoothness_box_only && box_mask.values()[p] <= 0.0) continue;
      if (x + 1 < wd) term(p, p + 1);
      if (y + 1 < h) term(p, p + wd);
    }
  }
  return out;
}

double background_gamma(const ImageGrid& box_mask) {
  const double hw = static_cast<double>(box_mask.pixel_count());
  double z = 0.0;
  for (double v : box_mask.values()) z += v;
  return hw / (hw - z);
}

LossValue background_loss(const ImageGrid& pred, const ImageGrid& box_mask,
                          const LossWeights& w) {
  require_single_channel_match(pred, box_mask, "background_loss");
  LossValue out;
  out.grad_s.assign(pred.size(), 0.0);
  double z = 0.0;
  for (double v : box_mask.values()) z += v;
  const double hw = static_cast<double>(pred.size());
  if (z >= hw) {
    spdlog::warn("background_loss: boxes cover the whole image, no background");
    return out;
  }
  const double gamma = hw / (hw - z);
  const auto s = pred.values();
  const auto y = box_mask.values();
  std::vector<double> masked(pred.size());
  for (std::size_t i = 0; i < masked.size(); ++i) masked[i] = s[i] * (1.0 - y[i]);
  const std::vector<double> zeros(pred.size(), 0.0);
  std::vector<double> grad_masked(pred.size(), 0.0);
  out.value = gamma * ce_core(masked, zeros, w.clamp_eps, &grad_masked, nullptr);
  for (std::size_t i = 0; i < masked.size(); ++i) {
    out.grad_s[i] = gamma * grad_masked[i] * (1.0 - y[i]);
  }
  return out;
}

TotalLoss total_loss(const ImageGrid& pred, const ImageGrid& pseudo,
                     const ImageGrid& box_mask, const ImageGrid& image,
                     const LossWeights& w) {
  TotalLoss out;
  const LossValue spn = symmetric_ce(pred, pseudo, w);
  out.spn = spn.value;
  out.total = spn;
  // Components are always evaluated so disabled terms still show up in logs.
  {
    const LossValue fore = smoothness_loss(pred, box_mask, image, w);
    out.fore = fore.value;
    out.total.value += w.lambda1 * fore.value;
    for (std::size_t i = 0; i < fore.grad_s.size(); ++i) {
      out.total.grad_s[i] += w.lambda1 * fore.grad_s[i];
    }
  }
  {
    const LossValue back = background_loss(pred, box_mask, w);
    out.back = back.value;
    out.total.value += w.lambda2 * back.value;
    for (std::size_t i = 0; i < back.grad_s.size(); ++i) {
      out.total.grad_s[i] += w.lambda2 * back.grad_s[i];
    }
  }
  return out;
}

}  // namespace boxsal

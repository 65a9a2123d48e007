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

#include "boxsal/gmm.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <spdlog/spdlog.h>
#include <stdexcept>

namespace boxsal {

namespace {

const double kLogTwoPi = std::log(2.0 * std::numbers::pi);

double component_log_density(const GaussianComponent& c, const Color& x) {
  const Eigen::Vector3d d = x - c.mean;
  return -1.5 * kLogTwoPi - 0.5 * c.log_det - 0.5 * d.dot(c.inverse * d);
}

int count_distinct(std::span<const Color> pixels, int limit) {
  std::vector<std::array<double, 3>> v;
  v.reserve(pixels.size());
  for (const auto& p : pixels) v.push_back({p[0], p[1], p[2]});
  std::sort(v.begin(), v.end());
  const auto n = std::unique(v.begin(), v.end()) - v.begin();
  return static_cast<int>(std::min<std::ptrdiff_t>(n, limit));
}

std::vector<Color> kmeans_pp_seeds(std::span<const Color> pixels, int k,
                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, pixels.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Color> centers;
  centers.push_back(pixels[pick(rng)]);
  std::vector<double> d2(pixels.size(), std::numeric_limits<double>::max());
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      d2[i] = std::min(d2[i], (pixels[i] - centers.back()).squaredNorm());
      total += d2[i];
    }
    const double target = unit(rng) * total;
    double acc = 0.0;
    std::size_t chosen = pixels.size() - 1;
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      acc += d2[i];
      if (acc > target && d2[i] > 0.0) {
        chosen = i;
        break;
      }
    }
    // Rounding can leave `chosen` on an existing centre; fall back to the
    // farthest point.
    if (d2[chosen] == 0.0) {
      chosen = static_cast<std::size_t>(
          std::max_element(d2.begin(), d2.end()) - d2.begin());
    }
    centers.push_back(pixels[chosen]);
  }
  return centers;
}

GmmModel model_from_hard_assignment(std::span<const Color> pixels,
                                    const std::vector<Color>& centers,
                                    double floor) {
  const std::size_t k = centers.size();
  std::vector<double> count(k, 0.0);
  std::vector<Eigen::Vector3d> sum(k, Eigen::Vector3d::Zero());
  std::vector<Eigen::Matrix3d> outer(k, Eigen::Matrix3d::Zero());
  for (const auto& p : pixels) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::max();
    for (std::size_t j = 0; j < k; ++j) {
      const double d = (p - centers[j]).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    count[best] += 1.0;
    sum[best] += p;
    outer[best] += p * p.transpose();
  }
  std::vector<GaussianComponent> comps;
  const double n = static_cast<double>(pixels.size());
  for (std::size_t j = 0; j < k; ++j) {
    if (count[j] == 0.0) {
      comps.push_back(make_component(0.0, centers[j], Eigen::Matrix3d::Zero(),
                                     floor));
      continue;
    }
    const Eigen::Vector3d mean = sum[j] / count[j];
    const Eigen::Matrix3d scatter =
        outer[j] / count[j] - mean * mean.transpose();
    comps.push_back(make_component(count[j] / n, mean, scatter, floor));
  }
  return GmmModel(std::move(comps));
}

// One E-step: fills responsibilities and returns the data log-likelihood.
double expectation(std::span<const Color> pixels, const GmmModel& model,
                   std::vector<double>& resp) {
  const std::size_t k = model.size();
  resp.assign(pixels.size() * k, 0.0);
  std::vector<double> logp(k);
  double ll = 0.0;
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      const auto& c = model.components()[j];
      logp[j] = c.weight > 0.0
                    ? std::log(c.weight) + component_log_density(c, pixels[i])
                    : -std::numeric_limits<double>::infinity();
      mx = std::max(mx, logp[j]);
    }
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += std::exp(logp[j] - mx);
    const double lse = mx + std::log(s);
    ll += lse;
    for (std::size_t j = 0; j < k; ++j) {
      resp[i * k + j] = std::exp(logp[j] - lse);
    }
  }
  return ll;
}

GmmModel maximization(std::span<const Color> pixels, const GmmModel& prev,
                      const std::vector<double>& resp, double floor) {
  const std::size_t k = prev.size();
  const double n = static_cast<double>(pixels.size());
  std::vector<GaussianComponent> comps;
  comps.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    double nk = 0.0;
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      nk += resp[i * k + j];
      sum += resp[i * k + j] * pixels[i];
    }
    if (nk <= 0.0) {
      GaussianComponent dead = prev.components()[j];
      dead.weight = 0.0;
      comps.push_back(dead);
      continue;
    }
    const Eigen::Vector3d mean = sum / nk;
    Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      const Eigen::Vector3d d = pixels[i] - mean;
      scatter += resp[i * k + j] * (d * d.transpose());
    }
    comps.push_back(make_component(nk / n, mean, scatter / nk, floor));
  }
  return GmmModel(std::move(comps));
}

GmmFit run_em(std::span<const Color> pixels, GmmModel model,
              const GmmFitOptions& options) {
  GmmFit fit;
  fit.k_used = static_cast<int>(model.size());
  std::vector<double> resp;
  const double n = static_cast<double>(pixels.size());
  for (int iter = 0;; ++iter) {
    const double ll = expectation(pixels, model, resp);
    if (!fit.log_likelihood.empty()) {
      const double gain = ll - fit.log_likelihood.back();
#ifdef BOXSAL_EM_CHECKS
      if (gain < -1e-8 * std::max(1.0, std::abs(ll))) {
        throw std::logic_error("fit_gmm: EM log-likelihood decreased");
      }
#endif
      fit.log_likelihood.push_back(ll);
      if (gain / n < options.tol) break;
    } else {
      fit.log_likelihood.push_back(ll);
    }
    if (iter >= options.max_iters) break;
    model = maximization(pixels, model, resp, options.covariance_floor);
  }
  fit.model = std::move(model);
  return fit;
}

}  // namespace

double GmmModel::log_density(const Color& x) const {
  double mx = -std::numeric_limits<double>::infinity();
  std::array<double, 64> buf{};
  std::vector<double> heap;
  double* logp = buf.data();
  if (components_.size() > buf.size()) {
    heap.resize(components_.size());
    logp = heap.data();
  }
  for (std::size_t j = 0; j < components_.size(); ++j) {
    const auto& c = components_[j];
    logp[j] = c.weight > 0.0 ? std::log(c.weight) + component_log_density(c, x)
                             : -std::numeric_limits<double>::infinity();
    mx = std::max(mx, logp[j]);
  }
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (std::size_t j = 0; j < components_.size(); ++j) {
    s += std::exp(logp[j] - mx);
  }
  return mx + std::log(s);
}

GaussianComponent make_component(double weight, const Eigen::Vector3d& mean,
                                 const Eigen::Matrix3d& scatter,
                                 double covariance_floor) {
  const Eigen::Matrix3d sym = 0.5 * (scatter + scatter.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(sym);
  Eigen::Vector3d lambda = eig.eigenvalues();
  for (int i = 0; i < 3; ++i) lambda[i] = std::max(lambda[i], covariance_floor);
  const Eigen::Matrix3d& v = eig.eigenvectors();
  GaussianComponent c;
  c.weight = weight;
  c.mean = mean;
  c.covariance = v * lambda.asDiagonal() * v.transpose();
  c.inverse = v * lambda.cwiseInverse().asDiagonal() * v.transpose();
  c.log_det = lambda.array().log().sum();
  return c;
}

GmmFit fit_gmm(std::span<const Color> pixels, const GmmFitOptions& options) {
  if (pixels.empty()) throw std::invalid_argument("fit_gmm: no pixels");
  if (options.k < 1) throw std::invalid_argument("fit_gmm: k must be >= 1");
  const int k = count_distinct(pixels, options.k);
  if (k < options.k) {
    spdlog::warn("fit_gmm: only {} distinct colours, reducing k from {} to {}",
                 k, options.k, k);
  }
  const auto centers = kmeans_pp_seeds(pixels, k, options.seed);
  return run_em(pixels,
                model_from_hard_assignment(pixels, centers,
                                           options.covariance_floor),
                options);
}

GmmFit fit_gmm(std::span<const Color> pixels, const GmmModel& init,
               const GmmFitOptions& options) {
  if (pixels.empty()) throw std::invalid_argument("fit_gmm: no pixels");
  if (init.size() == 0) return fit_gmm(pixels, options);
  return run_em(pixels, init, options);
}

double neg_log_likelihood(const GmmModel& gmm, const Color& pixel) {
  const double nll = -gmm.log_density(pixel);
  if (!(nll < kMaxNegLogLikelihood)) return kMaxNegLogLikelihood;
  return nll;
}

}  // namespace boxsal

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

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

namespace boxsal {

using Color = Eigen::Vector3d;

struct GaussianComponent {
  double weight = 0.0;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d inverse = Eigen::Matrix3d::Identity();
  double log_det = 0.0;
};

/// Full-covariance colour mixture. Weights sum to one; every covariance has
/// eigenvalues at or above the fit's floor.
class GmmModel {
 public:
  GmmModel() = default;
  explicit GmmModel(std::vector<GaussianComponent> components)
      : components_(std::move(components)) {}

  const std::vector<GaussianComponent>& components() const {
    return components_;
  }
  std::size_t size() const { return components_.size(); }

  /// log sum_k w_k N(x; mu_k, Sigma_k), evaluated with log-sum-exp.
  double log_density(const Color& x) const;

 private:
  std::vector<GaussianComponent> components_;
};

struct GmmFitOptions {
  int k = 5;
  int max_iters = 20;
  /// Stop once the mean per-pixel log-likelihood improves by less than this.
  double tol = 1e-6;
  std::uint64_t seed = 17;
  /// Minimum covariance eigenvalue.
  double covariance_floor = 1e-5;
};

struct GmmFit {
  GmmModel model;
  /// Total data log-likelihood, one entry per parameter set visited. The
  /// last entry belongs to `model`.
  std::vector<double> log_likelihood;
  int k_used = 0;
};

/// EM from k-means++ seeding. If there are fewer distinct colours than k,
/// k is reduced to the distinct count and a warning is logged.
GmmFit fit_gmm(std::span<const Color> pixels, const GmmFitOptions& options);

/// EM warm-started from `init` (same component count). Used by GrabCut so
/// that refits never lower the likelihood of the previous model.
GmmFit fit_gmm(std::span<const Color> pixels, const GmmModel& init,
               const GmmFitOptions& options);

/// Upper bound returned by neg_log_likelihood.
inline constexpr double kMaxNegLogLikelihood = 1e6;

double neg_log_likelihood(const GmmModel& gmm, const Color& pixel);

/// Projects a symmetric matrix onto {eigenvalues >= floor} and fills the
/// cached inverse and log-determinant.
GaussianComponent make_component(double weight, const Eigen::Vector3d& mean,
                                 const Eigen::Matrix3d& scatter,
                                 double covariance_floor);

}  // namespace boxsal

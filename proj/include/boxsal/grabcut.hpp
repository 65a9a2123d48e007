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

#include <cstdint>
#include <vector>

#include "boxsal/core.hpp"
#include "boxsal/gmm.hpp"
#include "boxsal/maxflow.hpp"

namespace boxsal {

enum class TrimapLabel : std::uint8_t {
  DefiniteBackground,
  ProbableForeground,
  ProbableBackground,
};

/// Per-pixel constraint map. Pixels outside every box are
/// DefiniteBackground and stay that way for the whole segmentation.
struct Trimap {
  int height = 0;
  int width = 0;
  std::vector<TrimapLabel> labels;

  TrimapLabel at(int y, int x) const {
    return labels[static_cast<std::size_t>(y) * width + x];
  }
  long long count(TrimapLabel l) const;
};

Trimap init_trimap(const BoxAnnotation& annotation, int height, int width);

struct GrabCutConfig {
  int k = 5;
  int iters = 5;
  double gamma_pairwise = 50.0;
  int em_iters = 10;
  double em_tol = 1e-6;
  std::uint64_t seed = 17;
  double covariance_floor = 1e-5;
};

/// beta = 1 / (2 * mean ||c_p - c_q||^2) over all 4-neighbour pairs, or 0 for
/// an image without contrast.
double contrast_beta(const ImageGrid& image);

/// Number of unordered 4-neighbour pairs on an h x w grid.
long long neighbour_pair_count(int height, int width);

/// Pixel graph for one GrabCut round. For Probable pixels the terminal arcs
/// carry the background (source arc) and foreground (sink arc) negative log
/// likelihoods, both shifted by their per-pixel minimum so capacities stay
/// nonnegative; the shift is constant per pixel and leaves the minimum cut
/// unchanged. DefiniteBackground pixels get a sink arc of
/// 1 + (sum of all finite capacities), which no minimum cut can afford.
FlowNetwork build_graph(const ImageGrid& image, const Trimap& trimap,
                        const GmmModel& fg, const GmmModel& bg,
                        double gamma_pairwise);

/// Data + pairwise energy of a labelling (1 = foreground) under the given
/// models, with unshifted negative log-likelihoods.
double grabcut_energy(const ImageGrid& image, const std::vector<char>& fg_mask,
                      const GmmModel& fg, const GmmModel& bg,
                      double gamma_pairwise);

struct GrabCutResult {
  PseudoLabel label;
  int iterations_used = 0;
  /// Energy of the labelling produced by each completed round.
  std::vector<double> energy;
};

/// Alternates GMM refits and minimum cuts. Stops after `config.iters` rounds
/// or when a round leaves the labelling unchanged. A round that would empty
/// the foreground is discarded and the previous labelling returned.
GrabCutResult grabcut_iterate(const ImageGrid& image, const Trimap& trimap,
                              const GrabCutConfig& config);

/// Runs GrabCut on the whole image with the multi-box trimap and stores the
/// result in `record.pseudo_label`.
GrabCutResult generate_pseudo_label(DatasetRecord& record,
                                    const GrabCutConfig& config);

}  // namespace boxsal

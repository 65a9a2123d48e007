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

// Dense CHW kernels for the saliency network. Every parallel kernel has a
// *_serial twin kept as the reference for tests and benchmarks. Both visit
// each output element's terms in the same order, so results are bitwise
// equal for any thread count.

#include <cstddef>
#include <span>

namespace boxsal::kernels {

struct ConvShape {
  int in_channels = 1;
  int out_channels = 1;
  int height = 1;  // input
  int width = 1;   // input
  int kernel = 3;
  int stride = 1;

  int pad() const { return kernel / 2; }
  int out_height() const { return (height + 2 * pad() - kernel) / stride + 1; }
  int out_width() const { return (width + 2 * pad() - kernel) / stride + 1; }
  std::size_t in_size() const {
    return static_cast<std::size_t>(in_channels) * height * width;
  }
  std::size_t out_size() const {
    return static_cast<std::size_t>(out_channels) * out_height() * out_width();
  }
  std::size_t weight_count() const {
    return static_cast<std::size_t>(out_channels) * in_channels * kernel *
           kernel;
  }
};

// Zero-padded cross-correlation. `out` is overwritten.
void conv2d_forward(const ConvShape& s, std::span<const double> in,
                    std::span<const double> weight,
                    std::span<const double> bias, std::span<double> out);
void conv2d_forward_serial(const ConvShape& s, std::span<const double> in,
                           std::span<const double> weight,
                           std::span<const double> bias, std::span<double> out);

// Accumulates (+=) into grad_weight, grad_bias and, when non-empty, grad_in.
void conv2d_backward(const ConvShape& s, std::span<const double> in,
                     std::span<const double> weight,
                     std::span<const double> grad_out, std::span<double> grad_in,
                     std::span<double> grad_weight, std::span<double> grad_bias);
void conv2d_backward_serial(const ConvShape& s, std::span<const double> in,
                            std::span<const double> weight,
                            std::span<const double> grad_out,
                            std::span<double> grad_in,
                            std::span<double> grad_weight,
                            std::span<double> grad_bias);

void relu_inplace(std::span<double> x);
// grad *= (activation > 0)
void relu_backward_inplace(std::span<const double> activation,
                           std::span<double> grad);

// Nearest-neighbour x2 upsampling of a C x h x w map into C x 2h x 2w.
void upsample2x(int channels, int height, int width, std::span<const double> in,
                std::span<double> out);
// Adjoint of upsample2x: sums each 2x2 block of `grad_out` into `grad_in` (+=).
void upsample2x_backward(int channels, int height, int width,
                         std::span<const double> grad_out,
                         std::span<double> grad_in);

}  // namespace boxsal::kernels

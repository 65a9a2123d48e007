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

#include "boxsal/kernels.hpp"

#include <algorithm>
#include <stdexcept>

namespace boxsal::kernels {

namespace {

void check_forward(const ConvShape& s, std::span<const double> in,
                   std::span<const double> weight,
                   std::span<const double> bias, std::span<const double> out) {
  if (in.size() != s.in_size() || weight.size() != s.weight_count() ||
      bias.size() != static_cast<std::size_t>(s.out_channels) ||
      out.size() != s.out_size()) {
    throw std::invalid_argument("conv2d: buffer sizes do not match shape");
  }
}

void check_backward(const ConvShape& s, std::span<const double> in,
                    std::span<const double> weight,
                    std::span<const double> grad_out,
                    std::span<const double> grad_in,
                    std::span<const double> grad_weight,
                    std::span<const double> grad_bias) {
  if (in.size() != s.in_size() || weight.size() != s.weight_count() ||
      grad_out.size() != s.out_size() ||
      (!grad_in.empty() && grad_in.size() != s.in_size()) ||
      grad_weight.size() != s.weight_count() ||
      grad_bias.size() != static_cast<std::size_t>(s.out_channels)) {
    throw std::invalid_argument("conv2d_backward: buffer sizes do not match");
  }
}

// Range of kernel taps [lo, hi) that land inside [0, extent) for output
// coordinate o.
inline void tap_range(int o, int stride, int pad, int kernel, int extent,
                      int& lo, int& hi) {
  const int origin = o * stride - pad;
  lo = std::max(0, -origin);
  hi = std::min(kernel, extent - origin);
}

}  // namespace

void conv2d_forward_serial(const ConvShape& s, std::span<const double> in,
                           std::span<const double> weight,
                           std::span<const double> bias,
                           std::span<double> out) {
  check_forward(s, in, weight, bias, out);
  const int oh = s.out_height();
  const int ow = s.out_width();
  const int k = s.kernel;
  for (int co = 0; co < s.out_channels; ++co) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double acc = bias[co];
        for (int ci = 0; ci < s.in_channels; ++ci) {
          for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
              const int iy = oy * s.stride - s.pad() + ky;
              const int ix = ox * s.stride - s.pad() + kx;
              if (iy < 0 || iy >= s.height || ix < 0 || ix >= s.width) continue;
              acc += weight[((co * s.in_channels + ci) * k + ky) * k + kx] *
                     in[(ci * s.height + iy) * s.width + ix];
            }
          }
        }
        out[(co * oh + oy) * ow + ox] = acc;
      }
    }
  }
}

void conv2d_forward(const ConvShape& s, std::span<const double> in,
                    std::span<const double> weight,
                    std::span<const double> bias, std::span<double> out) {
  check_forward(s, in, weight, bias, out);
  const int oh = s.out_height();
  const int ow = s.out_width();
  const int k = s.kernel;
  const int pad = s.pad();
  const std::size_t plane = static_cast<std::size_t>(s.height) * s.width;

#pragma omp parallel for schedule(static)
  for (int co = 0; co < s.out_channels; ++co) {
    const double* wco = weight.data() +
                        static_cast<std::size_t>(co) * s.in_channels * k * k;
    double* oplane = out.data() + static_cast<std::size_t>(co) * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
      int ky0, ky1;
      tap_range(oy, s.stride, pad, k, s.height, ky0, ky1);
      const int iy0 = oy * s.stride - pad;
      for (int ox = 0; ox < ow; ++ox) {
        int kx0, kx1;
        tap_range(ox, s.stride, pad, k, s.width, kx0, kx1);
        const int ix0 = ox * s.stride - pad;
        double acc = bias[co];
        for (int ci = 0; ci < s.in_channels; ++ci) {
          const double* ip = in.data() + ci * plane;
          const double* wp = wco + static_cast<std::size_t>(ci) * k * k;
          for (int ky = ky0; ky < ky1; ++ky) {
            const double* row = ip + static_cast<std::size_t>(iy0 + ky) * s.width;
            for (int kx = kx0; kx < kx1; ++kx) {
              acc += wp[ky * k + kx] * row[ix0 + kx];
            }
          }
        }
        oplane[oy * ow + ox] = acc;
      }
    }
  }
}

void conv2d_backward_serial(const ConvShape& s, std::span<const double> in,
                            std::span<const double> weight,
                            std::span<const double> grad_out,
                            std::span<double> grad_in,
                            std::span<double> grad_weight,
                            std::span<double> grad_bias) {
  check_backward(s, in, weight, grad_out, grad_in, grad_weight, grad_bias);
  const int oh = s.out_height();
  const int ow = s.out_width();
  const int k = s.kernel;
  for (int co = 0; co < s.out_channels; ++co) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const double g = grad_out[(co * oh + oy) * ow + ox];
        grad_bias[co] += g;
        for (int ci = 0; ci < s.in_channels; ++ci) {
          for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
              const int iy = oy * s.stride - s.pad() + ky;
              const int ix = ox * s.stride - s.pad() + kx;
              if (iy < 0 || iy >= s.height || ix < 0 || ix >= s.width) continue;
              const std::size_t wi = ((co * s.in_channels + ci) * k + ky) * k + kx;
              const std::size_t ii = (ci * s.height + iy) * s.width + ix;
              grad_weight[wi] += g * in[ii];
              if (!grad_in.empty()) grad_in[ii] += weight[wi] * g;
            }
          }
        }
      }
    }
  }
}

void conv2d_backward(const ConvShape& s, std::span<const double> in,
                     std::span<const double> weight,
                     std::span<const double> grad_out, std::span<double> grad_in,
                     std::span<double> grad_weight,
                     std::span<double> grad_bias) {
  check_backward(s, in, weight, grad_out, grad_in, grad_weight, grad_bias);
  const int oh = s.out_height();
  const int ow = s.out_width();
  const int k = s.kernel;
  const int pad = s.pad();
  const std::size_t plane = static_cast<std::size_t>(s.height) * s.width;
  const std::size_t oplane = static_cast<std::size_t>(oh) * ow;

  // Weight and bias gradients: one output channel per thread.
#pragma omp parallel for schedule(static)
  for (int co = 0; co < s.out_channels; ++co) {
    const double* go = grad_out.data() + co * oplane;
    double* gw = grad_weight.data() +
                 static_cast<std::size_t>(co) * s.in_channels * k * k;
    for (int oy = 0; oy < oh; ++oy) {
      int ky0, ky1;
      tap_range(oy, s.stride, pad, k, s.height, ky0, ky1);
      const int iy0 = oy * s.stride - pad;
      for (int ox = 0; ox < ow; ++ox) {
        int kx0, kx1;
        tap_range(ox, s.stride, pad, k, s.width, kx0, kx1);
        const int ix0 = ox * s.stride - pad;
        const double g = go[oy * ow + ox];
        grad_bias[co] += g;
        for (int ci = 0; ci < s.in_channels; ++ci) {
          const double* ip = in.data() + ci * plane;
          double* gwp = gw + static_cast<std::size_t>(ci) * k * k;
          for (int ky = ky0; ky < ky1; ++ky) {
            const double* row = ip + static_cast<std::size_t>(iy0 + ky) * s.width;
            for (int kx = kx0; kx < kx1; ++kx) {
              gwp[ky * k + kx] += g * row[ix0 + kx];
            }
          }
        }
      }
    }
  }

  if (grad_in.empty()) return;
  // Input gradient: one input channel per thread, same term order as the
  // serial scatter.
#pragma omp parallel for schedule(static)
  for (int ci = 0; ci < s.in_channels; ++ci) {
    double* gi = grad_in.data() + ci * plane;
    for (int co = 0; co < s.out_channels; ++co) {
      const double* go = grad_out.data() + co * oplane;
      const double* wp = weight.data() +
                         (static_cast<std::size_t>(co) * s.in_channels + ci) * k * k;
      for (int oy = 0; oy < oh; ++oy) {
        int ky0, ky1;
        tap_range(oy, s.stride, pad, k, s.height, ky0, ky1);
        const int iy0 = oy * s.stride - pad;
        for (int ox = 0; ox < ow; ++ox) {
          int kx0, kx1;
          tap_range(ox, s.stride, pad, k, s.width, kx0, kx1);
          const int ix0 = ox * s.stride - pad;
          const double g = go[oy * ow + ox];
          for (int ky = ky0; ky < ky1; ++ky) {
            double* row = gi + static_cast<std::size_t>(iy0 + ky) * s.width;
            for (int kx = kx0; kx < kx1; ++kx) {
              row[ix0 + kx] += wp[ky * k + kx] * g;
            }
          }
        }
      }
    }
  }
}

void relu_inplace(std::span<double> x) {
  for (double& v : x) v = v > 0.0 ? v : 0.0;
}

void relu_backward_inplace(std::span<const double> activation,
                           std::span<double> grad) {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!(activation[i] > 0.0)) grad[i] = 0.0;
  }
}

void upsample2x(int channels, int height, int width, std::span<const double> in,
                std::span<double> out) {
  const int ow = 2 * width;
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < 2 * height; ++y) {
      const double* src = in.data() + (static_cast<std::size_t>(c) * height + y / 2) * width;
      double* dst = out.data() + (static_cast<std::size_t>(c) * 2 * height + y) * ow;
      for (int x = 0; x < ow; ++x) dst[x] = src[x / 2];
    }
  }
}

void upsample2x_backward(int channels, int height, int width,
                         std::span<const double> grad_out,
                         std::span<double> grad_in) {
  const int ow = 2 * width;
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < 2 * height; ++y) {
      const double* src = grad_out.data() + (static_cast<std::size_t>(c) * 2 * height + y) * ow;
      double* dst = grad_in.data() + (static_cast<std::size_t>(c) * height + y / 2) * width;
      for (int x = 0; x < ow; ++x) dst[x / 2] += src[x];
    }
  }
}

}  // namespace boxsal::kernels

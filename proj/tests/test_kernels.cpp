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

#include <omp.h>

#include <random>
#include <vector>

#include "boxsal/kernels.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace boxsal::kernels;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST_CASE("conv output extents") {
  ConvShape s{2, 3, 7, 5, 3, 2};
  CHECK(s.out_height() == 4);
  CHECK(s.out_width() == 3);
  s.stride = 1;
  CHECK(s.out_height() == 7);
  CHECK(s.weight_count() == 54);
}

TEST_CASE("all-ones 3x3 kernel sums the zero-padded neighbourhood") {
  ConvShape s{1, 1, 3, 3, 3, 1};
  std::vector<double> in{1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<double> w(9, 1.0), b{0.5}, out(9);
  conv2d_forward(s, in, w, b, out);
  CHECK(out[4] == 45.5);
  CHECK(out[0] == 1 + 2 + 4 + 5 + 0.5);
  CHECK(out[8] == 5 + 6 + 8 + 9 + 0.5);
}

TEST_CASE("parallel kernels are bitwise equal to the serial reference") {
  std::mt19937_64 rng(10);
  for (int threads : {1, 2, 4}) {
    omp_set_num_threads(threads);
    for (int stride : {1, 2}) {
      ConvShape s{3, 5, 9, 6, 3, stride};
      const auto in = random_vec(rng, s.in_size());
      const auto w = random_vec(rng, s.weight_count());
      const auto b = random_vec(rng, 5);
      std::vector<double> o1(s.out_size()), o2(s.out_size());
      conv2d_forward(s, in, w, b, o1);
      conv2d_forward_serial(s, in, w, b, o2);
      CHECK(o1 == o2);

      const auto go = random_vec(rng, s.out_size());
      std::vector<double> gi1(s.in_size(), 0.25), gi2(s.in_size(), 0.25);
      std::vector<double> gw1(w.size(), 0.5), gw2(w.size(), 0.5);
      std::vector<double> gb1(5, 0.0), gb2(5, 0.0);
      conv2d_backward(s, in, w, go, gi1, gw1, gb1);
      conv2d_backward_serial(s, in, w, go, gi2, gw2, gb2);
      CHECK(gi1 == gi2);
      CHECK(gw1 == gw2);
      CHECK(gb1 == gb2);
    }
  }
  omp_set_num_threads(1);
}

TEST_CASE("conv backward matches central differences") {
  std::mt19937_64 rng(4);
  for (int stride : {1, 2}) {
    ConvShape s{2, 3, 6, 5, 3, stride};
    const auto in = random_vec(rng, s.in_size());
    const auto w = random_vec(rng, s.weight_count());
    const auto b = random_vec(rng, 3);
    const auto r = random_vec(rng, s.out_size());
    auto loss = [&](const std::vector<double>& x, const std::vector<double>& ww,
                    const std::vector<double>& bb) {
      std::vector<double> out(s.out_size());
      conv2d_forward_serial(s, x, ww, bb, out);
      return dot(out, r);
    };
    std::vector<double> gi(s.in_size()), gw(w.size()), gb(3);
    conv2d_backward(s, in, w, r, gi, gw, gb);
    CHECK(oracle::relative_error(
              gi, oracle::numeric_gradient([&](const auto& x) { return loss(x, w, b); }, in, 1e-6)) < 1e-8);
    CHECK(oracle::relative_error(
              gw, oracle::numeric_gradient([&](const auto& x) { return loss(in, x, b); }, w, 1e-6)) < 1e-8);
    CHECK(oracle::relative_error(
              gb, oracle::numeric_gradient([&](const auto& x) { return loss(in, w, x); }, b, 1e-6)) < 1e-8);
  }
}

TEST_CASE("empty grad_in skips the input gradient") {
  std::mt19937_64 rng(1);
  ConvShape s{2, 2, 4, 4, 3, 1};
  const auto in = random_vec(rng, s.in_size());
  const auto w = random_vec(rng, s.weight_count());
  const auto go = random_vec(rng, s.out_size());
  std::vector<double> gw(w.size()), gb(2);
  CHECK_NOTHROW(conv2d_backward(s, in, w, go, {}, gw, gb));
}

TEST_CASE("upsample backward is the adjoint of upsample") {
  std::mt19937_64 rng(2);
  const int c = 3, h = 4, w = 5;
  const auto x = random_vec(rng, c * h * w);
  const auto y = random_vec(rng, c * 4 * h * w);
  std::vector<double> ux(y.size());
  upsample2x(c, h, w, x, ux);
  std::vector<double> aty(x.size(), 0.0);
  upsample2x_backward(c, h, w, y, aty);
  CHECK(dot(ux, y) == doctest::Approx(dot(x, aty)).epsilon(1e-12));
  CHECK(ux[0] == x[0]);
  CHECK(ux[1] == x[0]);
  CHECK(ux[2 * w] == x[0]);
  CHECK(ux[2 * w + 1] == x[0]);
}

TEST_CASE("relu and its backward mask") {
  std::vector<double> x{-1, 0, 2};
  relu_inplace(x);
  CHECK(x == std::vector<double>{0, 0, 2});
  std::vector<double> g{5, 5, 5};
  relu_backward_inplace(x, g);
  CHECK(g == std::vector<double>{0, 0, 5});
}

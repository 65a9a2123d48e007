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

// Serial reference vs OpenMP conv kernels. Args: {channels, side}.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "boxsal/kernels.hpp"

namespace kn = boxsal::kernels;

namespace {

struct Buffers {
  kn::ConvShape shape;
  std::vector<double> in, weight, bias, out, grad_out, grad_in, grad_w, grad_b;

  Buffers(int channels, int side) {
    shape = {channels, channels, side, side, 3, 1};
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    auto fill = [&](std::vector<double>& v, std::size_t size) {
      v.resize(size);
      for (auto& x : v) x = n(rng);
    };
    fill(in, shape.in_size());
    fill(weight, shape.weight_count());
    fill(bias, static_cast<std::size_t>(channels));
    fill(grad_out, shape.out_size());
    out.resize(shape.out_size());
    grad_in.resize(shape.in_size());
    grad_w.resize(shape.weight_count());
    grad_b.resize(static_cast<std::size_t>(channels));
  }
};

template <bool Parallel>
void BM_ConvForward(benchmark::State& state) {
  Buffers b(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    if (Parallel) {
      kn::conv2d_forward(b.shape, b.in, b.weight, b.bias, b.out);
    } else {
      kn::conv2d_forward_serial(b.shape, b.in, b.weight, b.bias, b.out);
    }
    benchmark::DoNotOptimize(b.out.data());
  }
}

template <bool Parallel>
void BM_ConvBackward(benchmark::State& state) {
  Buffers b(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    if (Parallel) {
      kn::conv2d_backward(b.shape, b.in, b.weight, b.grad_out, b.grad_in,
                          b.grad_w, b.grad_b);
    } else {
      kn::conv2d_backward_serial(b.shape, b.in, b.weight, b.grad_out, b.grad_in,
                                 b.grad_w, b.grad_b);
    }
    benchmark::DoNotOptimize(b.grad_in.data());
  }
}

void shapes(benchmark::internal::Benchmark* b) {
  b->Args({16, 32})->Args({16, 64})->Args({32, 64})->Args({64, 64});
}

}  // namespace

BENCHMARK(BM_ConvForward<false>)->Name("conv_forward/serial")->Apply(shapes);
BENCHMARK(BM_ConvForward<true>)->Name("conv_forward/openmp")->Apply(shapes);
BENCHMARK(BM_ConvBackward<false>)->Name("conv_backward/serial")->Apply(shapes);
BENCHMARK(BM_ConvBackward<true>)->Name("conv_backward/openmp")->Apply(shapes);

BENCHMARK_MAIN();

/* Copyright 2026 The kws Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Serial reference vs OpenMP conv kernel on the layer shapes the built-in
// architectures actually run.
//
//   conv_bench [iters]

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "kws/tensor.hpp"
#include "kws/training.hpp"

namespace {

struct Case {
  std::string name;
  kws::Dims3 input;
  int m, r, n;
  kws::StridePair stride;
};

template <class F>
double MeanMicros(int iters, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < iters; ++i) f();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::micro>(t1 - t0).count() / iters;
}

}  // namespace

int main(int argc, char** argv) {
  const int iters = argc > 1 ? std::atoi(argv[1]) : 20;
  if (iters < 1) {
    std::fprintf(stderr, "usage: conv_bench [iters >= 1]\n");
    return 1;
  }
  const std::vector<Case> cases = {
      {"cnn-trad conv1", {32, 40, 1}, 21, 9, 64, {1, 1}},
      {"cnn-trad conv2", {12, 10, 64}, 10, 4, 64, {1, 1}},
      {"cnn-one conv", {32, 40, 1}, 32, 9, 64, {1, 1}},
      {"cnn-tstride2 conv1", {48, 40, 1}, 21, 9, 63, {2, 1}},
  };
  std::printf("threads: %d, iters: %d\n", omp_get_max_threads(), iters);
  std::printf("%-20s %12s %12s %8s %10s\n", "case", "naive us", "omp us", "speedup", "max rel");
  kws::Rng rng(42);
  int status = 0;
  for (const auto& c : cases) {
    kws::Tensor3 input(c.input);
    for (float& v : input.data()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    kws::FilterBank bank(c.m, c.r, c.input.channels, c.n);
    for (float& v : bank.weights) v = static_cast<float>(rng.uniform(-0.1, 0.1));
    for (float& v : bank.bias) v = static_cast<float>(rng.uniform(-0.1, 0.1));

    const auto ref = kws::conv2d_valid(input, bank, c.stride);
    const auto opt = kws::conv2d_optimized(input, bank, c.stride);
    const double dev = kws::max_relative_deviation(ref.data(), opt.data());
    if (dev > 1e-5) status = 3;

    const double naive = MeanMicros(iters, [&] { (void)kws::conv2d_valid(input, bank, c.stride); });
    const double fast = MeanMicros(iters, [&] { (void)kws::conv2d_optimized(input, bank, c.stride); });
    std::printf("%-20s %12.1f %12.1f %7.2fx %10.2e\n", c.name.c_str(), naive, fast, naive / fast, dev);
  }
  return status;
}

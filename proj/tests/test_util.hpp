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

// Helpers shared by the unit and acceptance suites.

#ifndef KWS_TESTS_TEST_UTIL_HPP_
#define KWS_TESTS_TEST_UTIL_HPP_

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "kws/arch.hpp"
#include "kws/training.hpp"

namespace kws::test {

inline Tensor3 RandomTensor(Rng& rng, Dims3 dims, double lo = -1.0, double hi = 1.0) {
  Tensor3 t(dims);
  for (float& v : t.data()) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

inline FilterBank RandomFilters(Rng& rng, int m, int r, int c_in, int n) {
  FilterBank bank(m, r, c_in, n);
  for (float& v : bank.weights) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  for (float& v : bank.bias) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return bank;
}

inline FeatureWindow RandomWindow(Rng& rng, int t, int f, double lo = -1.0, double hi = 1.0) {
  FeatureWindow w{t, f, {}};
  w.data.resize(static_cast<std::size_t>(t) * f);
  for (float& v : w.data) v = static_cast<float>(rng.uniform(lo, hi));
  return w;
}

inline int RandInt(Rng& rng, int lo, int hi) {  // inclusive
  return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

// Random architecture that validates: 0-2 conv layers sized to fit, flatten,
// 0-2 low-rank/dense layers, softmax.
inline ArchSpec RandomArch(Rng& rng) {
  ArchSpec a;
  a.name = "random";
  a.context = {RandInt(rng, 0, 20), RandInt(rng, 0, 8)};
  a.input_t = a.context.frames();
  a.input_f = 40;
  int t = a.input_t, f = a.input_f;
  const int convs = RandInt(rng, 0, 2);
  for (int i = 0; i < convs; ++i) {
    ConvLayer c;
    c.m = RandInt(rng, 1, t);
    c.r = RandInt(rng, 1, std::min(f, 12));
    c.n = RandInt(rng, 1, 6);
    c.stride = {RandInt(rng, 1, 3), RandInt(rng, 1, 3)};
    t = ConvExtent(t, c.m, c.stride.s);
    f = ConvExtent(f, c.r, c.stride.v);
    c.pool = {RandInt(rng, 1, std::min(t, 2)), RandInt(rng, 1, std::min(f, 3))};
    t /= c.pool.p;
    f /= c.pool.q;
    a.layers.push_back(c);
  }
  a.layers.push_back(FlattenLayer{});
  const int hidden = RandInt(rng, 0, 2);
  for (int i = 0; i < hidden; ++i) {
    if (rng.below(2)) {
      a.layers.push_back(LowRankLayer{RandInt(rng, 1, 16)});
    } else {
      a.layers.push_back(DenseLayer{RandInt(rng, 1, 24)});
    }
  }
  a.layers.push_back(SoftmaxLayer{RandInt(rng, 2, 5)});
  return a;
}

struct CommandResult {
  int exit_code = -1;
  std::string out;
};

// Runs a shell command, capturing stdout; stderr is discarded.
inline CommandResult Run(const std::string& cmd) {
  CommandResult r;
  FILE* pipe = popen((cmd + " 2>/dev/null").c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

inline std::filesystem::path TempDir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("kws_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::vector<unsigned char> ReadBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace kws::test

#endif  // KWS_TESTS_TEST_UTIL_HPP_

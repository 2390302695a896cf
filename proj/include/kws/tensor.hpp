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

// Dense float kernels shared by every architecture. Each op has a serial
// reference implementation; conv2d also has an OpenMP path that must agree
// with the reference to 1e-5 relative.

#ifndef KWS_TENSOR_HPP_
#define KWS_TENSOR_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kws/error.hpp"

namespace kws {

// Counts scalar multiplies executed by the reference kernels. Owned by the
// caller; kernels only increment it when non-null.
using MacCounter = std::uint64_t;

struct Dims3 {
  int time = 0;
  int freq = 0;
  int channels = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(time) * freq * channels;
  }
  std::string str() const;
  bool operator==(const Dims3&) const = default;
};

// Row-major (time, freq, channels).
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(Dims3 dims, float fill = 0.0f);
  Tensor3(Dims3 dims, std::vector<float> data);

  const Dims3& dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }

  std::size_t index(int t, int f, int c) const {
    return (static_cast<std::size_t>(t) * dims_.freq + f) * dims_.channels + c;
  }
  float& at(int t, int f, int c) { return data_[index(t, f, c)]; }
  float at(int t, int f, int c) const { return data_[index(t, f, c)]; }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  std::vector<float>& storage() { return data_; }

  bool operator==(const Tensor3&) const = default;

 private:
  Dims3 dims_;
  std::vector<float> data_;
};

// Convolution weights, layout (m, r, c_in, n) with n innermost.
struct FilterBank {
  int m = 1;     // time extent
  int r = 1;     // frequency extent
  int c_in = 1;
  int n = 1;     // feature maps
  std::vector<float> weights;
  std::vector<float> bias;

  FilterBank() = default;
  FilterBank(int m, int r, int c_in, int n);

  std::size_t weight_index(int i, int j, int c, int k) const {
    return ((static_cast<std::size_t>(i) * r + j) * c_in + c) * n + k;
  }
  void check() const;
};

struct StridePair {
  int s = 1;  // time
  int v = 1;  // frequency
  bool operator==(const StridePair&) const = default;
};

struct PoolPair {
  int p = 1;  // time
  int q = 1;  // frequency
  bool operator==(const PoolPair&) const = default;
};

enum class Activation { kNone, kRelu, kSoftmax };

// Output extent of a valid convolution along one axis, or <= 0 if the filter
// does not fit.
inline int ConvExtent(int in, int filter, int stride) {
  if (filter > in) return 0;
  return (in - filter) / stride + 1;
}

Dims3 Conv2dOutputDims(const Dims3& in, const FilterBank& filters,
                       const StridePair& strides);

// Valid cross-correlation, no padding, no kernel flip. Serial reference.
Tensor3 conv2d_valid(const Tensor3& input, const FilterBank& filters,
                     const StridePair& strides, MacCounter* macs = nullptr);

// Same contract as conv2d_valid; OpenMP over output rows, vectorized over
// feature maps.
Tensor3 conv2d_optimized(const Tensor3& input, const FilterBank& filters,
                         const StridePair& strides);

// Non-overlapping max pooling; trailing remainder rows/bins are dropped.
Tensor3 maxpool(const Tensor3& input, const PoolPair& pool);

// y = act(W x + b). W is out x in, row-major. An empty bias means no bias
// term (the low-rank bottleneck).
std::vector<float> dense(std::span<const float> x, std::span<const float> w,
                         std::span<const float> b, int out,
                         Activation act, MacCounter* macs = nullptr);

std::vector<float> softmax(std::span<const float> logits);
void relu_inplace(std::span<float> values);

std::vector<float> flatten(const Tensor3& input);
Tensor3 reshape(std::span<const float> values, Dims3 dims);

// Max over elements of |a-b| / max(|a|,|b|); identical elements (including
// both zero) contribute 0.
double max_relative_deviation(std::span<const float> a,
                              std::span<const float> b);

bool all_finite(std::span<const float> values);

}  // namespace kws

#endif  // KWS_TENSOR_HPP_

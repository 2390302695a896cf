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

#include <vector>

#include "kws/tensor.hpp"

namespace kws {

// Output-stationary: each (t, f) cell accumulates all n feature maps at once
// so the innermost loop runs over contiguous weights. Rows are independent,
// and each cell sums in the same (i, j, c) order regardless of thread count.
Tensor3 conv2d_optimized(const Tensor3& input, const FilterBank& filters,
                         const StridePair& strides) {
  const Dims3 od = Conv2dOutputDims(input.dims(), filters, strides);
  Tensor3 out(od);
  const int n = filters.n;
  const int c_in = filters.c_in;
  const int in_freq = input.dims().freq;
  const float* in = input.data().data();
  const float* w = filters.weights.data();
  float* dst = out.data().data();

#pragma omp parallel
  {
    std::vector<double> acc(n);
#pragma omp for schedule(static)
    for (int t = 0; t < od.time; ++t) {
      for (int f = 0; f < od.freq; ++f) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int i = 0; i < filters.m; ++i) {
          const int row = t * strides.s + i;
          for (int j = 0; j < filters.r; ++j) {
            const float* px =
                in + (static_cast<std::size_t>(row) * in_freq + f * strides.v + j) * c_in;
            const float* pw = w + filters.weight_index(i, j, 0, 0);
            for (int c = 0; c < c_in; ++c) {
              const double xv = px[c];
              const float* wk = pw + static_cast<std::size_t>(c) * n;
#pragma omp simd
              for (int k = 0; k < n; ++k) acc[k] += xv * wk[k];
            }
          }
        }
        float* o = dst + out.index(t, f, 0);
        for (int k = 0; k < n; ++k) {
          o[k] = static_cast<float>(acc[k] + filters.bias[k]);
        }
      }
    }
  }
  return out;
}

}  // namespace kws

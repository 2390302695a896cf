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

#include "kws/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kws {

const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kShape: return "shape error";
    case ErrorKind::kData: return "data error";
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kIo: return "i/o error";
    case ErrorKind::kNumeric: return "numeric error";
  }
  return "error";
}

std::string Dims3::str() const {
  return std::to_string(time) + "x" + std::to_string(freq) + "x" +
         std::to_string(channels);
}

Tensor3::Tensor3(Dims3 dims, float fill) : dims_(dims), data_(dims.size(), fill) {
  if (dims.time < 0 || dims.freq < 0 || dims.channels < 0) {
    throw Error(ErrorKind::kShape, "negative tensor extent " + dims.str());
  }
}

Tensor3::Tensor3(Dims3 dims, std::vector<float> data)
    : dims_(dims), data_(std::move(data)) {
  if (data_.size() != dims_.size()) {
    throw Error(ErrorKind::kShape,
                "tensor " + dims_.str() + " expects " +
                    std::to_string(dims_.size()) + " values, got " +
                    std::to_string(data_.size()));
  }
}

FilterBank::FilterBank(int m_, int r_, int c_in_, int n_)
    : m(m_), r(r_), c_in(c_in_), n(n_) {
  if (m < 1 || r < 1 || c_in < 1 || n < 1) {
    throw Error(ErrorKind::kShape, "filter bank extents must be >= 1");
  }
  weights.assign(static_cast<std::size_t>(m) * r * c_in * n, 0.0f);
  bias.assign(n, 0.0f);
}

void FilterBank::check() const {
  if (m < 1 || r < 1 || c_in < 1 || n < 1) {
    throw Error(ErrorKind::kShape, "filter bank extents must be >= 1");
  }
  if (weights.size() != static_cast<std::size_t>(m) * r * c_in * n) {
    throw Error(ErrorKind::kShape, "filter bank weight count mismatch");
  }
  if (bias.size() != static_cast<std::size_t>(n)) {
    throw Error(ErrorKind::kShape, "filter bank bias count mismatch");
  }
}

Dims3 Conv2dOutputDims(const Dims3& in, const FilterBank& filters,
                       const StridePair& strides) {
  filters.check();
  if (strides.s < 1 || strides.v < 1) {
    throw Error(ErrorKind::kShape, "conv stride must be >= 1");
  }
  if (in.channels != filters.c_in) {
    throw Error(ErrorKind::kShape,
                "channels axis: input has " + std::to_string(in.channels) +
                    ", filters expect " + std::to_string(filters.c_in));
  }
  if (filters.m > in.time) {
    throw Error(ErrorKind::kShape,
                "time axis: filter m=" + std::to_string(filters.m) +
                    " exceeds input time " + std::to_string(in.time));
  }
  if (filters.r > in.freq) {
    throw Error(ErrorKind::kShape,
                "freq axis: filter r=" + std::to_string(filters.r) +
                    " exceeds input freq " + std::to_string(in.freq));
  }
  return {ConvExtent(in.time, filters.m, strides.s),
          ConvExtent(in.freq, filters.r, strides.v), filters.n};
}

Tensor3 conv2d_valid(const Tensor3& input, const FilterBank& filters,
                     const StridePair& strides, MacCounter* macs) {
  const Dims3 od = Conv2dOutputDims(input.dims(), filters, strides);
  Tensor3 out(od);
  for (int t = 0; t < od.time; ++t) {
    for (int f = 0; f < od.freq; ++f) {
      for (int k = 0; k < od.channels; ++k) {
        double acc = 0.0;
        for (int i = 0; i < filters.m; ++i) {
          for (int j = 0; j < filters.r; ++j) {
            for (int c = 0; c < filters.c_in; ++c) {
              acc += static_cast<double>(
                         input.at(t * strides.s + i, f * strides.v + j, c)) *
                     filters.weights[filters.weight_index(i, j, c, k)];
              if (macs) ++*macs;
            }
          }
        }
        out.at(t, f, k) = static_cast<float>(acc + filters.bias[k]);
      }
    }
  }
  return out;
}

Tensor3 maxpool(const Tensor3& input, const PoolPair& pool) {
  if (pool.p < 1 || pool.q < 1) {
    throw Error(ErrorKind::kShape, "pool size must be >= 1");
  }
  const Dims3& in = input.dims();
  if (pool.p > in.time) {
    throw Error(ErrorKind::kShape, "time axis: pool p=" +
                                       std::to_string(pool.p) +
                                       " exceeds input time " +
                                       std::to_string(in.time));
  }
  if (pool.q > in.freq) {
    throw Error(ErrorKind::kShape, "freq axis: pool q=" +
                                       std::to_string(pool.q) +
                                       " exceeds input freq " +
                                       std::to_string(in.freq));
  }
  Tensor3 out({in.time / pool.p, in.freq / pool.q, in.channels});
  const Dims3& od = out.dims();
  for (int t = 0; t < od.time; ++t) {
    for (int f = 0; f < od.freq; ++f) {
      for (int c = 0; c < od.channels; ++c) {
        float best = input.at(t * pool.p, f * pool.q, c);
        for (int i = 0; i < pool.p; ++i) {
          for (int j = 0; j < pool.q; ++j) {
            best = std::max(best, input.at(t * pool.p + i, f * pool.q + j, c));
          }
        }
        out.at(t, f, c) = best;
      }
    }
  }
  return out;
}

std::vector<float> dense(std::span<const float> x, std::span<const float> w,
                         std::span<const float> b, int out, Activation act,
                         MacCounter* macs) {
  if (out < 1) throw Error(ErrorKind::kShape, "dense output size must be >= 1");
  const std::size_t in = x.size();
  if (w.size() != in * static_cast<std::size_t>(out)) {
    throw Error(ErrorKind::kShape,
                "dense weights: expected " + std::to_string(out) + "x" +
                    std::to_string(in) + " = " + std::to_string(out * in) +
                    " values, got " + std::to_string(w.size()));
  }
  if (!b.empty() && b.size() != static_cast<std::size_t>(out)) {
    throw Error(ErrorKind::kShape, "dense bias: expected " +
                                       std::to_string(out) + " values, got " +
                                       std::to_string(b.size()));
  }
  std::vector<float> y(out);
  for (int o = 0; o < out; ++o) {
    const float* row = w.data() + static_cast<std::size_t>(o) * in;
    double acc = 0.0;
    for (std::size_t i = 0; i < in; ++i) acc += static_cast<double>(row[i]) * x[i];
    if (macs) *macs += in;
    if (!b.empty()) acc += b[o];
    y[o] = static_cast<float>(acc);
  }
  switch (act) {
    case Activation::kNone: break;
    case Activation::kRelu: relu_inplace(y); break;
    case Activation::kSoftmax: y = softmax(y); break;
  }
  return y;
}

std::vector<float> softmax(std::span<const float> logits) {
  if (logits.empty()) return {};
  const float peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> e(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    e[i] = std::exp(static_cast<double>(logits[i]) - peak);
    total += e[i];
  }
  std::vector<float> p(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = static_cast<float>(e[i] / total);
  }
  return p;
}

void relu_inplace(std::span<float> values) {
  for (float& v : values) v = v > 0.0f ? v : 0.0f;
}

std::vector<float> flatten(const Tensor3& input) {
  return {input.data().begin(), input.data().end()};
}

Tensor3 reshape(std::span<const float> values, Dims3 dims) {
  return Tensor3(dims, std::vector<float>(values.begin(), values.end()));
}

double max_relative_deviation(std::span<const float> a,
                              std::span<const float> b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i];
    const double y = b[i];
    if (x == y) continue;
    const double scale = std::max(std::abs(x), std::abs(y));
    worst = std::max(worst, std::abs(x - y) / scale);
  }
  return worst;
}

bool all_finite(std::span<const float> values) {
  return std::all_of(values.begin(), values.end(),
                     [](float v) { return std::isfinite(v); });
}

}  // namespace kws

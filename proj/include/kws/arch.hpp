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

// Declarative architecture specs for the keyword-spotting model families,
// shape tracing, weight manifests and the inference forward pass.

#ifndef KWS_ARCH_HPP_
#define KWS_ARCH_HPP_

#include <string>
#include <variant>
#include <vector>

#include "kws/error.hpp"
#include "kws/frontend.hpp"
#include "kws/tensor.hpp"

namespace kws {

// Feature-map count left open in a template; resolved by fit_to_budget.
inline constexpr int kSymbolicMaps = 0;

struct ConvLayer {
  int m = 1;
  int r = 1;
  int n = 1;
  StridePair stride;
  PoolPair pool;
  bool operator==(const ConvLayer&) const = default;
};

struct FlattenLayer {
  bool operator==(const FlattenLayer&) const = default;
};

// Bias-free linear bottleneck to k dims, no activation.
struct LowRankLayer {
  int k = 1;
  bool operator==(const LowRankLayer&) const = default;
};

// Fully connected + ReLU.
struct DenseLayer {
  int units = 1;
  bool operator==(const DenseLayer&) const = default;
};

struct SoftmaxLayer {
  int labels = 2;
  bool operator==(const SoftmaxLayer&) const = default;
};

using LayerSpec =
    std::variant<ConvLayer, FlattenLayer, LowRankLayer, DenseLayer, SoftmaxLayer>;

const char* LayerKind(const LayerSpec& layer);

struct ArchSpec {
  std::string name;
  int input_t = 0;
  int input_f = 0;
  ContextConfig context;
  std::vector<LayerSpec> layers;

  bool has_symbolic_maps() const;
  int labels() const;  // from the trailing SoftmaxOut, 0 if absent
  bool operator==(const ArchSpec&) const = default;
};

struct Shape {
  bool flat = false;
  Dims3 dims;      // when !flat
  int length = 0;  // when flat

  static Shape Tensor(int t, int f, int c) { return {false, {t, f, c}, 0}; }
  static Shape Vector(int len) { return {true, {}, len}; }
  std::size_t size() const { return flat ? static_cast<std::size_t>(length) : dims.size(); }
  std::string str() const;
  bool operator==(const Shape&) const = default;
};

struct TraceEntry {
  int layer = -1;     // -1 for the input
  std::string stage;  // input, conv, pool, flatten, lowrank, dense, softmax
  Shape shape;
};

struct ShapeTrace {
  std::vector<TraceEntry> entries;
  // Shape entering layer i (index into arch.layers).
  std::vector<Shape> layer_inputs;
  std::vector<Shape> layer_outputs;

  const Shape& output() const { return entries.back().shape; }
};

// Thrown by validate(); layer() is the 0-based index of the first failing
// layer, -1 for errors in the spec header.
class ShapeError : public Error {
 public:
  ShapeError(int layer, const std::string& what)
      : Error(ErrorKind::kShape, what), layer_(layer) {}
  int layer() const { return layer_; }

 private:
  int layer_;
};

ShapeTrace validate(const ArchSpec& arch);

// Weight/bias-bearing name per layer: conv1, conv2, flatten1, lowrank1,
// dense1.., output.
std::vector<std::string> LayerNames(const ArchSpec& arch);

ArchSpec build_dnn_baseline(int labels);
ArchSpec build_cnn_trad(int labels);
ArchSpec build_cnn_one(int labels);
// Templates: feature maps on both conv layers are kSymbolicMaps.
ArchSpec build_cnn_tstride(int labels, int s);
ArchSpec build_cnn_tpool(int labels, int p);
// Replaces every symbolic feature-map count with n.
ArchSpec with_feature_maps(ArchSpec arch, int n);

// --- weights ---------------------------------------------------------------

struct TensorInfo {
  std::string name;
  std::vector<int> shape;
  std::size_t size() const;
  bool operator==(const TensorInfo&) const = default;
};

struct NamedTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<float> values;
  bool operator==(const NamedTensor&) const = default;
};

struct WeightSet {
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(const std::string& name) const;
  NamedTensor* find(const std::string& name);
  std::size_t total_values() const;
  bool operator==(const WeightSet&) const = default;
};

// Ordered tensor manifest derived from the shape trace. Conv weights are
// (m, r, c_in, n); dense/low-rank weights are (out, in) row-major.
std::vector<TensorInfo> weight_manifest(const ArchSpec& arch);
WeightSet zero_weights(const ArchSpec& arch);
// Throws kShape listing every missing, unexpected or mis-shaped tensor, or
// kNumeric for non-finite values.
void check_weights(const ArchSpec& arch, const WeightSet& weights);

// --- inference -------------------------------------------------------------

enum class ConvPath { kNaive, kOptimized };

struct ForwardOptions {
  ConvPath conv_path = ConvPath::kOptimized;
  // When set, the naive path is used and every scalar multiply is counted.
  MacCounter* macs = nullptr;
};

// Conv layers apply ReLU before pooling; Dense applies ReLU; LowRank is
// linear; SoftmaxOut returns the posterior.
std::vector<float> forward(const ArchSpec& arch, const WeightSet& weights,
                           const FeatureWindow& x, ForwardOptions opts = {});

}  // namespace kws

#endif  // KWS_ARCH_HPP_

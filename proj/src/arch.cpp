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

#include "kws/arch.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

namespace kws {
namespace {

constexpr int kMelBins = 40;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void CheckLabels(int labels) {
  if (labels < 2) {
    throw Error(ErrorKind::kInvalidArgument,
                "need at least 2 labels (keywords + filler), got " +
                    std::to_string(labels));
  }
}

ArchSpec CnnSkeleton(const std::string& name, ContextConfig ctx, int labels,
                     ConvLayer conv1, ConvLayer conv2) {
  ArchSpec a;
  a.name = name;
  a.context = ctx;
  a.input_t = ctx.frames();
  a.input_f = kMelBins;
  a.layers = {conv1, conv2, FlattenLayer{}, LowRankLayer{32}, DenseLayer{128},
              SoftmaxLayer{labels}};
  return a;
}

}  // namespace

const char* LayerKind(const LayerSpec& layer) {
  return std::visit(Overloaded{
                        [](const ConvLayer&) { return "conv"; },
                        [](const FlattenLayer&) { return "flatten"; },
                        [](const LowRankLayer&) { return "lowrank"; },
                        [](const DenseLayer&) { return "dense"; },
                        [](const SoftmaxLayer&) { return "softmax"; },
                    },
                    layer);
}

bool ArchSpec::has_symbolic_maps() const {
  return std::any_of(layers.begin(), layers.end(), [](const LayerSpec& l) {
    const auto* conv = std::get_if<ConvLayer>(&l);
    return conv && conv->n == kSymbolicMaps;
  });
}

int ArchSpec::labels() const {
  if (layers.empty()) return 0;
  const auto* out = std::get_if<SoftmaxLayer>(&layers.back());
  return out ? out->labels : 0;
}

std::string Shape::str() const {
  return flat ? std::to_string(length) : dims.str();
}

ShapeTrace validate(const ArchSpec& arch) {
  if (arch.input_t < 1 || arch.input_f < 1) {
    throw ShapeError(-1, arch.name + ": input extents must be >= 1");
  }
  if (arch.context.left < 0 || arch.context.right < 0) {
    throw ShapeError(-1, arch.name + ": negative context");
  }
  if (arch.input_t != arch.context.frames()) {
    throw ShapeError(-1, arch.name + ": input_t " + std::to_string(arch.input_t) +
                             " != context frames " +
                             std::to_string(arch.context.frames()));
  }
  if (arch.input_f != kMelBins) {
    throw ShapeError(-1, arch.name + ": input_f must be " + std::to_string(kMelBins));
  }
  if (arch.layers.empty()) throw ShapeError(-1, arch.name + ": no layers");

  ShapeTrace trace;
  Shape cur = Shape::Tensor(arch.input_t, arch.input_f, 1);
  trace.entries.push_back({-1, "input", cur});

  const int count = static_cast<int>(arch.layers.size());
  for (int i = 0; i < count; ++i) {
    const LayerSpec& layer = arch.layers[i];
    const std::string where = arch.name + ": layer " + std::to_string(i) + " (" +
                              LayerKind(layer) + "): ";
    auto fail = [&](const std::string& msg) -> void { throw ShapeError(i, where + msg); };
    const bool is_softmax = std::holds_alternative<SoftmaxLayer>(layer);
    if (is_softmax != (i == count - 1)) {
      fail(is_softmax ? "SoftmaxOut must be the last layer"
                      : "last layer must be SoftmaxOut");
    }
    trace.layer_inputs.push_back(cur);

    std::visit(
        Overloaded{
            [&](const ConvLayer& c) {
              if (cur.flat) fail("convolution needs a time x freq x channel input");
              if (c.n == kSymbolicMaps) fail("unresolved feature-map count");
              if (c.m < 1 || c.r < 1 || c.n < 1) fail("filter extents must be >= 1");
              if (c.stride.s < 1 || c.stride.v < 1) fail("strides must be >= 1");
              if (c.pool.p < 1 || c.pool.q < 1) fail("pool sizes must be >= 1");
              if (c.m > cur.dims.time) {
                fail("time axis: filter m=" + std::to_string(c.m) +
                     " exceeds input time " + std::to_string(cur.dims.time));
              }
              if (c.r > cur.dims.freq) {
                fail("freq axis: filter r=" + std::to_string(c.r) +
                     " exceeds input freq " + std::to_string(cur.dims.freq));
              }
              cur = Shape::Tensor(ConvExtent(cur.dims.time, c.m, c.stride.s),
                                  ConvExtent(cur.dims.freq, c.r, c.stride.v), c.n);
              trace.entries.push_back({i, "conv", cur});
              if (c.pool.p != 1 || c.pool.q != 1) {
                if (c.pool.p > cur.dims.time || c.pool.q > cur.dims.freq) {
                  fail("pool " + std::to_string(c.pool.p) + "x" +
                       std::to_string(c.pool.q) + " larger than conv output " +
                       cur.str());
                }
                cur = Shape::Tensor(cur.dims.time / c.pool.p,
                                    cur.dims.freq / c.pool.q, c.n);
                trace.entries.push_back({i, "pool", cur});
              }
            },
            [&](const FlattenLayer&) {
              if (cur.flat) fail("input is already flat");
              cur = Shape::Vector(static_cast<int>(cur.size()));
              trace.entries.push_back({i, "flatten", cur});
            },
            [&](const LowRankLayer& l) {
              if (!cur.flat) fail("needs a flat input (insert Flatten)");
              if (l.k < 1) fail("k must be >= 1");
              cur = Shape::Vector(l.k);
              trace.entries.push_back({i, "lowrank", cur});
            },
            [&](const DenseLayer& d) {
              if (!cur.flat) fail("needs a flat input (insert Flatten)");
              if (d.units < 1) fail("units must be >= 1");
              cur = Shape::Vector(d.units);
              trace.entries.push_back({i, "dense", cur});
            },
            [&](const SoftmaxLayer& s) {
              if (!cur.flat) fail("needs a flat input (insert Flatten)");
              if (s.labels < 2) fail("need at least 2 labels");
              cur = Shape::Vector(s.labels);
              trace.entries.push_back({i, "softmax", cur});
            },
        },
        layer);
    trace.layer_outputs.push_back(cur);
  }
  return trace;
}

std::vector<std::string> LayerNames(const ArchSpec& arch) {
  std::map<std::string, int> seen;
  std::vector<std::string> names;
  for (const auto& layer : arch.layers) {
    const std::string kind = LayerKind(layer);
    if (kind == "softmax") {
      names.push_back("output");
    } else {
      names.push_back(kind + std::to_string(++seen[kind]));
    }
  }
  return names;
}

ArchSpec build_dnn_baseline(int labels) {
  CheckLabels(labels);
  ArchSpec a;
  a.name = "dnn";
  a.context = {25, 10};
  a.input_t = a.context.frames();
  a.input_f = kMelBins;
  a.layers = {FlattenLayer{}, DenseLayer{128}, DenseLayer{128}, DenseLayer{128},
              SoftmaxLayer{labels}};
  return a;
}

// conv1 time filter spans two-thirds of the 32-frame input: floor(2/3 * 32).
ArchSpec build_cnn_trad(int labels) {
  CheckLabels(labels);
  return CnnSkeleton("cnn-trad", {23, 8}, labels,
                     ConvLayer{21, 9, 64, {1, 1}, {1, 3}},
                     ConvLayer{10, 4, 64, {1, 1}, {1, 1}});
}

ArchSpec build_cnn_one(int labels) {
  CheckLabels(labels);
  ArchSpec a;
  a.name = "cnn-one";
  a.context = {23, 8};
  a.input_t = a.context.frames();
  a.input_f = kMelBins;
  a.layers = {ConvLayer{a.input_t, 9, 64, {1, 1}, {1, 1}},
              FlattenLayer{},
              LowRankLayer{32},
              DenseLayer{128},
              DenseLayer{128},
              SoftmaxLayer{labels}};
  return a;
}

ArchSpec build_cnn_tstride(int labels, int s) {
  CheckLabels(labels);
  if (s < 2) throw Error(ErrorKind::kInvalidArgument, "time stride must be >= 2");
  ArchSpec a = CnnSkeleton("cnn-tstride" + std::to_string(s), {39, 8}, labels,
                           ConvLayer{21, 9, kSymbolicMaps, {s, 1}, {1, 3}},
                           ConvLayer{10, 4, kSymbolicMaps, {1, 1}, {1, 1}});
  validate(with_feature_maps(a, 1));
  return a;
}

ArchSpec build_cnn_tpool(int labels, int p) {
  CheckLabels(labels);
  if (p < 2) throw Error(ErrorKind::kInvalidArgument, "time pool must be >= 2");
  ArchSpec a = CnnSkeleton("cnn-tpool" + std::to_string(p), {39, 8}, labels,
                           ConvLayer{21, 9, kSymbolicMaps, {1, 1}, {p, 3}},
                           ConvLayer{10, 4, kSymbolicMaps, {1, 1}, {1, 1}});
  validate(with_feature_maps(a, 1));
  return a;
}

ArchSpec with_feature_maps(ArchSpec arch, int n) {
  if (n < 1) throw Error(ErrorKind::kInvalidArgument, "feature maps must be >= 1");
  for (auto& layer : arch.layers) {
    if (auto* conv = std::get_if<ConvLayer>(&layer); conv && conv->n == kSymbolicMaps) {
      conv->n = n;
    }
  }
  return arch;
}

// --- weights ---------------------------------------------------------------

std::size_t TensorInfo::size() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
}

const NamedTensor* WeightSet::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

NamedTensor* WeightSet::find(const std::string& name) {
  for (auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

std::size_t WeightSet::total_values() const {
  std::size_t total = 0;
  for (const auto& t : tensors) total += t.values.size();
  return total;
}

std::vector<TensorInfo> weight_manifest(const ArchSpec& arch) {
  const ShapeTrace trace = validate(arch);
  const auto names = LayerNames(arch);
  std::vector<TensorInfo> out;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const Shape& in = trace.layer_inputs[i];
    const int in_len = static_cast<int>(in.size());
    std::visit(Overloaded{
                   [&](const ConvLayer& c) {
                     out.push_back({names[i] + ".weight", {c.m, c.r, in.dims.channels, c.n}});
                     out.push_back({names[i] + ".bias", {c.n}});
                   },
                   [&](const FlattenLayer&) {},
                   [&](const LowRankLayer& l) {
                     out.push_back({names[i] + ".weight", {l.k, in_len}});
                   },
                   [&](const DenseLayer& d) {
                     out.push_back({names[i] + ".weight", {d.units, in_len}});
                     out.push_back({names[i] + ".bias", {d.units}});
                   },
                   [&](const SoftmaxLayer& s) {
                     out.push_back({names[i] + ".weight", {s.labels, in_len}});
                     out.push_back({names[i] + ".bias", {s.labels}});
                   },
               },
               arch.layers[i]);
  }
  return out;
}

WeightSet zero_weights(const ArchSpec& arch) {
  WeightSet w;
  for (const auto& info : weight_manifest(arch)) {
    w.tensors.push_back({info.name, info.shape, std::vector<float>(info.size(), 0.0f)});
  }
  return w;
}

void check_weights(const ArchSpec& arch, const WeightSet& weights) {
  const auto manifest = weight_manifest(arch);
  std::vector<std::string> problems;
  auto shape_str = [](const std::vector<int>& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
    return out;
  };
  for (const auto& info : manifest) {
    const NamedTensor* t = weights.find(info.name);
    if (!t) {
      problems.push_back("missing " + info.name);
    } else if (t->shape != info.shape || t->values.size() != info.size()) {
      problems.push_back(info.name + " has shape " + shape_str(t->shape) + " (" +
                         std::to_string(t->values.size()) + " values), expected " +
                         shape_str(info.shape));
    }
  }
  for (const auto& t : weights.tensors) {
    const bool known = std::any_of(manifest.begin(), manifest.end(),
                                   [&](const TensorInfo& i) { return i.name == t.name; });
    if (!known) problems.push_back("unexpected " + t.name);
  }
  if (!problems.empty()) {
    std::string msg = arch.name + ": weights do not match architecture:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw Error(ErrorKind::kShape, msg);
  }
  for (const auto& t : weights.tensors) {
    if (!all_finite(t.values)) {
      throw Error(ErrorKind::kNumeric, "non-finite values in " + t.name);
    }
  }
}

// --- inference -------------------------------------------------------------

std::vector<float> forward(const ArchSpec& arch, const WeightSet& weights,
                           const FeatureWindow& x, ForwardOptions opts) {
  check_weights(arch, weights);
  if (x.t != arch.input_t || x.f != arch.input_f ||
      x.data.size() != static_cast<std::size_t>(x.t) * x.f) {
    throw Error(ErrorKind::kShape,
                arch.name + ": input window " + std::to_string(x.t) + "x" +
                    std::to_string(x.f) + " does not match " +
                    std::to_string(arch.input_t) + "x" + std::to_string(arch.input_f));
  }
  const auto names = LayerNames(arch);
  const bool naive = opts.macs != nullptr || opts.conv_path == ConvPath::kNaive;

  Tensor3 grid = x.as_tensor();
  std::vector<float> vec;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const NamedTensor* w = weights.find(names[i] + ".weight");
    const NamedTensor* b = weights.find(names[i] + ".bias");
    std::visit(
        Overloaded{
            [&](const ConvLayer& c) {
              FilterBank bank;
              bank.m = c.m;
              bank.r = c.r;
              bank.c_in = grid.dims().channels;
              bank.n = c.n;
              bank.weights = w->values;
              bank.bias = b->values;
              grid = naive ? conv2d_valid(grid, bank, c.stride, opts.macs)
                           : conv2d_optimized(grid, bank, c.stride);
              relu_inplace(grid.data());
              if (c.pool.p != 1 || c.pool.q != 1) grid = maxpool(grid, c.pool);
            },
            [&](const FlattenLayer&) { vec = flatten(grid); },
            [&](const LowRankLayer& l) {
              vec = dense(vec, w->values, {}, l.k, Activation::kNone, opts.macs);
            },
            [&](const DenseLayer& d) {
              vec = dense(vec, w->values, b->values, d.units, Activation::kRelu, opts.macs);
            },
            [&](const SoftmaxLayer& s) {
              vec = dense(vec, w->values, b->values, s.labels, Activation::kSoftmax,
                          opts.macs);
            },
        },
        arch.layers[i]);
  }
  return vec;
}

}  // namespace kws

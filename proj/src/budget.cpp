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

#include "kws/budget.hpp"

#include <cstdio>
#include <sstream>

namespace kws {

LayerCost count_layer(const LayerSpec& layer, const Shape& in) {
  LayerCost cost;
  if (const auto* c = std::get_if<ConvLayer>(&layer)) {
    if (in.flat) throw Error(ErrorKind::kShape, "conv layer needs a 3-D input");
    if (c->n < 1) throw Error(ErrorKind::kShape, "conv layer has unresolved feature maps");
    const int out_t = ConvExtent(in.dims.time, c->m, c->stride.s);
    const int out_f = ConvExtent(in.dims.freq, c->r, c->stride.v);
    if (out_t < 1 || out_f < 1) throw Error(ErrorKind::kShape, "conv filter larger than input");
    const std::uint64_t taps = std::uint64_t{1} * c->m * c->r * in.dims.channels * c->n;
    cost.params = taps + c->n;
    cost.multiplies = std::uint64_t{1} * out_t * out_f * taps;
  } else if (const auto* l = std::get_if<LowRankLayer>(&layer)) {
    if (!in.flat) throw Error(ErrorKind::kShape, "low-rank layer needs a flat input");
    cost.params = cost.multiplies = std::uint64_t{1} * in.length * l->k;
  } else if (const auto* d = std::get_if<DenseLayer>(&layer)) {
    if (!in.flat) throw Error(ErrorKind::kShape, "dense layer needs a flat input");
    cost.multiplies = std::uint64_t{1} * in.length * d->units;
    cost.params = cost.multiplies + d->units;
  } else if (const auto* s = std::get_if<SoftmaxLayer>(&layer)) {
    if (!in.flat) throw Error(ErrorKind::kShape, "softmax layer needs a flat input");
    cost.multiplies = std::uint64_t{1} * in.length * s->labels;
    cost.params = cost.multiplies + s->labels;
  }
  return cost;
}

BudgetReport report(const ArchSpec& arch) {
  const ShapeTrace trace = validate(arch);
  const auto names = LayerNames(arch);
  BudgetReport r;
  r.arch = arch.name;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    LayerBudget entry{names[i], LayerKind(arch.layers[i]), trace.layer_outputs[i],
                      count_layer(arch.layers[i], trace.layer_inputs[i])};
    r.total += entry.cost;
    r.per_layer.push_back(std::move(entry));
  }
  return r;
}

Comparison compare(const ArchSpec& a, const ArchSpec& b) {
  const BudgetReport ra = report(a);
  const BudgetReport rb = report(b);
  return {{ra.total.multiplies, rb.total.multiplies}, {ra.total.params, rb.total.params}};
}

FitResult fit_to_budget(const ArchSpec& tmpl, std::uint64_t cap) {
  if (!tmpl.has_symbolic_maps()) {
    throw Error(ErrorKind::kInvalidArgument,
                tmpl.name + " has no symbolic feature-map count to fit");
  }
  auto params_at = [&](int n) { return report(with_feature_maps(tmpl, n)).total.params; };
  if (params_at(1) > cap) {
    throw Error(ErrorKind::kData,
                tmpl.name + ": cap " + std::to_string(cap) +
                    " is below the minimum model size " + std::to_string(params_at(1)));
  }
  // Invariant: params_at(lo) <= cap < params_at(hi).
  int lo = 1;
  int hi = 2;
  while (params_at(hi) <= cap) {
    lo = hi;
    if (hi > (1 << 20)) {
      throw Error(ErrorKind::kInvalidArgument, "cap too large to bound feature maps");
    }
    hi *= 2;
  }
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    (params_at(mid) <= cap ? lo : hi) = mid;
  }
  FitResult fit;
  fit.arch = with_feature_maps(tmpl, lo);
  fit.feature_maps = lo;
  fit.report = report(fit.arch);
  return fit;
}

InstrumentedResult instrumented_forward(const ArchSpec& arch, const WeightSet& weights,
                                        const FeatureWindow& x) {
  InstrumentedResult r;
  ForwardOptions opts;
  opts.conv_path = ConvPath::kNaive;
  opts.macs = &r.mac_count;
  r.posterior = forward(arch, weights, x, opts);
  return r;
}

const std::vector<std::string>& BuiltinArchitectureNames() {
  static const std::vector<std::string> names = {"dnn", "cnn-trad", "cnn-one",
                                                 "cnn-tstride2", "cnn-tpool2"};
  return names;
}

ArchSpec architecture_by_name(const std::string& name, int labels) {
  if (name == "dnn") return build_dnn_baseline(labels);
  if (name == "cnn-trad") return build_cnn_trad(labels);
  if (name == "cnn-one") return build_cnn_one(labels);
  if (name == "cnn-tstride2") return fit_to_budget(build_cnn_tstride(labels, 2)).arch;
  if (name == "cnn-tpool2") return fit_to_budget(build_cnn_tpool(labels, 2)).arch;
  throw Error(ErrorKind::kInvalidArgument, "unknown architecture '" + name + "'");
}

std::string format_report_table(const BudgetReport& r) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-10s %-8s %-12s %12s %14s\n", "layer", "kind",
                "out-shape", "params", "multiplies");
  out << "architecture: " << r.arch << "\n" << line;
  for (const auto& l : r.per_layer) {
    std::snprintf(line, sizeof line, "%-10s %-8s %-12s %12llu %14llu\n", l.name.c_str(),
                  l.kind.c_str(), l.out_shape.str().c_str(),
                  static_cast<unsigned long long>(l.cost.params),
                  static_cast<unsigned long long>(l.cost.multiplies));
    out << line;
  }
  std::snprintf(line, sizeof line, "%-10s %-8s %-12s %12llu %14llu\n", "total", "", "",
                static_cast<unsigned long long>(r.total.params),
                static_cast<unsigned long long>(r.total.multiplies));
  out << line;
  return out.str();
}

}  // namespace kws

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

#include "kws/json_io.hpp"

namespace kws {
namespace {

using nlohmann::json;

json LayerToJson(const LayerSpec& layer) {
  json j;
  j["type"] = LayerKind(layer);
  if (const auto* c = std::get_if<ConvLayer>(&layer)) {
    j["m"] = c->m;
    j["r"] = c->r;
    j["n"] = c->n;
    j["stride"] = {c->stride.s, c->stride.v};
    j["pool"] = {c->pool.p, c->pool.q};
  } else if (const auto* l = std::get_if<LowRankLayer>(&layer)) {
    j["k"] = l->k;
  } else if (const auto* d = std::get_if<DenseLayer>(&layer)) {
    j["units"] = d->units;
  } else if (const auto* s = std::get_if<SoftmaxLayer>(&layer)) {
    j["labels"] = s->labels;
  }
  return j;
}

LayerSpec LayerFromJson(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "conv") {
    const auto stride = j.at("stride").get<std::vector<int>>();
    const auto pool = j.at("pool").get<std::vector<int>>();
    if (stride.size() != 2 || pool.size() != 2) {
      throw Error(ErrorKind::kFormat, "conv stride/pool must have two entries");
    }
    return ConvLayer{j.at("m").get<int>(), j.at("r").get<int>(), j.at("n").get<int>(),
                     {stride[0], stride[1]}, {pool[0], pool[1]}};
  }
  if (type == "flatten") return FlattenLayer{};
  if (type == "lowrank") return LowRankLayer{j.at("k").get<int>()};
  if (type == "dense") return DenseLayer{j.at("units").get<int>()};
  if (type == "softmax") return SoftmaxLayer{j.at("labels").get<int>()};
  throw Error(ErrorKind::kFormat, "unknown layer type '" + type + "'");
}

json ShapeToJson(const Shape& s) {
  if (s.flat) return json::array({s.length});
  return json::array({s.dims.time, s.dims.freq, s.dims.channels});
}

}  // namespace

json arch_to_json(const ArchSpec& arch) {
  json j;
  j["name"] = arch.name;
  j["input_t"] = arch.input_t;
  j["input_f"] = arch.input_f;
  j["context"] = {{"left", arch.context.left}, {"right", arch.context.right}};
  j["layers"] = json::array();
  for (const auto& layer : arch.layers) j["layers"].push_back(LayerToJson(layer));
  return j;
}

ArchSpec arch_from_json(const json& j) {
  try {
    ArchSpec arch;
    arch.name = j.at("name").get<std::string>();
    arch.input_t = j.at("input_t").get<int>();
    arch.input_f = j.at("input_f").get<int>();
    arch.context.left = j.at("context").at("left").get<int>();
    arch.context.right = j.at("context").at("right").get<int>();
    for (const auto& layer : j.at("layers")) arch.layers.push_back(LayerFromJson(layer));
    return arch;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("architecture: ") + e.what());
  }
}

json report_to_json(const BudgetReport& r) {
  json j;
  j["arch"] = r.arch;
  j["layers"] = json::array();
  for (const auto& l : r.per_layer) {
    j["layers"].push_back({{"name", l.name},
                           {"kind", l.kind},
                           {"out_shape", ShapeToJson(l.out_shape)},
                           {"params", l.cost.params},
                           {"multiplies", l.cost.multiplies}});
  }
  j["total"] = {{"params", r.total.params}, {"multiplies", r.total.multiplies}};
  return j;
}

json trace_to_json(const ShapeTrace& t) {
  json j = json::array();
  for (const auto& e : t.entries) {
    j.push_back({{"layer", e.layer}, {"stage", e.stage}, {"shape", ShapeToJson(e.shape)}});
  }
  return j;
}

}  // namespace kws

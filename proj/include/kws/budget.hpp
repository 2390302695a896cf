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

// Exact parameter / multiply accounting, architecture comparison, and
// feature-map fitting under a parameter cap.

#ifndef KWS_BUDGET_HPP_
#define KWS_BUDGET_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "kws/arch.hpp"

namespace kws {

struct LayerCost {
  std::uint64_t params = 0;      // weights + biases
  std::uint64_t multiplies = 0;  // scalar MACs in one forward pass

  LayerCost& operator+=(const LayerCost& o) {
    params += o.params;
    multiplies += o.multiplies;
    return *this;
  }
  bool operator==(const LayerCost&) const = default;
};

struct LayerBudget {
  std::string name;
  std::string kind;
  Shape out_shape;
  LayerCost cost;
};

struct BudgetReport {
  std::string arch;
  std::vector<LayerBudget> per_layer;
  LayerCost total;
};

// Bias adds, ReLU, pooling comparisons and softmax exponentials are not
// multiplies.
LayerCost count_layer(const LayerSpec& layer, const Shape& in_shape);

BudgetReport report(const ArchSpec& arch);

struct Ratio {
  std::uint64_t num = 0;
  std::uint64_t den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

struct Comparison {
  Ratio multiply_ratio;
  Ratio param_ratio;
};

// total(a) / total(b).
Comparison compare(const ArchSpec& a, const ArchSpec& b);

inline constexpr std::uint64_t kParameterCap = 250000;

struct FitResult {
  ArchSpec arch;
  int feature_maps = 0;
  BudgetReport report;
};

// Largest n with params(with_feature_maps(tmpl, n)) <= cap. Throws kData
// if even n = 1 exceeds the cap.
FitResult fit_to_budget(const ArchSpec& tmpl, std::uint64_t cap = kParameterCap);

struct InstrumentedResult {
  std::vector<float> posterior;
  std::uint64_t mac_count = 0;
};

// Naive-path forward with a counter local to this call.
InstrumentedResult instrumented_forward(const ArchSpec& arch, const WeightSet& weights,
                                        const FeatureWindow& x);

// Names accepted by the CLI. The tstride/tpool entries are fitted to the
// 250K cap.
const std::vector<std::string>& BuiltinArchitectureNames();
ArchSpec architecture_by_name(const std::string& name, int labels);

std::string format_report_table(const BudgetReport& r);

}  // namespace kws

#endif  // KWS_BUDGET_HPP_

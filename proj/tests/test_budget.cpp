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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kws/budget.hpp"
#include "kws/training.hpp"
#include "test_util.hpp"

using namespace kws;

TEST_CASE("count_layer examples") {
  const ConvLayer conv1{21, 9, 64, {1, 1}, {1, 3}};
  const LayerCost c = count_layer(conv1, Shape::Tensor(32, 40, 1));
  CHECK(c.params == 12160);
  CHECK(c.multiplies == 4644864);

  const LayerCost d = count_layer(DenseLayer{128}, Shape::Vector(32));
  CHECK(d.params == 4224);
  CHECK(d.multiplies == 4096);

  CHECK(count_layer(FlattenLayer{}, Shape::Tensor(3, 7, 64)) == LayerCost{});

  const LayerCost lr = count_layer(LowRankLayer{32}, Shape::Vector(1344));
  CHECK(lr.params == 32 * 1344);
  CHECK(lr.multiplies == 32 * 1344);

  const LayerCost sm = count_layer(SoftmaxLayer{4}, Shape::Vector(128));
  CHECK(sm.params == 128 * 4 + 4);
  CHECK(sm.multiplies == 128 * 4);
}

TEST_CASE("architecture totals") {
  const BudgetReport trad = report(build_cnn_trad(4));
  CHECK(trad.total.multiplies == 8133120);
  CHECK(trad.total.params == 223812);
  CHECK(trad.per_layer[0].name == "conv1");
  CHECK(trad.per_layer[0].cost.multiplies == 4644864);
  CHECK(trad.per_layer[1].cost.multiplies == 10 * 4 * 64 * 64 * 3 * 7);

  const BudgetReport one = report(build_cnn_one(4));
  CHECK(one.total.multiplies == 676352);
  CHECK(one.total.params == 105284);

  const BudgetReport dnn = report(build_dnn_baseline(4));
  CHECK(dnn.total.params == 217988);
  CHECK(dnn.total.multiplies == 217600);
}

TEST_CASE("totals equal the sum of layers and the manifest size") {
  Rng rng(11);
  std::vector<ArchSpec> archs;
  for (const auto& name : BuiltinArchitectureNames()) archs.push_back(architecture_by_name(name, 4));
  for (int i = 0; i < 50; ++i) archs.push_back(test::RandomArch(rng));
  for (const auto& a : archs) {
    CAPTURE(a.name);
    const BudgetReport r = report(a);
    LayerCost sum;
    for (const auto& l : r.per_layer) sum += l.cost;
    CHECK(sum == r.total);
    CHECK(r.per_layer.size() == a.layers.size());
    CHECK(zero_weights(a).total_values() == r.total.params);
  }
}

TEST_CASE("compare") {
  const ArchSpec trad = build_cnn_trad(4);
  const Comparison self = compare(trad, trad);
  CHECK(self.multiply_ratio.num == self.multiply_ratio.den);
  CHECK(self.multiply_ratio.value() == 1.0);
  CHECK(self.param_ratio.value() == 1.0);

  const Comparison c = compare(trad, build_cnn_one(4));
  CHECK(c.multiply_ratio.num == 8133120);
  CHECK(c.multiply_ratio.den == 676352);
  CHECK(c.multiply_ratio.value() == doctest::Approx(12.025).epsilon(1e-3));
  CHECK(c.param_ratio.value() == doctest::Approx(2.1257).epsilon(1e-3));
  CHECK(c.multiply_ratio.value() >= 8.0);
  CHECK(c.multiply_ratio.value() <= 15.0);
}

TEST_CASE("fit_to_budget") {
  for (const ArchSpec& tmpl : {build_cnn_tstride(4, 2), build_cnn_tpool(4, 2),
                               build_cnn_tstride(6, 3), build_cnn_tpool(3, 2)}) {
    CAPTURE(tmpl.name);
    const FitResult f = fit_to_budget(tmpl);
    CHECK(f.feature_maps >= 1);
    CHECK_FALSE(f.arch.has_symbolic_maps());
    CHECK(f.report.total.params <= kParameterCap);
    CHECK(report(with_feature_maps(tmpl, f.feature_maps + 1)).total.params > kParameterCap);
  }
  CHECK(fit_to_budget(build_cnn_tstride(4, 2)).feature_maps == 63);

  const FitResult small = fit_to_budget(build_cnn_tpool(4, 2), 20000);
  CHECK(small.report.total.params <= 20000);
  CHECK(report(with_feature_maps(build_cnn_tpool(4, 2), small.feature_maps + 1)).total.params >
        20000);

  try {
    fit_to_budget(build_cnn_tstride(4, 2), 100);
    FAIL("expected infeasible cap");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kData);
  }
  CHECK_THROWS_AS(fit_to_budget(build_cnn_one(4)), Error);
}

TEST_CASE("parameters grow strictly with feature maps") {
  for (const ArchSpec& tmpl : {build_cnn_tstride(4, 2), build_cnn_tpool(4, 2)}) {
    std::uint64_t prev = 0;
    for (int n = 1; n <= 128; ++n) {
      const std::uint64_t p = report(with_feature_maps(tmpl, n)).total.params;
      CHECK(p > prev);
      prev = p;
    }
  }
}

TEST_CASE("instrumented count matches the analytic count") {
  Rng rng(2024);
  std::vector<ArchSpec> archs;
  for (const auto& name : BuiltinArchitectureNames()) archs.push_back(architecture_by_name(name, 4));
  for (int i = 0; i < 100; ++i) archs.push_back(test::RandomArch(rng));
  for (const auto& a : archs) {
    CAPTURE(a.name);
    const WeightSet w = init_weights(a, 0.05f, 3);
    const FeatureWindow x = test::RandomWindow(rng, a.input_t, a.input_f);
    const InstrumentedResult r = instrumented_forward(a, w, x);
    CHECK(r.mac_count == report(a).total.multiplies);
    CHECK(r.posterior == forward(a, w, x));
  }
}

TEST_CASE("architecture lookup and table") {
  CHECK(BuiltinArchitectureNames().size() == 5);
  const ArchSpec s = architecture_by_name("cnn-tstride2", 4);
  CHECK(report(s).total.params <= kParameterCap);
  const std::string table = format_report_table(report(build_cnn_trad(4)));
  CHECK(table.find("conv1") != std::string::npos);
  CHECK(table.find("8133120") != std::string::npos);
}

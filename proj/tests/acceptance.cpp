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

// Prints one PASS/FAIL line per acceptance criterion; exits non-zero if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <json.hpp>
#include <sstream>

#include "kws/budget.hpp"
#include "kws/model_io.hpp"
#include "kws/training.hpp"
#include "test_util.hpp"

using namespace kws;
using json = nlohmann::json;

namespace {

const std::string kCli = KWS_CLI_PATH;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double limit_s;  // 0: no time gate
  std::function<Outcome()> run;
};

std::string Fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

json Structured(const std::string& args, int* exit_code = nullptr) {
  const auto r = test::Run(kCli + " --format structured " + args);
  if (exit_code) *exit_code = r.exit_code;
  if (r.exit_code != 0) return json();
  return json::parse(r.out, nullptr, false);
}

const std::filesystem::path& Work() {
  static const auto dir = test::TempDir("acceptance");
  return dir;
}

Outcome MultiplyRatio() {
  const json doc = Structured("budget --arch cnn-trad --compare cnn-one");
  if (!doc.is_object()) return {false, "budget command failed"};
  const double ratio = doc.at("multiply_ratio").at("value").get<double>();
  return {ratio >= 8.0 && ratio <= 15.0,
          "multiply ratio " + Fmt("%.3f", ratio) + " in [8, 15]"};
}

Outcome ParameterCap() {
  std::ostringstream detail;
  bool pass = true;
  for (const std::string name : {"cnn-tstride2", "cnn-tpool2"}) {
    const json doc = Structured("fit --arch " + name + " --cap 250000");
    if (!doc.is_object()) return {false, name + ": fit failed"};
    const int n = doc.at("feature_maps");
    const auto params = doc.at("report").at("total").at("params").get<std::uint64_t>();
    // Independent maximality check through the library.
    const ArchSpec tmpl = name == "cnn-tstride2" ? build_cnn_tstride(4, 2) : build_cnn_tpool(4, 2);
    const std::uint64_t next = report(with_feature_maps(tmpl, n + 1)).total.params;
    const std::uint64_t here = report(with_feature_maps(tmpl, n)).total.params;
    pass &= params <= 250000 && here == params && next > 250000;
    detail << name << " n=" << n << " params=" << params << " n+1=" << next << "; ";
  }
  return {pass, detail.str()};
}

Outcome CountOracle() {
  Rng rng(4242);
  std::vector<ArchSpec> archs;
  for (const auto& name : BuiltinArchitectureNames()) archs.push_back(architecture_by_name(name, 4));
  for (int i = 0; i < 100; ++i) archs.push_back(test::RandomArch(rng));
  int mismatches = 0;
  for (const auto& a : archs) {
    const WeightSet w = init_weights(a, 0.05f, 1);
    const auto x = test::RandomWindow(rng, a.input_t, a.input_f);
    if (instrumented_forward(a, w, x).mac_count != report(a).total.multiplies) ++mismatches;
  }
  return {mismatches == 0, std::to_string(archs.size()) + " specs, " +
                               std::to_string(mismatches) + " mismatches"};
}

Outcome Frontend() {
  const auto silence_path = Work() / "silence.wav";
  const auto tone_path = Work() / "tone.wav";
  Waveform tone;
  tone.samples.resize(16000);
  for (int i = 0; i < 16000; ++i) tone.samples[i] = 0.5f * std::sin(2 * M_PI * 1000.0 * i / 16000);
  write_wav(silence_path, Waveform{std::vector<float>(16000, 0.0f)});
  write_wav(tone_path, tone);

  const json doc = Structured("featurize " + tone_path.string() + " --out " +
                              (Work() / "tone.feats").string());
  const bool cli_dims = doc.is_object() && doc.at("frames") == 98 && doc.at("bins") == 40;

  const auto silent = compute_log_mel(read_wav(silence_path));
  const double floor = std::log(1e-10);
  double worst = 0.0;
  for (const auto& f : silent) {
    for (float v : f) worst = std::max(worst, std::abs(v - floor));
  }
  const bool dims = silent.size() == 98 && silent[0].size() == 40;

  const auto frames = compute_log_mel(read_wav(tone_path));
  std::vector<double> mean(40, 0.0);
  for (const auto& f : frames) {
    for (int b = 0; b < 40; ++b) mean[b] += f[b];
  }
  const int peak = static_cast<int>(std::max_element(mean.begin(), mean.end()) - mean.begin());
  const auto fb = build_mel_filterbank(FrameConfig{}, 16000);
  int nearest = 0;
  for (int b = 1; b < 40; ++b) {
    if (std::abs(fb.centers_hz[b] - 1000.0) < std::abs(fb.centers_hz[nearest] - 1000.0)) nearest = b;
  }
  return {cli_dims && dims && worst <= 1e-6 && peak == nearest,
          "98x40 " + std::string(cli_dims && dims ? "ok" : "wrong") + ", silence dev " +
              Fmt("%.1e", worst) + ", tone peak bin " + std::to_string(peak) + " (nearest " +
              std::to_string(nearest) + ")"};
}

Outcome GradientCheck() {
  double worst = 0.0;
  for (const ArchSpec& a : {build_dnn_baseline(4), build_cnn_trad(4), build_cnn_one(4)}) {
    for (std::uint64_t seed : {7, 8, 9}) {
      Rng rng(seed);
      const WeightSet w = init_weights(a, 0.05f, seed);
      const LabeledExample e{test::RandomWindow(rng, a.input_t, a.input_f, -3.0, 3.0),
                             static_cast<int>(seed % 4)};
      GradCheckOptions opts;
      opts.seed = seed;
      worst = std::max(worst, grad_check(a, w, e, opts).max_relative_error);
    }
  }
  return {worst < 1e-4, "max relative error " + Fmt("%.2e", worst) + " < 1e-4"};
}

std::string Field(const std::string& out, const std::string& key) {
  const auto at = out.find(key);
  if (at == std::string::npos) return "";
  const auto start = at + key.size();
  return out.substr(start, out.find_first_of(" \n)", start) - start);
}

struct Run6 {
  int exit_code = -1;
  double train_acc = 0, test_acc = 0;
  std::vector<unsigned char> model;
  std::string kw_events, noise_events;
};

// Trains from scratch and detects on fixed keyword and noise recordings.
Run6 TrainAndDetect(const std::string& tag) {
  Run6 r;
  const auto model = Work() / (tag + ".kwsm");
  const auto t = test::Run(kCli + " train --arch cnn-one --synthetic 3 --seed 1 --epochs 200 --out " +
                           model.string());
  r.exit_code = t.exit_code;
  if (t.exit_code != 0) return r;
  r.train_acc = std::stod("0" + Field(t.out, "final train accuracy "));
  r.test_acc = std::stod("0" + Field(t.out, "held-out accuracy "));
  r.model = test::ReadBytes(model);
  r.kw_events = test::Run(kCli + " detect --threshold 0.7 --model " + model.string() + " " +
                          (Work() / "kw02.wav").string())
                    .out;
  r.noise_events = test::Run(kCli + " detect --threshold 0.7 --model " + model.string() + " " +
                             (Work() / "noise.wav").string())
                       .out;
  return r;
}

int CountEvents(const std::string& out, const std::string& name, int* total) {
  std::istringstream in(out);
  std::string line;
  int hits = 0;
  *total = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    ++*total;
    hits += line.find("\t" + name + "\t") != std::string::npos;
  }
  return hits;
}

Run6 first_run;

Outcome Training() {
  Rng rng(31337);
  write_wav(Work() / "kw02.wav", synth_utterance(1, 3, 0.3f, rng));
  write_wav(Work() / "noise.wav", synth_utterance(-1, 3, 0.3f, rng));
  first_run = TrainAndDetect("a");
  if (first_run.exit_code != 0) return {false, "train exited " + std::to_string(first_run.exit_code)};
  int kw_total = 0, noise_total = 0;
  const int correct = CountEvents(first_run.kw_events, "kw02", &kw_total);
  CountEvents(first_run.noise_events, "kw02", &noise_total);
  return {first_run.train_acc >= 0.90 && first_run.test_acc >= 0.80 && correct >= 1 &&
              noise_total == 0,
          "train acc " + Fmt("%.4f", first_run.train_acc) + ", held-out " +
              Fmt("%.4f", first_run.test_acc) + ", keyword events " + std::to_string(correct) +
              "/" + std::to_string(kw_total) + " correct, noise events " +
              std::to_string(noise_total)};
}

Outcome Determinism() {
  if (first_run.exit_code != 0) return {false, "first training run failed"};
  const Run6 again = TrainAndDetect("b");
  const bool same_model = !again.model.empty() && again.model == first_run.model;
  const bool same_events =
      again.kw_events == first_run.kw_events && again.noise_events == first_run.noise_events;
  char sum[32];
  std::snprintf(sum, sizeof sum, "%016llx", static_cast<unsigned long long>(checksum(again.model)));
  return {same_model && same_events, std::string("model ") + (same_model ? "identical" : "differs") +
                                         " (" + sum + "), events " +
                                         (same_events ? "identical" : "differ")};
}

Outcome Serialization() {
  bool round_trip = true;
  for (const auto& name : BuiltinArchitectureNames()) {
    const ArchSpec a = architecture_by_name(name, 4);
    Model m{a, init_weights(a, 0.05f, 5), {"_filler", "kw01", "kw02", "kw03"}};
    const auto p1 = Work() / (name + ".1.kwsm");
    const auto p2 = Work() / (name + ".2.kwsm");
    save_model(m, p1);
    save_model(load_model(p1), p2);
    round_trip &= test::ReadBytes(p1) == test::ReadBytes(p2);
  }
  const ArchSpec a = build_cnn_one(4);
  const auto good = encode_model({a, init_weights(a, 0.05f, 5), {"_filler", "a", "b", "c"}});
  auto kind_of = [](std::vector<unsigned char> bytes) -> int {
    try {
      decode_model(bytes);
    } catch (const ModelError& e) {
      return static_cast<int>(e.model_kind());
    }
    return -1;
  };
  auto magic = good, version = good, truncated = good;
  magic[0] = 'Q';
  version[4] = 2;
  truncated.resize(truncated.size() - 4);
  const int km = kind_of(magic), kv = kind_of(version), kt = kind_of(truncated);
  const bool distinct = km == static_cast<int>(ModelErrorKind::kBadMagic) &&
                        kv == static_cast<int>(ModelErrorKind::kUnsupportedVersion) &&
                        kt == static_cast<int>(ModelErrorKind::kTruncated);
  return {round_trip && distinct, std::string("round trip ") + (round_trip ? "ok" : "differs") +
                                      ", error kinds magic/version/truncation = " +
                                      std::to_string(km) + "/" + std::to_string(kv) + "/" +
                                      std::to_string(kt)};
}

Outcome PerformancePath() {
  Rng rng(90210);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Dims3 in{test::RandInt(rng, 1, 40), test::RandInt(rng, 1, 40), test::RandInt(rng, 1, 8)};
    const FilterBank fb =
        test::RandomFilters(rng, test::RandInt(rng, 1, in.time), test::RandInt(rng, 1, in.freq),
                            in.channels, test::RandInt(rng, 1, 64));
    const StridePair st{test::RandInt(rng, 1, 3), test::RandInt(rng, 1, 3)};
    const Tensor3 x = test::RandomTensor(rng, in);
    worst = std::max(worst, max_relative_deviation(conv2d_valid(x, fb, st).data(),
                                                   conv2d_optimized(x, fb, st).data()));
  }
  std::ostringstream detail;
  detail << "1000 cases max rel dev " << Fmt("%.1e", worst);
  bool bench_ok = first_run.exit_code == 0;
  for (const std::string path : {"naive", "optimized"}) {
    const json doc = Structured("bench --model " + (Work() / "a.kwsm").string() +
                                " --iters 20 --path " + path);
    const bool ok = doc.is_object() && doc.at("agreement").at("ok") == true;
    bench_ok &= ok;
    detail << "; bench " << path << " "
           << (ok ? Fmt("%.1f us", doc.at("mean_us").get<double>()) : std::string("failed"));
  }
  return {worst <= 1e-5 && bench_ok, detail.str()};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "multiply reduction cnn-trad vs cnn-one", 1.0, MultiplyRatio},
      {2, "parameter cap fit", 1.0, ParameterCap},
      {3, "analytic vs instrumented MAC counts", 30.0, CountOracle},
      {4, "frontend contract", 5.0, Frontend},
      {5, "gradient check", 120.0, GradientCheck},
      {6, "end-to-end training and detection", 300.0, Training},
      {7, "determinism", 300.0, Determinism},
      {8, "serialization", 5.0, Serialization},
      {9, "optimized conv agreement and bench", 0.0, PerformancePath},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.limit_s == 0.0 || secs < c.limit_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("criterion %d: %s  %s: %s [%.2f s%s]\n", c.id, pass ? "PASS" : "FAIL",
                c.title.c_str(), o.detail.c_str(), secs,
                c.limit_s == 0.0 ? "" : (in_time ? ", within limit" : ", over limit"));
    std::fflush(stdout);
  }
  std::filesystem::remove_all(Work());
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}

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

// kws: featurize, describe, budget, fit, train, detect, bench.
//
// Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numeric
// failure (divergence, NaN, path disagreement).

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kws/budget.hpp"
#include "kws/frontend.hpp"
#include "kws/json_io.hpp"
#include "kws/model_io.hpp"
#include "kws/pipeline.hpp"
#include "kws/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kFrameSeconds = 0.010;
constexpr double kAgreementTolerance = 1e-5;

int ExitCode(kws::ErrorKind kind) {
  switch (kind) {
    case kws::ErrorKind::kInvalidArgument: return 1;
    case kws::ErrorKind::kNumeric: return 3;
    default: return 2;
  }
}

struct Output {
  bool structured = false;

  // Human-readable lines are suppressed in structured mode.
  template <class... Args>
  void line(const char* fmt, Args... args) const {
    if (structured) return;
    std::printf(fmt, args...);
    std::printf("\n");
  }
  void document(const json& doc) const {
    if (structured) std::cout << doc.dump(2) << std::endl;
  }
};

std::uint64_t SeedOrEnv(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("KWS_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw kws::Error(kws::ErrorKind::kInvalidArgument, "KWS_SEED is not an integer");
    }
  }
  return 1;
}

kws::ContextConfig ParseContext(const std::string& text) {
  const auto comma = text.find(',');
  try {
    if (comma == std::string::npos) throw std::invalid_argument("no comma");
    std::size_t used = 0;
    kws::ContextConfig ctx;
    ctx.left = std::stoi(text.substr(0, comma), &used);
    if (used != comma) throw std::invalid_argument("trailing");
    const std::string rest = text.substr(comma + 1);
    ctx.right = std::stoi(rest, &used);
    if (used != rest.size()) throw std::invalid_argument("trailing");
    if (ctx.left < 0 || ctx.right < 0) throw std::invalid_argument("negative");
    return ctx;
  } catch (const std::exception&) {
    throw kws::Error(kws::ErrorKind::kInvalidArgument,
                     "--context expects L,R with non-negative integers, got '" + text + "'");
  }
}

// --- featurize -------------------------------------------------------------

struct FeaturizeArgs {
  std::string input;
  std::string out;
  std::string context;
};

json FeaturizeFile(const fs::path& in, const fs::path& out,
                   const std::optional<kws::ContextConfig>& ctx) {
  const kws::Waveform wave = kws::read_wav(in);
  const auto mel = kws::compute_log_mel(wave);
  const auto windows = kws::stack_context(mel, ctx.value_or(kws::ContextConfig{}));
  kws::write_feature_dump(out, windows);
  return {{"input", in.string()},
          {"out", out.string()},
          {"frames", mel.size()},
          {"bins", mel.front().size()},
          {"windows", windows.size()},
          {"t", windows.front().t},
          {"f", windows.front().f}};
}

int CmdFeaturize(const FeaturizeArgs& a, const Output& out) {
  std::optional<kws::ContextConfig> ctx;
  if (!a.context.empty()) ctx = ParseContext(a.context);
  const kws::FrameConfig cfg;
  out.line("# frontend: window %d, hop %d, fft %d, preemphasis %.2f, %d mel filters %g-%g Hz",
           cfg.window_length, cfg.hop, cfg.fft_size, cfg.preemphasis, cfg.mel_filters,
           cfg.fmin, cfg.fmax);

  if (!fs::is_directory(a.input)) {
    const json r = FeaturizeFile(a.input, a.out, ctx);
    out.line("%zu frames x %zu", r["frames"].get<std::size_t>(), r["bins"].get<std::size_t>());
    if (ctx) {
      out.line("%zu windows of %dx%d", r["windows"].get<std::size_t>(), r["t"].get<int>(),
               r["f"].get<int>());
    }
    out.line("wrote %s", a.out.c_str());
    json doc = r;
    doc["command"] = "featurize";
    out.document(doc);
    return 0;
  }

  // Directory mode: one dump per .wav, written under --out.
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(a.input)) {
    if (e.is_regular_file() && e.path().extension() == ".wav") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  fs::create_directories(a.out);
  std::vector<json> results(files.size());
  std::vector<std::string> errors(files.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < files.size(); ++i) {
    try {
      const fs::path dst = fs::path(a.out) / (files[i].stem().string() + ".feats");
      results[i] = FeaturizeFile(files[i], dst, ctx);
    } catch (const std::exception& e) {
      errors[i] = files[i].string() + ": " + e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw kws::Error(kws::ErrorKind::kData, e);
  }
  for (const auto& r : results) {
    out.line("%s: %zu frames x %zu", r["input"].get<std::string>().c_str(),
             r["frames"].get<std::size_t>(), r["bins"].get<std::size_t>());
  }
  out.document({{"command", "featurize"}, {"files", results}});
  return 0;
}

// --- describe / budget / fit ----------------------------------------------

void PrintArch(const kws::ArchSpec& arch, const Output& out) {
  const auto trace = kws::validate(arch);
  out.line("architecture: %s", arch.name.c_str());
  out.line("input: %dx%d (context %d left, %d right)", arch.input_t, arch.input_f,
           arch.context.left, arch.context.right);
  for (const auto& e : trace.entries) {
    out.line("  %-8s %s", e.stage.c_str(), e.shape.str().c_str());
  }
}

int CmdDescribe(const std::string& arch_name, const std::string& model_path, int labels,
                const Output& out) {
  kws::ArchSpec arch;
  std::vector<std::string> names;
  if (!model_path.empty()) {
    const kws::Model model = kws::load_model(model_path);
    arch = model.arch;
    names = model.labels;
  } else if (!arch_name.empty()) {
    arch = kws::architecture_by_name(arch_name, labels);
  } else {
    throw kws::Error(kws::ErrorKind::kInvalidArgument, "describe needs --arch or --model");
  }
  PrintArch(arch, out);
  if (!names.empty()) {
    std::string joined;
    for (const auto& n : names) joined += (joined.empty() ? "" : ", ") + n;
    out.line("labels: %s", joined.c_str());
  }
  const auto r = kws::report(arch);
  out.line("params %llu, multiplies %llu", static_cast<unsigned long long>(r.total.params),
           static_cast<unsigned long long>(r.total.multiplies));
  out.document({{"command", "describe"},
                {"arch", kws::arch_to_json(arch)},
                {"trace", kws::trace_to_json(kws::validate(arch))},
                {"labels", names},
                {"total", {{"params", r.total.params}, {"multiplies", r.total.multiplies}}}});
  return 0;
}

std::string TwoDecimals(const kws::Ratio& r) {
  // Exact rational, rounded half up at the second decimal.
  const unsigned long long hundredths = (200 * r.num + r.den) / (2 * r.den);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%llu.%02llu", hundredths / 100, hundredths % 100);
  return buf;
}

int CmdBudget(const std::string& arch_name, const std::string& compare_name, int labels,
              const Output& out) {
  const auto arch = kws::architecture_by_name(arch_name, labels);
  const auto r = kws::report(arch);
  if (!out.structured) std::cout << kws::format_report_table(r);
  json doc = {{"command", "budget"}, {"labels", labels}, {"report", kws::report_to_json(r)}};
  if (!compare_name.empty()) {
    const auto other = kws::architecture_by_name(compare_name, labels);
    const auto rb = kws::report(other);
    if (!out.structured) std::cout << "\n" << kws::format_report_table(rb);
    const auto c = kws::compare(arch, other);
    out.line("\nmultiply ratio %s/%s: %s (%llu/%llu)", arch.name.c_str(), other.name.c_str(),
             TwoDecimals(c.multiply_ratio).c_str(),
             static_cast<unsigned long long>(c.multiply_ratio.num),
             static_cast<unsigned long long>(c.multiply_ratio.den));
    out.line("param ratio %s/%s: %s (%llu/%llu)", arch.name.c_str(), other.name.c_str(),
             TwoDecimals(c.param_ratio).c_str(),
             static_cast<unsigned long long>(c.param_ratio.num),
             static_cast<unsigned long long>(c.param_ratio.den));
    doc["compare"] = kws::report_to_json(rb);
    doc["multiply_ratio"] = {{"num", c.multiply_ratio.num},
                             {"den", c.multiply_ratio.den},
                             {"value", c.multiply_ratio.value()},
                             {"rounded", TwoDecimals(c.multiply_ratio)}};
    doc["param_ratio"] = {{"num", c.param_ratio.num},
                          {"den", c.param_ratio.den},
                          {"value", c.param_ratio.value()},
                          {"rounded", TwoDecimals(c.param_ratio)}};
  }
  out.document(doc);
  return 0;
}

kws::ArchSpec TemplateByName(const std::string& name, int labels) {
  if (name == "cnn-tstride2") return kws::build_cnn_tstride(labels, 2);
  if (name == "cnn-tpool2") return kws::build_cnn_tpool(labels, 2);
  throw kws::Error(kws::ErrorKind::kInvalidArgument,
                   "fit needs a template architecture (cnn-tstride2 or cnn-tpool2), got '" +
                       name + "'");
}

int CmdFit(const std::string& arch_name, std::uint64_t cap, int labels, const Output& out) {
  const auto tmpl = TemplateByName(arch_name, labels);
  const auto fit = kws::fit_to_budget(tmpl, cap);
  const auto next = kws::report(kws::with_feature_maps(tmpl, fit.feature_maps + 1));
  if (fit.report.total.params > cap || next.total.params <= cap) {
    throw kws::Error(kws::ErrorKind::kNumeric, "fit result violates cap or maximality");
  }
  out.line("template: %s, cap %llu params, labels %d", tmpl.name.c_str(),
           static_cast<unsigned long long>(cap), labels);
  if (!out.structured) std::cout << kws::format_report_table(fit.report);
  out.line("feature maps n = %d", fit.feature_maps);
  out.line("params %llu <= cap %llu; n+1 = %d gives %llu > cap",
           static_cast<unsigned long long>(fit.report.total.params),
           static_cast<unsigned long long>(cap), fit.feature_maps + 1,
           static_cast<unsigned long long>(next.total.params));
  out.document({{"command", "fit"},
                {"template", tmpl.name},
                {"cap", cap},
                {"labels", labels},
                {"feature_maps", fit.feature_maps},
                {"report", kws::report_to_json(fit.report)},
                {"next_params", next.total.params}});
  return 0;
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  std::string arch = "cnn-one";
  std::string data;
  int synthetic = 0;
  std::optional<std::uint64_t> seed;
  int epochs = 200;
  float lr = 0.01f;
  int batch_size = 16;
  float init_scale = 0.05f;
  int per_class = 20;
  float noise = 0.3f;
  std::string out;
};

int CmdTrain(const TrainArgs& a, const Output& out) {
  if (a.data.empty() == (a.synthetic == 0)) {
    throw kws::Error(kws::ErrorKind::kInvalidArgument,
                     "train needs exactly one of --data DIR or --synthetic K");
  }
  kws::TrainConfig cfg;
  cfg.learning_rate = a.lr;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch_size;
  cfg.seed = SeedOrEnv(a.seed);
  cfg.init_scale = a.init_scale;
  cfg.check();

  kws::WaveDataset ds;
  if (a.synthetic > 0) {
    ds = kws::make_synthetic_dataset({a.synthetic, a.per_class, a.noise, cfg.seed});
  } else {
    ds = kws::load_dataset_dir(a.data);
  }
  const int labels = static_cast<int>(ds.class_names.size());
  const auto arch = kws::architecture_by_name(a.arch, labels);
  const auto train_set = kws::make_examples(ds.train, arch.context);
  const auto test_set = kws::make_examples(ds.test, arch.context);

  out.line("# arch %s, labels %d, seed %llu, epochs %d, lr %g, batch %d, init_scale %g",
           arch.name.c_str(), labels, static_cast<unsigned long long>(cfg.seed), cfg.epochs,
           cfg.learning_rate, cfg.batch_size, cfg.init_scale);
  out.line("# train examples %zu, held-out examples %zu", train_set.size(), test_set.size());

  const auto result = kws::train(arch, train_set, cfg);
  json history = json::array();
  for (const auto& h : result.history) {
    out.line("epoch %d loss %.6f acc %.4f", h.epoch, h.loss, h.accuracy);
    history.push_back({{"epoch", h.epoch}, {"loss", h.loss}, {"accuracy", h.accuracy}});
  }
  const double train_acc = kws::accuracy(arch, result.weights, train_set);
  out.line("final train accuracy %.4f", train_acc);
  json doc = {{"command", "train"},
              {"arch", arch.name},
              {"labels", ds.class_names},
              {"seed", cfg.seed},
              {"history", history},
              {"train_accuracy", train_acc}};
  if (!test_set.empty()) {
    const double test_acc = kws::accuracy(arch, result.weights, test_set);
    out.line("held-out accuracy %.4f", test_acc);
    doc["test_accuracy"] = test_acc;
  }

  const kws::Model model{arch, result.weights, ds.class_names};
  const auto bytes = kws::encode_model(model);
  kws::save_model(model, a.out);
  char sum[32];
  std::snprintf(sum, sizeof sum, "%016llx",
                static_cast<unsigned long long>(kws::checksum(bytes)));
  out.line("wrote %s (%zu bytes, checksum %s)", a.out.c_str(), bytes.size(), sum);
  doc["out"] = a.out;
  doc["bytes"] = bytes.size();
  doc["checksum"] = sum;
  out.document(doc);
  return 0;
}

// --- detect ----------------------------------------------------------------

struct DetectArgs {
  std::string model;
  std::string input;
  float threshold = 0.7f;
  int w_smooth = 30;
  int w_max = 100;
  int refractory = 30;
};

int CmdDetect(const DetectArgs& a, const Output& out) {
  kws::DetectorConfig cfg;
  cfg.threshold = a.threshold;
  cfg.w_smooth = a.w_smooth;
  cfg.w_max = a.w_max;
  cfg.refractory = a.refractory;
  cfg.check();
  const kws::Model model = kws::load_model(a.model);
  const kws::Waveform wave = kws::read_wav(a.input);
  const auto events = kws::detect_keywords(model, wave, cfg);
  json list = json::array();
  for (const auto& e : events) {
    const std::string& name = model.labels[e.keyword];
    if (!out.structured) {
      std::printf("%d\t%.2f\t%s\t%.4f\n", e.frame_index, e.frame_index * kFrameSeconds,
                  name.c_str(), e.confidence);
    }
    list.push_back({{"frame_index", e.frame_index},
                    {"time_seconds", e.frame_index * kFrameSeconds},
                    {"keyword", name},
                    {"confidence", e.confidence}});
  }
  out.document({{"command", "detect"},
                {"threshold", cfg.threshold},
                {"w_smooth", cfg.w_smooth},
                {"w_max", cfg.w_max},
                {"refractory", cfg.refractory},
                {"events", list}});
  return 0;
}

// --- bench -----------------------------------------------------------------

int CmdBench(const std::string& model_path, int iters, const std::string& path_name,
             std::optional<std::uint64_t> seed_flag, const Output& out) {
  if (iters < 1) throw kws::Error(kws::ErrorKind::kInvalidArgument, "--iters must be >= 1");
  kws::ConvPath path;
  if (path_name == "naive") {
    path = kws::ConvPath::kNaive;
  } else if (path_name == "optimized") {
    path = kws::ConvPath::kOptimized;
  } else {
    throw kws::Error(kws::ErrorKind::kInvalidArgument, "--path must be naive or optimized");
  }
  const kws::Model model = kws::load_model(model_path);
  const std::uint64_t seed = SeedOrEnv(seed_flag);
  kws::Rng rng(seed);
  kws::FeatureWindow x{model.arch.input_t, model.arch.input_f, {}};
  x.data.resize(static_cast<std::size_t>(x.t) * x.f);
  for (float& v : x.data) v = static_cast<float>(rng.uniform(-10.0, 5.0));

  kws::ForwardOptions naive_opts;
  naive_opts.conv_path = kws::ConvPath::kNaive;
  const auto reference = kws::forward(model.arch, model.weights, x, naive_opts);
  const auto fast = kws::forward(model.arch, model.weights, x);
  const double dev = kws::max_relative_deviation(reference, fast);
  if (!(dev <= kAgreementTolerance)) {
    std::fprintf(stderr, "error: naive and optimized paths disagree (max rel dev %.3e)\n", dev);
    return 3;
  }
  out.line("# model %s, seed %llu, path %s, iters %d", model.arch.name.c_str(),
           static_cast<unsigned long long>(seed), path_name.c_str(), iters);
  out.line("agreement: OK (max rel dev %.3e <= %.0e)", dev, kAgreementTolerance);

  kws::ForwardOptions opts;
  opts.conv_path = path;
  std::vector<double> micros(iters);
  for (int i = 0; i < iters; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto p = kws::forward(model.arch, model.weights, x, opts);
    const auto t1 = std::chrono::steady_clock::now();
    if (p.empty()) return 3;
    micros[i] = std::chrono::duration<double, std::micro>(t1 - t0).count();
  }
  const double mean = std::accumulate(micros.begin(), micros.end(), 0.0) / iters;
  std::vector<double> sorted = micros;
  std::sort(sorted.begin(), sorted.end());
  const double median = iters % 2 ? sorted[iters / 2]
                                  : 0.5 * (sorted[iters / 2 - 1] + sorted[iters / 2]);
  const double throughput = 1e6 / mean;
  out.line("latency [%s]: mean %.1f us, median %.1f us", path_name.c_str(), mean, median);
  out.line("throughput [%s]: %.1f windows/s", path_name.c_str(), throughput);
  out.document({{"command", "bench"},
                {"model", model.arch.name},
                {"path", path_name},
                {"iters", iters},
                {"agreement", {{"ok", true}, {"max_relative_deviation", dev}}},
                {"mean_us", mean},
                {"median_us", median},
                {"windows_per_second", throughput}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Small-footprint keyword spotting toolkit"};
  app.require_subcommand(1);
  std::string format = "text";
  app.add_option("--format", format, "Output format")
      ->check(CLI::IsMember({"text", "structured"}));

  FeaturizeArgs featurize;
  auto* c_feat = app.add_subcommand("featurize", "WAV -> log-mel feature dump");
  c_feat->add_option("input", featurize.input, "16 kHz mono 16-bit WAV (or a directory)")->required();
  c_feat->add_option("--out", featurize.out, "Output feature dump")->required();
  c_feat->add_option("--context", featurize.context, "Stack L,R context frames");

  std::string describe_arch, describe_model;
  int describe_labels = 4;
  auto* c_desc = app.add_subcommand("describe", "Print an architecture's shape trace");
  c_desc->add_option("--arch", describe_arch, "Architecture name");
  c_desc->add_option("--model", describe_model, "Model file");
  c_desc->add_option("--labels", describe_labels, "Output classes (keywords + filler)");

  std::string budget_arch, budget_compare;
  int budget_labels = 4;
  auto* c_budget = app.add_subcommand("budget", "Parameter and multiply counts");
  c_budget->add_option("--arch", budget_arch, "Architecture name")->required();
  c_budget->add_option("--compare", budget_compare, "Second architecture for ratios");
  c_budget->add_option("--labels", budget_labels, "Output classes (keywords + filler)");

  std::string fit_arch;
  std::uint64_t fit_cap = kws::kParameterCap;
  int fit_labels = 4;
  auto* c_fit = app.add_subcommand("fit", "Fit feature maps under a parameter cap");
  c_fit->add_option("--arch", fit_arch, "cnn-tstride2 or cnn-tpool2")->required();
  c_fit->add_option("--cap", fit_cap, "Parameter cap");
  c_fit->add_option("--labels", fit_labels, "Output classes (keywords + filler)");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train a model with cross-entropy");
  c_train->add_option("--arch", train.arch, "Architecture name");
  c_train->add_option("--data", train.data, "Dataset root <root>/<class>/<x>.wav");
  c_train->add_option("--synthetic", train.synthetic, "Generate K synthetic keywords");
  c_train->add_option("--seed", train.seed, "Seed (falls back to KWS_SEED, then 1)");
  c_train->add_option("--epochs", train.epochs, "Epochs");
  c_train->add_option("--lr", train.lr, "Learning rate");
  c_train->add_option("--batch-size", train.batch_size, "Mini-batch size");
  c_train->add_option("--init-scale", train.init_scale, "Uniform init half-width");
  c_train->add_option("--per-class", train.per_class, "Synthetic examples per class");
  c_train->add_option("--noise", train.noise, "Synthetic noise level in [0,1)");
  c_train->add_option("--out", train.out, "Output model file")->required();

  DetectArgs det;
  auto* c_detect = app.add_subcommand("detect", "Stream a WAV through a model");
  c_detect->add_option("--model", det.model, "Model file")->required();
  c_detect->add_option("input", det.input, "16 kHz mono 16-bit WAV")->required();
  c_detect->add_option("--threshold", det.threshold, "Confidence threshold in (0,1]");
  c_detect->add_option("--w-smooth", det.w_smooth, "Smoothing window (frames)");
  c_detect->add_option("--w-max", det.w_max, "Confidence window (frames)");
  c_detect->add_option("--refractory", det.refractory, "Refractory period (frames)");

  std::string bench_model, bench_path = "optimized";
  int bench_iters = 100;
  std::optional<std::uint64_t> bench_seed;
  auto* c_bench = app.add_subcommand("bench", "Forward-pass latency for one conv path");
  c_bench->add_option("--model", bench_model, "Model file")->required();
  c_bench->add_option("--iters", bench_iters, "Timed iterations");
  c_bench->add_option("--path", bench_path, "naive or optimized");
  c_bench->add_option("--seed", bench_seed, "Input seed (falls back to KWS_SEED)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const Output out{format == "structured"};
  try {
    if (*c_feat) return CmdFeaturize(featurize, out);
    if (*c_desc) return CmdDescribe(describe_arch, describe_model, describe_labels, out);
    if (*c_budget) return CmdBudget(budget_arch, budget_compare, budget_labels, out);
    if (*c_fit) return CmdFit(fit_arch, fit_cap, fit_labels, out);
    if (*c_train) return CmdTrain(train, out);
    if (*c_detect) return CmdDetect(det, out);
    if (*c_bench) return CmdBench(bench_model, bench_iters, bench_path, bench_seed, out);
  } catch (const kws::Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", kws::ErrorKindName(e.kind()), e.what());
    return ExitCode(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}

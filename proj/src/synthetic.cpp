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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "kws/training.hpp"

namespace kws {
namespace {

constexpr int kUtteranceSamples = kSampleRate;  // 1 s
constexpr int kGateSamples = kSampleRate / 10;  // 100 ms on, 100 ms off

std::string KeywordName(int k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "kw%02d", k + 1);
  return buf;
}

}  // namespace

int WaveDataset::filler_index() const {
  const auto it = std::find(class_names.begin(), class_names.end(), kFillerName);
  return it == class_names.end() ? -1 : static_cast<int>(it - class_names.begin());
}

ToneSignature keyword_signature(int k, int keywords) {
  const double spacing = std::min(450.0, 4800.0 / std::max(keywords, 1));
  const double low = 300.0 + spacing * k;
  return {low, low + 1700.0};
}

Waveform synth_utterance(int keyword, int keywords, float noise_level, Rng& rng) {
  Waveform w;
  w.samples.assign(kUtteranceSamples, 0.0f);
  const double noise_sigma = 0.25 * noise_level;
  if (keyword >= 0) {
    const ToneSignature sig = keyword_signature(keyword, keywords);
    const double jitter = rng.uniform(0.98, 1.02);
    const double amp = rng.uniform(0.35, 0.55);
    const double phase_lo = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double phase_hi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const auto gate_offset = static_cast<int>(rng.below(2 * kGateSamples));
    for (int n = 0; n < kUtteranceSamples; ++n) {
      if (((n + gate_offset) / kGateSamples) % 2 != 0) continue;
      const double time = static_cast<double>(n) / kSampleRate;
      const double v =
          amp * std::sin(2.0 * std::numbers::pi * sig.low_hz * jitter * time + phase_lo) +
          0.5 * amp * std::sin(2.0 * std::numbers::pi * sig.high_hz * jitter * time + phase_hi);
      w.samples[n] = static_cast<float>(v);
    }
  }
  for (float& s : w.samples) {
    s = static_cast<float>(std::clamp(s + noise_sigma * rng.gaussian(), -1.0, 1.0));
  }
  return w;
}

WaveDataset make_synthetic_dataset(const SyntheticSpec& spec) {
  if (spec.keywords < 1) throw Error(ErrorKind::kInvalidArgument, "need at least one keyword");
  if (spec.examples_per_class < 1) {
    throw Error(ErrorKind::kInvalidArgument, "need at least one example per class");
  }
  if (!(spec.noise_level >= 0.0f && spec.noise_level < 1.0f)) {
    throw Error(ErrorKind::kInvalidArgument, "noise level must be in [0, 1)");
  }
  WaveDataset ds;
  ds.class_names.push_back(kFillerName);
  for (int k = 0; k < spec.keywords; ++k) ds.class_names.push_back(KeywordName(k));

  auto fill = [&](std::vector<LabeledWave>& dst, std::uint64_t seed) {
    Rng rng(seed);
    for (int label = 0; label < static_cast<int>(ds.class_names.size()); ++label) {
      for (int e = 0; e < spec.examples_per_class; ++e) {
        dst.push_back({synth_utterance(label - 1, spec.keywords, spec.noise_level, rng), label});
      }
    }
  };
  fill(ds.train, spec.seed);
  fill(ds.test, spec.seed ^ 0x5deece66dULL);
  return ds;
}

WaveDataset load_dataset_dir(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) {
    throw Error(ErrorKind::kData, "dataset root " + root.string() + " is not a directory");
  }
  std::vector<fs::path> classes;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) classes.push_back(entry.path());
  }
  std::sort(classes.begin(), classes.end());
  if (classes.size() < 2) {
    throw Error(ErrorKind::kData, "dataset needs at least two class directories");
  }
  WaveDataset ds;
  for (const auto& dir : classes) {
    const int label = static_cast<int>(ds.class_names.size());
    ds.class_names.push_back(dir.filename().string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".wav") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) ds.train.push_back({read_wav(f), label});
  }
  if (ds.train.empty()) throw Error(ErrorKind::kData, "dataset contains no .wav files");
  return ds;
}

std::vector<LabeledExample> make_examples(const std::vector<LabeledWave>& waves,
                                          const ContextConfig& ctx,
                                          const FrameConfig& frames) {
  std::vector<LabeledExample> out;
  out.reserve(waves.size());
  for (const auto& w : waves) {
    const auto mel = compute_log_mel(w.wave, frames);
    out.push_back({context_window(mel, static_cast<int>(mel.size()) / 2, ctx), w.label});
  }
  return out;
}

}  // namespace kws

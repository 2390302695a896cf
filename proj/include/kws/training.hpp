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

// Cross-entropy training: exact backprop through every layer kind,
// finite-difference gradient checking, deterministic mini-batch descent and
// a synthetic multi-tone keyword corpus.

#ifndef KWS_TRAINING_HPP_
#define KWS_TRAINING_HPP_

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "kws/arch.hpp"
#include "kws/frontend.hpp"

namespace kws {

// Seeded generator whose derived values do not depend on the standard
// library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t below(std::uint64_t n) { return gen_() % n; }
  double gaussian();

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct LabeledExample {
  FeatureWindow window;
  int label = 0;
};

struct TrainConfig {
  float learning_rate = 0.01f;
  int epochs = 200;
  int batch_size = 16;
  std::uint64_t seed = 1;
  float init_scale = 0.05f;

  void check() const;
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;      // mean over the epoch, before each batch update
  double accuracy = 0.0;  // same pass
};

struct TrainResult {
  WeightSet weights;
  std::vector<EpochStats> history;
};

// Uniform in [-scale, scale], manifest order, biases included.
WeightSet init_weights(const ArchSpec& arch, float scale, std::uint64_t seed);

// -ln(max(posterior[label], 1e-12)).
double cross_entropy(std::span<const float> posterior, int label);

struct Gradients {
  std::vector<TensorInfo> manifest;
  std::vector<std::vector<double>> values;  // one per manifest entry
  double mean_loss = 0.0;

  const std::vector<double>* find(const std::string& name) const;
};

// Gradient of the mean cross-entropy over `batch`, computed in double.
Gradients backward(const ArchSpec& arch, const WeightSet& weights,
                   std::span<const LabeledExample> batch);

// Routes each pooled gradient to the earliest maximal input of its window.
Tensor3 maxpool_backward(const Tensor3& input, const PoolPair& pool,
                         const Tensor3& grad_out);

struct GradCheckOptions {
  double epsilon = 1e-3;
  int samples_per_tensor = 200;  // smaller tensors are checked exhaustively
  std::uint64_t seed = 7;
  // Denominator floor for |a - n| / max(|a|, |n|, floor).
  double abs_floor = 1e-8;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_tensor;
  std::size_t coordinates = 0;
  // Coordinates redrawn because +-epsilon changed a ReLU mask or pooling
  // argmax (the loss is not differentiable across those).
  std::size_t redrawn = 0;
};

// Central differences in double precision against backward().
GradCheckResult grad_check(const ArchSpec& arch, const WeightSet& weights,
                           const LabeledExample& example, GradCheckOptions opts = {});

// Mini-batch gradient descent; throws kNumeric if the loss goes non-finite.
TrainResult train(const ArchSpec& arch, const std::vector<LabeledExample>& data,
                  const TrainConfig& cfg);

// Same as train() but starts from the given weights.
TrainResult train_from(const ArchSpec& arch, WeightSet weights,
                       const std::vector<LabeledExample>& data, const TrainConfig& cfg);

int predict(const ArchSpec& arch, const WeightSet& weights, const FeatureWindow& x);
double accuracy(const ArchSpec& arch, const WeightSet& weights,
                const std::vector<LabeledExample>& data);

// --- datasets --------------------------------------------------------------

inline constexpr const char* kFillerName = "_filler";

struct SyntheticSpec {
  int keywords = 3;
  int examples_per_class = 20;
  float noise_level = 0.3f;  // [0, 1)
  std::uint64_t seed = 1;
};

struct LabeledWave {
  Waveform wave;
  int label = 0;
};

// Classes are sorted names, so the filler class "_filler" comes first.
struct WaveDataset {
  std::vector<std::string> class_names;
  std::vector<LabeledWave> train;
  std::vector<LabeledWave> test;

  int filler_index() const;
};

struct ToneSignature {
  double low_hz = 0.0;
  double high_hz = 0.0;
};

// Tone pair carried by keyword `k` (0-based among keywords).
ToneSignature keyword_signature(int k, int keywords);

// One second of 16 kHz audio: the keyword's tone pair gated 100 ms on /
// 100 ms off, plus white noise. keyword < 0 gives noise only.
Waveform synth_utterance(int keyword, int keywords, float noise_level, Rng& rng);

WaveDataset make_synthetic_dataset(const SyntheticSpec& spec);

// <root>/<class_name>/<example>.wav; everything goes into `train`.
WaveDataset load_dataset_dir(const std::filesystem::path& root);

// One window per waveform, centered on its middle frame.
std::vector<LabeledExample> make_examples(const std::vector<LabeledWave>& waves,
                                          const ContextConfig& ctx,
                                          const FrameConfig& frames = {});

}  // namespace kws

#endif  // KWS_TRAINING_HPP_

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

// Log-mel frontend: framing, mel filterbank, log energies, context stacking,
// plus the 16-bit PCM WAV reader/writer and the feature dump format.

#ifndef KWS_FRONTEND_HPP_
#define KWS_FRONTEND_HPP_

#include <filesystem>
#include <span>
#include <vector>

#include "kws/error.hpp"
#include "kws/tensor.hpp"

namespace kws {

inline constexpr int kSampleRate = 16000;

struct Waveform {
  std::vector<float> samples;  // in [-1, 1]
  int sample_rate = kSampleRate;
};

struct FrameConfig {
  int window_length = 400;  // 25 ms
  int hop = 160;            // 10 ms
  int fft_size = 512;
  float preemphasis = 0.97f;
  int mel_filters = 40;
  float fmin = 20.0f;
  float fmax = 8000.0f;
  float log_floor = 1e-10f;

  void check(int sample_rate) const;
};

struct ContextConfig {
  int left = 0;
  int right = 0;

  int frames() const { return left + 1 + right; }
  bool operator==(const ContextConfig&) const = default;
};

// One row of log filterbank energies.
using LogMelFrame = std::vector<float>;

// t x f context window, row-major by frame.
struct FeatureWindow {
  int t = 0;
  int f = 0;
  std::vector<float> data;

  Tensor3 as_tensor() const { return Tensor3({t, f, 1}, data); }
  bool operator==(const FeatureWindow&) const = default;
};

// Mel filterbank as a dense (mel_filters x fft_size/2+1) matrix.
struct MelFilterbank {
  int filters = 0;
  int bins = 0;
  std::vector<double> weights;   // row-major
  std::vector<double> centers_hz;

  double weight(int filter, int bin) const {
    return weights[static_cast<std::size_t>(filter) * bins + bin];
  }
};

double HzToMel(double hz);
double MelToHz(double mel);

int FrameCount(std::size_t samples, const FrameConfig& cfg);

// Pre-emphasized, Hamming-windowed frames, each window_length long.
std::vector<std::vector<float>> frame_signal(const Waveform& w,
                                             const FrameConfig& cfg);

MelFilterbank build_mel_filterbank(const FrameConfig& cfg, int sample_rate);

// |DFT|^2 of the zero-padded frame, bins 0..fft_size/2.
std::vector<double> power_spectrum(std::span<const float> frame, int fft_size);

std::vector<LogMelFrame> log_mel(const std::vector<std::vector<float>>& frames,
                                 const MelFilterbank& melbank, int fft_size,
                                 float log_floor);

// Whole pipeline: frame_signal -> log_mel.
std::vector<LogMelFrame> compute_log_mel(const Waveform& w,
                                         const FrameConfig& cfg = {});

// One window per frame; out-of-range context replicates the edge frame.
std::vector<FeatureWindow> stack_context(const std::vector<LogMelFrame>& frames,
                                         const ContextConfig& ctx);

// Single window centered on `frame`.
FeatureWindow context_window(const std::vector<LogMelFrame>& frames,
                             int frame, const ContextConfig& ctx);

// RIFF/WAVE, PCM 16-bit little-endian, mono, 16 kHz only.
Waveform read_wav(const std::filesystem::path& path);
Waveform parse_wav(std::span<const unsigned char> bytes);
void write_wav(const std::filesystem::path& path, const Waveform& w);
std::vector<unsigned char> encode_wav(const Waveform& w);

// Feature dump: ASCII header "t f count\n", then count*t*f float32 LE.
void write_feature_dump(const std::filesystem::path& path,
                        const std::vector<FeatureWindow>& windows);
std::vector<FeatureWindow> read_feature_dump(const std::filesystem::path& path);

}  // namespace kws

#endif  // KWS_FRONTEND_HPP_

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

#include "kws/frontend.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

namespace kws {
namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& FftwPlannerMutex() {
  static std::mutex mu;
  return mu;
}

class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard<std::mutex> lock(FftwPlannerMutex());
    plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard<std::mutex> lock(FftwPlannerMutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  void power(std::span<const float> frame, std::vector<double>& dst) {
    std::fill(in_, in_ + n_, 0.0);
    std::copy(frame.begin(), frame.end(), in_);
    fftw_execute(plan_);
    dst.resize(n_ / 2 + 1);
    for (int k = 0; k <= n_ / 2; ++k) {
      dst[k] = out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
    }
  }

 private:
  int n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

}  // namespace

void FrameConfig::check(int sample_rate) const {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorKind::kInvalidArgument, "frame config: " + msg);
  };
  if (sample_rate <= 0) fail("sample rate must be positive");
  if (hop < 1) fail("hop must be >= 1");
  if (hop > window_length) fail("hop exceeds window length");
  if (window_length > fft_size) fail("window length exceeds fft size");
  if ((fft_size & (fft_size - 1)) != 0) fail("fft size must be a power of two");
  if (!(preemphasis >= 0.0f && preemphasis < 1.0f)) fail("preemphasis must be in [0, 1)");
  if (mel_filters < 1) fail("need at least one mel filter");
  if (!(fmin >= 0.0f && fmin < fmax)) fail("need 0 <= fmin < fmax");
  if (fmax > sample_rate / 2.0f) fail("fmax above Nyquist");
  if (!(log_floor > 0.0f)) fail("log floor must be positive");
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

int FrameCount(std::size_t samples, const FrameConfig& cfg) {
  if (samples < static_cast<std::size_t>(cfg.window_length)) return 0;
  return static_cast<int>((samples - cfg.window_length) / cfg.hop) + 1;
}

std::vector<std::vector<float>> frame_signal(const Waveform& w,
                                             const FrameConfig& cfg) {
  if (w.sample_rate != kSampleRate) {
    throw Error(ErrorKind::kFormat, "unsupported sample rate " +
                                        std::to_string(w.sample_rate) +
                                        " Hz (expected 16000)");
  }
  cfg.check(w.sample_rate);
  if (!all_finite(w.samples)) {
    throw Error(ErrorKind::kData, "waveform contains non-finite samples");
  }
  const int count = FrameCount(w.samples.size(), cfg);
  if (count == 0) {
    throw Error(ErrorKind::kData,
                "insufficient audio: " + std::to_string(w.samples.size()) +
                    " samples, need at least " +
                    std::to_string(cfg.window_length));
  }

  const int len = cfg.window_length;
  std::vector<double> hamming(len);
  for (int n = 0; n < len; ++n) {
    hamming[n] = len == 1 ? 1.0
                          : 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n /
                                                   (len - 1));
  }

  std::vector<std::vector<float>> frames(count, std::vector<float>(len));
  for (int i = 0; i < count; ++i) {
    const std::size_t start = static_cast<std::size_t>(i) * cfg.hop;
    for (int n = 0; n < len; ++n) {
      const std::size_t pos = start + n;
      const double prev = pos > 0 ? w.samples[pos - 1] : 0.0;
      const double emphasized = w.samples[pos] - cfg.preemphasis * prev;
      frames[i][n] = static_cast<float>(emphasized * hamming[n]);
    }
  }
  return frames;
}

MelFilterbank build_mel_filterbank(const FrameConfig& cfg, int sample_rate) {
  cfg.check(sample_rate);
  const int bins = cfg.fft_size / 2 + 1;
  if (bins < cfg.mel_filters) {
    throw Error(ErrorKind::kInvalidArgument,
                "fewer FFT bins (" + std::to_string(bins) + ") than mel filters (" +
                    std::to_string(cfg.mel_filters) + ")");
  }
  MelFilterbank bank;
  bank.filters = cfg.mel_filters;
  bank.bins = bins;
  bank.weights.assign(static_cast<std::size_t>(bank.filters) * bins, 0.0);

  // filters + 2 equally spaced mel points; filter k spans points k..k+2.
  const double mel_lo = HzToMel(cfg.fmin);
  const double mel_hi = HzToMel(cfg.fmax);
  const double step = (mel_hi - mel_lo) / (cfg.mel_filters + 1);
  std::vector<double> edges(cfg.mel_filters + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = MelToHz(mel_lo + static_cast<double>(i) * step);
  }
  edges.front() = cfg.fmin;
  edges.back() = cfg.fmax;
  const double bin_hz = static_cast<double>(sample_rate) / cfg.fft_size;
  for (int k = 0; k < cfg.mel_filters; ++k) {
    const double left = edges[k];
    const double center = edges[k + 1];
    const double right = edges[k + 2];
    bank.centers_hz.push_back(center);
    bool any = false;
    for (int b = 0; b < bins; ++b) {
      const double hz = b * bin_hz;
      double v = 0.0;
      if (hz > left && hz <= center) {
        v = (hz - left) / (center - left);
      } else if (hz > center && hz < right) {
        v = (right - hz) / (right - center);
      }
      bank.weights[static_cast<std::size_t>(k) * bins + b] = v;
      any = any || v > 0.0;
    }
    if (!any) {
      throw Error(ErrorKind::kInvalidArgument,
                  "mel filter " + std::to_string(k) +
                      " covers no FFT bin; raise fft_size or fmin");
    }
  }
  return bank;
}

std::vector<double> power_spectrum(std::span<const float> frame, int fft_size) {
  if (frame.size() > static_cast<std::size_t>(fft_size)) {
    throw Error(ErrorKind::kShape, "frame longer than fft size");
  }
  RealFft fft(fft_size);
  std::vector<double> power;
  fft.power(frame, power);
  return power;
}

std::vector<LogMelFrame> log_mel(const std::vector<std::vector<float>>& frames,
                                 const MelFilterbank& melbank, int fft_size,
                                 float log_floor) {
  if (melbank.bins != fft_size / 2 + 1) {
    throw Error(ErrorKind::kShape, "mel filterbank bins do not match fft size");
  }
  RealFft fft(fft_size);
  std::vector<double> power;
  std::vector<LogMelFrame> out;
  out.reserve(frames.size());
  for (const auto& frame : frames) {
    if (frame.size() > static_cast<std::size_t>(fft_size)) {
      throw Error(ErrorKind::kShape, "frame longer than fft size");
    }
    fft.power(frame, power);
    LogMelFrame row(melbank.filters);
    for (int k = 0; k < melbank.filters; ++k) {
      double energy = 0.0;
      const double* w = melbank.weights.data() + static_cast<std::size_t>(k) * melbank.bins;
      for (int b = 0; b < melbank.bins; ++b) energy += w[b] * power[b];
      row[k] = static_cast<float>(std::log(std::max(energy, static_cast<double>(log_floor))));
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<LogMelFrame> compute_log_mel(const Waveform& w,
                                         const FrameConfig& cfg) {
  const auto frames = frame_signal(w, cfg);
  const auto bank = build_mel_filterbank(cfg, w.sample_rate);
  return log_mel(frames, bank, cfg.fft_size, cfg.log_floor);
}

FeatureWindow context_window(const std::vector<LogMelFrame>& frames, int frame,
                             const ContextConfig& ctx) {
  if (frames.empty()) throw Error(ErrorKind::kData, "no frames to stack");
  if (ctx.left < 0 || ctx.right < 0) {
    throw Error(ErrorKind::kInvalidArgument, "context sizes must be >= 0");
  }
  const int count = static_cast<int>(frames.size());
  if (frame < 0 || frame >= count) {
    throw Error(ErrorKind::kInvalidArgument, "frame index out of range");
  }
  FeatureWindow win;
  win.t = ctx.frames();
  win.f = static_cast<int>(frames.front().size());
  win.data.reserve(static_cast<std::size_t>(win.t) * win.f);
  for (int off = -ctx.left; off <= ctx.right; ++off) {
    const auto& src = frames[std::clamp(frame + off, 0, count - 1)];
    if (static_cast<int>(src.size()) != win.f) {
      throw Error(ErrorKind::kShape, "ragged log-mel frames");
    }
    win.data.insert(win.data.end(), src.begin(), src.end());
  }
  return win;
}

std::vector<FeatureWindow> stack_context(const std::vector<LogMelFrame>& frames,
                                         const ContextConfig& ctx) {
  if (frames.empty()) throw Error(ErrorKind::kData, "no frames to stack");
  std::vector<FeatureWindow> out;
  out.reserve(frames.size());
  for (int i = 0; i < static_cast<int>(frames.size()); ++i) {
    out.push_back(context_window(frames, i, ctx));
  }
  return out;
}

}  // namespace kws

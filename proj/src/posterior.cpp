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

#include "kws/posterior.hpp"

#include <algorithm>

#include "kws/error.hpp"

namespace kws {
namespace {

// Shared by the batch and streaming paths so both produce identical bits.
template <class Range>
std::vector<float> MeanOf(const Range& rows, std::size_t width) {
  std::vector<double> acc(width, 0.0);
  std::size_t count = 0;
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < width; ++k) acc[k] += row[k];
    ++count;
  }
  std::vector<float> out(width);
  for (std::size_t k = 0; k < width; ++k) {
    out[k] = static_cast<float>(acc[k] / static_cast<double>(count));
  }
  return out;
}

}  // namespace

void DetectorConfig::check() const {
  if (w_smooth < 1) throw Error(ErrorKind::kInvalidArgument, "w_smooth must be >= 1");
  if (w_max < 1) throw Error(ErrorKind::kInvalidArgument, "w_max must be >= 1");
  if (refractory < 0) throw Error(ErrorKind::kInvalidArgument, "refractory must be >= 0");
  if (!(threshold > 0.0f && threshold <= 1.0f)) {
    throw Error(ErrorKind::kInvalidArgument, "threshold must be in (0, 1]");
  }
}

std::vector<PosteriorFrame> smooth(const std::vector<PosteriorFrame>& stream,
                                   int w_smooth) {
  if (w_smooth < 1) throw Error(ErrorKind::kInvalidArgument, "w_smooth must be >= 1");
  std::vector<PosteriorFrame> out;
  out.reserve(stream.size());
  std::vector<std::vector<float>> window;
  for (std::size_t j = 0; j < stream.size(); ++j) {
    const std::size_t lo = j + 1 >= static_cast<std::size_t>(w_smooth) ? j + 1 - w_smooth : 0;
    window.clear();
    for (std::size_t i = lo; i <= j; ++i) window.push_back(stream[i].probs);
    out.push_back({MeanOf(window, stream[j].probs.size()), stream[j].frame_index});
  }
  return out;
}

std::vector<float> confidence(const std::vector<PosteriorFrame>& smoothed, int j,
                              const DetectorConfig& cfg) {
  if (j < 0 || j >= static_cast<int>(smoothed.size())) {
    throw Error(ErrorKind::kInvalidArgument, "frame index out of range");
  }
  const int lo = std::max(0, j - cfg.w_max + 1);
  std::vector<float> conf(smoothed[j].probs.size(), 0.0f);
  for (int i = lo; i <= j; ++i) {
    for (std::size_t k = 0; k < conf.size(); ++k) {
      conf[k] = std::max(conf[k], smoothed[i].probs[k]);
    }
  }
  if (cfg.filler_index >= 0 && static_cast<std::size_t>(cfg.filler_index) < conf.size()) {
    conf[cfg.filler_index] = 0.0f;
  }
  return conf;
}

StreamingDetector::StreamingDetector(DetectorConfig cfg) : cfg_(cfg) { cfg_.check(); }

std::optional<DetectionEvent> StreamingDetector::push(const PosteriorFrame& frame) {
  raw_.push_back(frame.probs);
  if (raw_.size() > static_cast<std::size_t>(cfg_.w_smooth)) raw_.pop_front();
  smoothed_.push_back(MeanOf(raw_, frame.probs.size()));
  if (smoothed_.size() > static_cast<std::size_t>(cfg_.w_max)) smoothed_.pop_front();

  conf_.assign(frame.probs.size(), 0.0f);
  for (const auto& row : smoothed_) {
    for (std::size_t k = 0; k < conf_.size(); ++k) conf_[k] = std::max(conf_[k], row[k]);
  }
  if (cfg_.filler_index >= 0 && static_cast<std::size_t>(cfg_.filler_index) < conf_.size()) {
    conf_[cfg_.filler_index] = 0.0f;
  }

  if (last_event_ && frame.frame_index - *last_event_ <= cfg_.refractory) return std::nullopt;
  // Ties resolve to the lowest class index.
  const auto best = std::max_element(conf_.begin(), conf_.end());
  if (best == conf_.end() || *best < cfg_.threshold) return std::nullopt;
  last_event_ = frame.frame_index;
  return DetectionEvent{frame.frame_index, static_cast<int>(best - conf_.begin()), *best};
}

std::vector<DetectionEvent> detect(const std::vector<PosteriorFrame>& stream,
                                   const DetectorConfig& cfg) {
  StreamingDetector detector(cfg);
  std::vector<DetectionEvent> events;
  for (const auto& frame : stream) {
    if (auto e = detector.push(frame)) events.push_back(*e);
  }
  return events;
}

}  // namespace kws

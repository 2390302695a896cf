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

// Posterior handling: trailing moving-average smoothing, windowed-max
// confidence, thresholded detection with a refractory period.

#ifndef KWS_POSTERIOR_HPP_
#define KWS_POSTERIOR_HPP_

#include <deque>
#include <optional>
#include <vector>

namespace kws {

struct PosteriorFrame {
  std::vector<float> probs;
  int frame_index = 0;
};

struct DetectorConfig {
  int w_smooth = 30;
  int w_max = 100;
  float threshold = 0.7f;
  int refractory = 30;
  int filler_index = 0;  // excluded from confidence; -1 if there is none

  void check() const;
};

struct DetectionEvent {
  int frame_index = 0;
  int keyword = 0;  // class index
  float confidence = 0.0f;
  bool operator==(const DetectionEvent&) const = default;
};

// p'[j] = mean of p[max(0, j - w_smooth + 1) .. j].
std::vector<PosteriorFrame> smooth(const std::vector<PosteriorFrame>& stream, int w_smooth);

// Per-class max of p' over the last w_max frames ending at j. The filler
// entry is reported as 0.
std::vector<float> confidence(const std::vector<PosteriorFrame>& smoothed, int j,
                              const DetectorConfig& cfg);

// Incremental detector holding the last max(w_smooth, w_max) frames.
class StreamingDetector {
 public:
  explicit StreamingDetector(DetectorConfig cfg);

  std::optional<DetectionEvent> push(const PosteriorFrame& frame);
  const std::vector<float>& last_confidence() const { return conf_; }

 private:
  DetectorConfig cfg_;
  std::deque<std::vector<float>> raw_;
  std::deque<std::vector<float>> smoothed_;
  std::vector<float> conf_;
  std::optional<int> last_event_;
};

std::vector<DetectionEvent> detect(const std::vector<PosteriorFrame>& stream,
                                   const DetectorConfig& cfg);

}  // namespace kws

#endif  // KWS_POSTERIOR_HPP_

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

#include "kws/pipeline.hpp"

#include <algorithm>

#include "kws/training.hpp"

namespace kws {

std::vector<PosteriorFrame> posterior_stream(const Model& model, const Waveform& wave,
                                             const FrameConfig& frames, ConvPath path) {
  const auto mel = compute_log_mel(wave, frames);
  std::vector<PosteriorFrame> stream;
  stream.reserve(mel.size());
  ForwardOptions opts;
  opts.conv_path = path;
  for (int j = 0; j < static_cast<int>(mel.size()); ++j) {
    const FeatureWindow win = context_window(mel, j, model.arch.context);
    stream.push_back({forward(model.arch, model.weights, win, opts), j});
  }
  return stream;
}

int filler_index(const Model& model) {
  const auto it = std::find(model.labels.begin(), model.labels.end(), kFillerName);
  return it == model.labels.end() ? -1 : static_cast<int>(it - model.labels.begin());
}

std::vector<DetectionEvent> detect_keywords(const Model& model, const Waveform& wave,
                                            DetectorConfig cfg) {
  cfg.filler_index = filler_index(model);
  return detect(posterior_stream(model, wave), cfg);
}

}  // namespace kws

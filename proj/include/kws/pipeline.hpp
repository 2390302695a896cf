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

// End-to-end glue: waveform -> log-mel -> per-frame posteriors -> events.

#ifndef KWS_PIPELINE_HPP_
#define KWS_PIPELINE_HPP_

#include <vector>

#include "kws/model_io.hpp"
#include "kws/posterior.hpp"

namespace kws {

// One posterior per log-mel frame; the window for frame j is centered on j
// with edge replication.
std::vector<PosteriorFrame> posterior_stream(const Model& model, const Waveform& wave,
                                             const FrameConfig& frames = {},
                                             ConvPath path = ConvPath::kOptimized);

// Index of "_filler" in the model's labels, or -1.
int filler_index(const Model& model);

std::vector<DetectionEvent> detect_keywords(const Model& model, const Waveform& wave,
                                            DetectorConfig cfg);

}  // namespace kws

#endif  // KWS_PIPELINE_HPP_

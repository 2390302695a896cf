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

// Single-file model container:
//
//   bytes 0..3   "KWSM"
//   bytes 4..7   format version, u32 LE (= 1)
//   bytes 8..11  header length in bytes, u32 LE
//   header       UTF-8 JSON: architecture, label names, tensor manifest
//   payload      float32 LE values of every tensor, manifest order

#ifndef KWS_MODEL_IO_HPP_
#define KWS_MODEL_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kws/arch.hpp"

namespace kws {

inline constexpr std::uint32_t kModelVersion = 1;

enum class ModelErrorKind { kBadMagic, kUnsupportedVersion, kTruncated, kBadHeader, kShapeMismatch };

class ModelError : public Error {
 public:
  ModelError(ModelErrorKind kind, const std::string& what)
      : Error(ErrorKind::kFormat, what), model_kind_(kind) {}
  ModelErrorKind model_kind() const { return model_kind_; }

 private:
  ModelErrorKind model_kind_;
};

struct Model {
  ArchSpec arch;
  WeightSet weights;
  std::vector<std::string> labels;
};

std::vector<unsigned char> encode_model(const Model& model);
Model decode_model(const std::vector<unsigned char>& bytes);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

// FNV-1a 64 over the file bytes; used to compare runs.
std::uint64_t checksum(const std::vector<unsigned char>& bytes);

}  // namespace kws

#endif  // KWS_MODEL_IO_HPP_

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

#include "kws/model_io.hpp"

#include <cstring>

#include "kws/json_io.hpp"
#include "le_bytes.hpp"

namespace kws {
namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'K', 'W', 'S', 'M'};
constexpr std::size_t kPreamble = 12;

std::string Describe(const std::vector<TensorInfo>& manifest) {
  std::string out;
  for (const auto& t : manifest) {
    out += "\n  " + t.name + " [";
    for (std::size_t i = 0; i < t.shape.size(); ++i) {
      out += (i ? "," : "") + std::to_string(t.shape[i]);
    }
    out += "]";
  }
  return out;
}

}  // namespace

std::vector<unsigned char> encode_model(const Model& model) {
  check_weights(model.arch, model.weights);
  if (static_cast<int>(model.labels.size()) != model.arch.labels()) {
    throw Error(ErrorKind::kInvalidArgument,
                "model has " + std::to_string(model.labels.size()) + " label names for " +
                    std::to_string(model.arch.labels()) + " outputs");
  }
  const auto manifest = weight_manifest(model.arch);
  json header;
  header["arch"] = arch_to_json(model.arch);
  header["labels"] = model.labels;
  header["tensors"] = json::array();
  for (const auto& t : manifest) header["tensors"].push_back({{"name", t.name}, {"shape", t.shape}});
  const std::string text = header.dump(2) + "\n";

  std::vector<unsigned char> out(kMagic, kMagic + 4);
  detail::PutU32(out, kModelVersion);
  detail::PutU32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  out.reserve(out.size() + 4 * model.weights.total_values());
  for (const auto& t : manifest) {
    for (float v : model.weights.find(t.name)->values) detail::PutF32(out, v);
  }
  return out;
}

Model decode_model(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw ModelError(ModelErrorKind::kBadMagic, "not a KWSM file");
  }
  if (bytes.size() < kPreamble) {
    throw ModelError(ModelErrorKind::kTruncated, "truncated KWSM preamble");
  }
  const std::uint32_t version = detail::GetU32(bytes, 4);
  if (version != kModelVersion) {
    throw ModelError(ModelErrorKind::kUnsupportedVersion,
                     "unsupported KWSM version " + std::to_string(version) + " (expected " +
                         std::to_string(kModelVersion) + ")");
  }
  const std::uint32_t header_len = detail::GetU32(bytes, 8);
  if (bytes.size() - kPreamble < header_len) {
    throw ModelError(ModelErrorKind::kTruncated, "truncated KWSM header");
  }

  Model model;
  std::vector<TensorInfo> declared;
  try {
    const json header = json::parse(bytes.begin() + kPreamble,
                                    bytes.begin() + kPreamble + header_len);
    model.arch = arch_from_json(header.at("arch"));
    model.labels = header.at("labels").get<std::vector<std::string>>();
    for (const auto& t : header.at("tensors")) {
      declared.push_back({t.at("name").get<std::string>(), t.at("shape").get<std::vector<int>>()});
    }
  } catch (const json::exception& e) {
    throw ModelError(ModelErrorKind::kBadHeader, std::string("bad KWSM header: ") + e.what());
  } catch (const Error& e) {
    throw ModelError(ModelErrorKind::kBadHeader, std::string("bad KWSM header: ") + e.what());
  }

  std::vector<TensorInfo> expected;
  try {
    expected = weight_manifest(model.arch);
  } catch (const Error& e) {
    throw ModelError(ModelErrorKind::kShapeMismatch,
                     std::string("stored architecture is invalid: ") + e.what());
  }
  if (declared != expected) {
    throw ModelError(ModelErrorKind::kShapeMismatch,
                     "tensor manifest does not match architecture " + model.arch.name +
                         "; file declares:" + Describe(declared) + "\nexpected:" +
                         Describe(expected));
  }
  if (static_cast<int>(model.labels.size()) != model.arch.labels()) {
    throw ModelError(ModelErrorKind::kShapeMismatch, "label names do not match output size");
  }

  std::size_t values = 0;
  for (const auto& t : expected) values += t.size();
  const std::size_t payload = bytes.size() - kPreamble - header_len;
  if (payload < 4 * values) {
    throw ModelError(ModelErrorKind::kTruncated,
                     "truncated KWSM payload: " + std::to_string(payload) + " bytes, expected " +
                         std::to_string(4 * values));
  }
  if (payload > 4 * values) {
    throw ModelError(ModelErrorKind::kShapeMismatch,
                     "KWSM payload has " + std::to_string(payload - 4 * values) +
                         " trailing bytes");
  }

  std::size_t at = kPreamble + header_len;
  for (const auto& t : expected) {
    NamedTensor tensor{t.name, t.shape, std::vector<float>(t.size())};
    for (float& v : tensor.values) {
      v = detail::GetF32(bytes, at);
      at += 4;
    }
    model.weights.tensors.push_back(std::move(tensor));
  }
  check_weights(model.arch, model.weights);
  return model;
}

void save_model(const Model& model, const std::filesystem::path& path) {
  detail::WriteFile(path, encode_model(model));
}

Model load_model(const std::filesystem::path& path) {
  return decode_model(detail::ReadFile(path));
}

std::uint64_t checksum(const std::vector<unsigned char>& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace kws

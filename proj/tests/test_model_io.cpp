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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>

#include <json.hpp>

#include "kws/budget.hpp"
#include "kws/model_io.hpp"
#include "kws/training.hpp"
#include "test_util.hpp"

using namespace kws;
using json = nlohmann::json;

namespace {

Model MakeModel(const ArchSpec& a, std::uint64_t seed) {
  Model m{a, init_weights(a, 0.05f, seed), {}};
  m.labels.push_back(kFillerName);
  for (int i = 1; i < a.labels(); ++i) m.labels.push_back("kw" + std::to_string(i));
  return m;
}

std::uint32_t HeaderLength(const std::vector<unsigned char>& b) {
  return b[8] | (b[9] << 8) | (b[10] << 16) | (static_cast<std::uint32_t>(b[11]) << 24);
}

// Rewrites the JSON header, keeping the payload.
std::vector<unsigned char> EditHeader(const std::vector<unsigned char>& bytes,
                                      const std::function<void(json&)>& edit) {
  const std::uint32_t len = HeaderLength(bytes);
  json h = json::parse(bytes.begin() + 12, bytes.begin() + 12 + len);
  edit(h);
  const std::string text = h.dump(2) + "\n";
  std::vector<unsigned char> out(bytes.begin(), bytes.begin() + 8);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(text.size() >> (8 * i)));
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), bytes.begin() + 12 + len, bytes.end());
  return out;
}

ModelErrorKind DecodeFailure(const std::vector<unsigned char>& bytes) {
  try {
    decode_model(bytes);
  } catch (const ModelError& e) {
    return e.model_kind();
  }
  FAIL("decode succeeded");
  return ModelErrorKind::kBadHeader;
}

}  // namespace

TEST_CASE("round trip for every architecture") {
  Rng rng(6);
  for (const auto& name : BuiltinArchitectureNames()) {
    CAPTURE(name);
    const Model m = MakeModel(architecture_by_name(name, 4), 3);
    const auto bytes = encode_model(m);
    const Model back = decode_model(bytes);
    CHECK(back.arch == m.arch);
    CHECK(back.labels == m.labels);
    CHECK(back.weights == m.weights);
    CHECK(encode_model(back) == bytes);

    const FeatureWindow x = test::RandomWindow(rng, m.arch.input_t, m.arch.input_f);
    CHECK(forward(back.arch, back.weights, x) == forward(m.arch, m.weights, x));
  }
}

TEST_CASE("file layout") {
  const Model m = MakeModel(build_cnn_one(4), 1);
  const auto bytes = encode_model(m);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "KWSM");
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 0);
  const std::uint32_t len = HeaderLength(bytes);
  CHECK(bytes.size() - 12 - len == 421136);
  const json h = json::parse(bytes.begin() + 12, bytes.begin() + 12 + len);
  CHECK(h.at("labels").size() == 4);
  CHECK(h.at("tensors").size() == weight_manifest(m.arch).size());
  CHECK(h.at("tensors")[0].at("name") == "conv1.weight");
}

TEST_CASE("save, load, save is byte-identical") {
  const auto dir = test::TempDir("model_io");
  for (const auto& name : BuiltinArchitectureNames()) {
    const Model m = MakeModel(architecture_by_name(name, 3), 8);
    save_model(m, dir / "a.kwsm");
    save_model(load_model(dir / "a.kwsm"), dir / "b.kwsm");
    CHECK(test::ReadBytes(dir / "a.kwsm") == test::ReadBytes(dir / "b.kwsm"));
  }
  CHECK_THROWS_AS(load_model(dir / "missing.kwsm"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("corrupt files map to distinct error kinds") {
  const auto good = encode_model(MakeModel(build_cnn_one(4), 2));

  auto magic = good;
  magic[0] = 'X';
  CHECK(DecodeFailure(magic) == ModelErrorKind::kBadMagic);
  CHECK(DecodeFailure({}) == ModelErrorKind::kBadMagic);

  auto version = good;
  version[4] = 2;
  CHECK(DecodeFailure(version) == ModelErrorKind::kUnsupportedVersion);

  auto truncated = good;
  truncated.resize(truncated.size() - 4);
  CHECK(DecodeFailure(truncated) == ModelErrorKind::kTruncated);
  CHECK(DecodeFailure({good.begin(), good.begin() + 6}) == ModelErrorKind::kTruncated);
  CHECK(DecodeFailure({good.begin(), good.begin() + 40}) == ModelErrorKind::kTruncated);

  auto trailing = good;
  trailing.push_back(0);
  CHECK(DecodeFailure(trailing) == ModelErrorKind::kShapeMismatch);

  auto garbage = good;
  garbage[12] = '#';
  CHECK(DecodeFailure(garbage) == ModelErrorKind::kBadHeader);

  try {
    decode_model(version);
  } catch (const ModelError& e) {
    CHECK(std::string(e.what()).find("version 2") != std::string::npos);
    CHECK(e.kind() == ErrorKind::kFormat);
  }
}

TEST_CASE("header disagreements") {
  const auto good = encode_model(MakeModel(build_cnn_one(4), 2));
  CHECK(DecodeFailure(EditHeader(good, [](json& h) { h["tensors"][0]["shape"][0] = 31; })) ==
        ModelErrorKind::kShapeMismatch);
  CHECK(DecodeFailure(EditHeader(good, [](json& h) { h["tensors"].erase(1); })) ==
        ModelErrorKind::kShapeMismatch);
  CHECK(DecodeFailure(EditHeader(good, [](json& h) { h["labels"].erase(0); })) ==
        ModelErrorKind::kShapeMismatch);
  CHECK(DecodeFailure(EditHeader(good, [](json& h) { h.erase("arch"); })) ==
        ModelErrorKind::kBadHeader);
  // An architecture whose shapes no longer chain.
  CHECK(DecodeFailure(EditHeader(good, [](json& h) {
          h["arch"]["layers"][0]["m"] = 40;
        })) == ModelErrorKind::kShapeMismatch);
  // Unchanged header still decodes.
  CHECK_NOTHROW(decode_model(EditHeader(good, [](json&) {})));

  Model bad = MakeModel(build_cnn_one(4), 2);
  bad.labels.pop_back();
  CHECK_THROWS_AS(encode_model(bad), Error);
}

TEST_CASE("checksum") {
  const auto a = encode_model(MakeModel(build_dnn_baseline(4), 1));
  auto b = a;
  CHECK(checksum(a) == checksum(b));
  b.back() ^= 1;
  CHECK(checksum(a) != checksum(b));
  CHECK(checksum({}) == 0xcbf29ce484222325ULL);
}

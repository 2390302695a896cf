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

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "kws/frontend.hpp"
#include "le_bytes.hpp"

namespace kws {
namespace {

using detail::GetF32;
using detail::GetU16;
using detail::GetU32;

[[noreturn]] void Unsupported(const std::string& what) {
  throw Error(ErrorKind::kFormat, "unsupported WAV: " + what);
}

bool Tag(std::span<const unsigned char> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

}  // namespace

Waveform parse_wav(std::span<const unsigned char> bytes) {
  if (bytes.size() < 12 || !Tag(bytes, 0, "RIFF") || !Tag(bytes, 8, "WAVE")) {
    Unsupported("not a RIFF/WAVE file");
  }
  bool have_fmt = false;
  std::size_t at = 12;
  while (at + 8 <= bytes.size()) {
    const std::uint32_t chunk_size = GetU32(bytes, at + 4);
    const std::size_t body = at + 8;
    if (Tag(bytes, at, "fmt ")) {
      if (chunk_size < 16 || body + 16 > bytes.size()) Unsupported("short fmt chunk");
      const std::uint16_t format = GetU16(bytes, body);
      const std::uint16_t channels = GetU16(bytes, body + 2);
      const std::uint32_t rate = GetU32(bytes, body + 4);
      const std::uint16_t bits = GetU16(bytes, body + 14);
      if (format != 1) Unsupported("encoding " + std::to_string(format) + " (need PCM)");
      if (channels != 1) Unsupported(std::to_string(channels) + " channels (need mono)");
      if (bits != 16) Unsupported(std::to_string(bits) + "-bit samples (need 16)");
      if (rate != static_cast<std::uint32_t>(kSampleRate)) {
        Unsupported("sample rate " + std::to_string(rate) + " Hz (need 16000)");
      }
      have_fmt = true;
    } else if (Tag(bytes, at, "data")) {
      if (!have_fmt) Unsupported("data chunk before fmt chunk");
      if (body + chunk_size > bytes.size()) Unsupported("truncated data chunk");
      Waveform w;
      w.sample_rate = kSampleRate;
      w.samples.resize(chunk_size / 2);
      for (std::size_t i = 0; i < w.samples.size(); ++i) {
        const auto raw = static_cast<std::int16_t>(GetU16(bytes, body + 2 * i));
        w.samples[i] = static_cast<float>(raw) / 32768.0f;
      }
      return w;
    }
    at = body + chunk_size + (chunk_size & 1);
  }
  Unsupported(have_fmt ? "missing data chunk" : "missing fmt chunk");
}

Waveform read_wav(const std::filesystem::path& path) {
  const auto bytes = detail::ReadFile(path);
  return parse_wav(bytes);
}

std::vector<unsigned char> encode_wav(const Waveform& w) {
  if (w.sample_rate != kSampleRate) {
    throw Error(ErrorKind::kInvalidArgument, "only 16 kHz audio can be written");
  }
  const auto data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  detail::PutU32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  detail::PutU32(out, 16);
  detail::PutU16(out, 1);
  detail::PutU16(out, 1);
  detail::PutU32(out, kSampleRate);
  detail::PutU32(out, kSampleRate * 2);
  detail::PutU16(out, 2);
  detail::PutU16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  detail::PutU32(out, data_bytes);
  for (float s : w.samples) {
    const double scaled = std::round(static_cast<double>(s) * 32768.0);
    const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    detail::PutU16(out, static_cast<std::uint16_t>(v));
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const Waveform& w) {
  detail::WriteFile(path, encode_wav(w));
}

void write_feature_dump(const std::filesystem::path& path,
                        const std::vector<FeatureWindow>& windows) {
  const int t = windows.empty() ? 0 : windows.front().t;
  const int f = windows.empty() ? 0 : windows.front().f;
  const std::string header = std::to_string(t) + " " + std::to_string(f) + " " +
                             std::to_string(windows.size()) + "\n";
  std::vector<unsigned char> out(header.begin(), header.end());
  for (const auto& win : windows) {
    if (win.t != t || win.f != f) {
      throw Error(ErrorKind::kShape, "feature dump windows must share t x f");
    }
    for (float v : win.data) detail::PutF32(out, v);
  }
  detail::WriteFile(path, out);
}

std::vector<FeatureWindow> read_feature_dump(const std::filesystem::path& path) {
  const auto bytes = detail::ReadFile(path);
  const auto nl = std::find(bytes.begin(), bytes.end(), '\n');
  if (nl == bytes.end()) throw Error(ErrorKind::kFormat, "feature dump: missing header");
  std::istringstream header(std::string(bytes.begin(), nl));
  long t = -1, f = -1, count = -1;
  if (!(header >> t >> f >> count) || t < 0 || f < 0 || count < 0) {
    throw Error(ErrorKind::kFormat, "feature dump: malformed header");
  }
  const std::size_t start = static_cast<std::size_t>(nl - bytes.begin()) + 1;
  const std::size_t per = static_cast<std::size_t>(t) * f;
  if (bytes.size() - start != 4 * per * count) {
    throw Error(ErrorKind::kFormat, "feature dump: payload size mismatch");
  }
  std::vector<FeatureWindow> out(count);
  std::size_t at = start;
  for (auto& win : out) {
    win.t = static_cast<int>(t);
    win.f = static_cast<int>(f);
    win.data.resize(per);
    for (auto& v : win.data) {
      v = GetF32(bytes, at);
      at += 4;
    }
  }
  return out;
}

}  // namespace kws

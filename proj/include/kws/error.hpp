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

#ifndef KWS_ERROR_HPP_
#define KWS_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace kws {

// Error classes map one-to-one onto CLI exit codes (see tools/kws.cpp).
enum class ErrorKind {
  kInvalidArgument,  // bad flag or parameter value
  kShape,            // dimension mismatch, degenerate shape trace
  kData,             // unusable input data (too short, empty, bad dataset)
  kFormat,           // unsupported or corrupt file
  kIo,               // filesystem failure
  kNumeric,          // NaN/Inf, divergence, path disagreement
};

const char* ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace kws

#endif  // KWS_ERROR_HPP_

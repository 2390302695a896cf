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

// JSON forms of architectures and budget reports, shared by the model file
// header and the CLI's structured output.

#ifndef KWS_JSON_IO_HPP_
#define KWS_JSON_IO_HPP_

#include <json.hpp>

#include "kws/arch.hpp"
#include "kws/budget.hpp"

namespace kws {

nlohmann::json arch_to_json(const ArchSpec& arch);
// Throws kFormat on missing or ill-typed fields; does not validate shapes.
ArchSpec arch_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const BudgetReport& r);
nlohmann::json trace_to_json(const ShapeTrace& t);

}  // namespace kws

#endif  // KWS_JSON_IO_HPP_

// Copyright 2026 The lenctl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <iosfwd>

#include "lenctl/key_value.hpp"
#include "lenctl/model.hpp"

namespace lenctl {

// Checkpoint layout:
//   LENCTL1
//   key=value lines (every ModelConfig and SignalConfig field)
//   <blank line>
//   parameters as little-endian float32, concatenated in declared order.

inline constexpr const char* kCheckpointMagic = "LENCTL1";

KeyValues model_config_to_kv(const ModelConfig& cfg);
ModelConfig model_config_from_kv(const KeyValues& kv);

void write_checkpoint(std::ostream& os, const Transformer& model);
Transformer read_checkpoint(std::istream& is);

/// Writes to `<path>.tmp` and renames into place.
void save_checkpoint(const std::filesystem::path& path,
                     const Transformer& model);
Transformer load_checkpoint(const std::filesystem::path& path);

/// Rounds every parameter to the nearest float32 value.
void quantize_to_float(ModelParameters& params);

}  // namespace lenctl

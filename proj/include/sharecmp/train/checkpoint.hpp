// Copyright 2026 The sharecmp Authors
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

#include <memory>
#include <string>

#include "sharecmp/model/model.hpp"

namespace sharecmp {

/// Single-file archive: 8-byte magic, the model config as length-prefixed
/// JSON, then every named parameter tensor as
///   u64 name length, name bytes, u32 rank, i32 dims, f64 values
/// in little-endian byte order. Names follow the parameter store, so the
/// layout is stable across runs of the same config.
void save_checkpoint(const std::string& path, const Model& model);

/// Rebuilds the model from the stored config and loads every tensor. Throws
/// CheckpointError on a bad magic, a name or shape mismatch, or parameters
/// left uncovered by the archive.
std::unique_ptr<Model> load_checkpoint(const std::string& path);

} // namespace sharecmp

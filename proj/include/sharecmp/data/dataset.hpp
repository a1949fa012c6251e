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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sharecmp/core/label_map.hpp"
#include "sharecmp/core/tensor.hpp"
#include "sharecmp/polar/polarization.hpp"

namespace sharecmp {

/// One training record. Either the four angle images or a representation
/// stack is present, never both. rgb is the per-channel S0 of the angle
/// images; the AoLP/DoLP targets are luminance-collapsed single-channel maps.
struct Sample {
    bool has_polarized = false;
    PolarizedImageSet polarized;
    std::vector<RepresentationMap> representations;
    Tensor rgb;          // [C,H,W]
    LabelMap mask;       // class IDs, 255 = ignore
    Tensor aolp_target;  // [1,H,W]
    Tensor dolp_target;  // [1,H,W]

    int height() const { return mask.h; }
    int width() const { return mask.w; }
};

/// Resolved view of one split of a dataset on disk:
///   root/manifest.json
///   root/<split>/images/{000,045,090,135}/<id>.png
///   root/<split>/labels/<id>.png
struct DatasetIndex {
    std::string root;
    std::string split;
    std::vector<std::string> ids;
    int num_classes = 0;
    std::vector<std::string> class_names;
};

/// Reads the manifest and verifies that every id of the split resolves to all
/// five files. Throws DatasetError on missing files or malformed manifest.
DatasetIndex load_index(const std::string& root, const std::string& split);

/// Loads and validates one sample; derives rgb and the polarization targets.
Sample load_sample(const DatasetIndex& index, const std::string& id);

/// Recomputes rgb (per-channel S0) and the luminance-collapsed AoLP/DoLP
/// targets of a sample from its four angle images.
void derive_from_polarized(Sample& sample);

} // namespace sharecmp

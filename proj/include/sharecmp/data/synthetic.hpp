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

#include "sharecmp/data/dataset.hpp"

namespace sharecmp {

/// Polarization state and color of one synthetic class.
struct SyntheticClassSpec {
    double dolp = 0.5;
    double aolp = 0.0; // radians, (-pi/2, pi/2]
    std::array<double, 3> color = {0.8, 0.8, 0.8};
};

/// Scenes are a class-0 background plus random axis-aligned rectangles, one
/// class per rectangle, rendered through the Malus forward model with the
/// class's (dolp, aolp). grid_snap aligns rectangle corners so class
/// boundaries coincide with the encoder's stride-4 feature grid.
struct SyntheticSceneSpec {
    int height = 64;
    int width = 64;
    std::vector<SyntheticClassSpec> classes;
    std::vector<std::string> class_names;
    std::uint64_t seed = 0;
    int shapes_per_image = 3;
    int grid_snap = 4;

    /// Distinct bright colors and well-spread angles; dolp * luminance stays
    /// above 0.25 everywhere so the 8-bit codec keeps AoLP recoverable to
    /// about 1e-2.
    static SyntheticSceneSpec standard(int num_classes, int height = 64, int width = 64,
                                       std::uint64_t seed = 0);
};

/// Writes n_train + n_val samples in the dataset layout plus manifest.json;
/// returns the train-split index. Same spec -> byte-identical files.
DatasetIndex generate_synthetic_dataset(const SyntheticSceneSpec& spec, int n_train, int n_val,
                                        const std::string& root);

} // namespace sharecmp

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

#include "sharecmp/core/random.hpp"
#include "sharecmp/data/dataset.hpp"

namespace sharecmp {

/// Pipeline order: ratio resize, horizontal flip, color jitter (angle images
/// only; rgb is recomputed), random crop. The naive flip mirrors everything;
/// the physical flip additionally swaps i45 with i135 and negates the AoLP
/// target, matching mirror optics.
struct AugmentConfig {
    bool enabled = true;
    double resize_min = 0.5;
    double resize_max = 2.0;
    double hflip_prob = 0.5;
    bool physical_hflip = false;
    double brightness = 0.2;
    double contrast = 0.2;
    double saturation = 0.2;
    double hue = 0.05;
    int crop_h = 64;
    int crop_w = 64;
};

/// Applies one random augmentation draw. Pure given the rng state; the mask
/// uses nearest-neighbor resampling and pads with the ignore label.
Sample augment(const Sample& sample, const AugmentConfig& cfg, Rng& rng);

} // namespace sharecmp

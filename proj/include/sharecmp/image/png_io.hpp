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

#include <cstdint>
#include <string>
#include <vector>

#include "sharecmp/core/label_map.hpp"
#include "sharecmp/core/tensor.hpp"

namespace sharecmp {

/// 8-bit image, HWC row-major, c is 1 (gray) or 3 (RGB).
struct ImageU8 {
    int h = 0;
    int w = 0;
    int c = 0;
    std::vector<std::uint8_t> pix;

    ImageU8() = default;
    ImageU8(int height, int width, int channels)
        : h(height), w(width), c(channels),
          pix(static_cast<std::size_t>(height) * width * channels, 0) {}

    std::uint8_t& at(int y, int x, int ch) {
        return pix[(static_cast<std::size_t>(y) * w + x) * c + ch];
    }
    std::uint8_t at(int y, int x, int ch) const {
        return pix[(static_cast<std::size_t>(y) * w + x) * c + ch];
    }
};

/// Decodes an 8-bit PNG; alpha is dropped, palette/16-bit inputs are
/// converted. Gray files give c=1, everything else c=3.
ImageU8 read_png(const std::string& path);
void write_png(const std::string& path, const ImageU8& img);

/// Class-ID masks are single-channel PNGs with raw label bytes.
LabelMap read_label_png(const std::string& path);
void write_label_png(const std::string& path, const LabelMap& labels);

/// [C,H,W] in [0,1] from 8-bit (value/255) and back (clamped, rounded).
Tensor image_to_chw(const ImageU8& img);
ImageU8 chw_to_image(const Tensor& chw);

} // namespace sharecmp

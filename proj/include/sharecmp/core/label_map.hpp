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
#include <vector>

namespace sharecmp {

constexpr std::uint8_t kIgnoreLabel = 255;

/// Per-pixel class IDs, row-major H x W. 255 marks ignored pixels.
struct LabelMap {
    int h = 0;
    int w = 0;
    std::vector<std::uint8_t> v;

    LabelMap() = default;
    LabelMap(int height, int width, std::uint8_t fill = 0)
        : h(height), w(width), v(static_cast<std::size_t>(height) * width, fill) {}
    LabelMap(int height, int width, std::vector<std::uint8_t> values)
        : h(height), w(width), v(std::move(values)) {}

    std::uint8_t& at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
    std::uint8_t at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
    std::size_t numel() const { return v.size(); }
};

} // namespace sharecmp

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

#include <random>

namespace sharecmp {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) { // inclusive bounds
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

/// Normal(0, sigma) truncated to [-2 sigma, 2 sigma] by rejection.
inline double trunc_normal(Rng& rng, double sigma) {
    std::normal_distribution<double> dist(0.0, sigma);
    for (;;) {
        double v = dist(rng);
        if (v >= -2.0 * sigma && v <= 2.0 * sigma) return v;
    }
}

} // namespace sharecmp

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

#include <cstddef>

#include "sharecmp/model/model.hpp"

namespace sharecmp {

/// Structural parameter accounting plus the comparison against a non-shared
/// dual-trunk baseline built from the same config (only share_trunk differs).
/// gflops_512 is an analytic per-layer forward estimate at 512x512 input,
/// informational only: multiply-accumulate conventions differ between
/// counters.
struct ParamReport {
    std::size_t pga = 0, encoder = 0, cpaahead = 0, decoder = 0;
    std::size_t total = 0;
    std::size_t encoder_dual = 0, total_dual = 0;
    double encoder_ratio = 0.0;   // shared encoder / dual encoder
    double total_reduction = 0.0; // 1 - shared total / dual total
    double gflops_512 = 0.0;
};

ParamReport count_params(const ModelConfig& cfg);

/// Analytic forward multiply-accumulate estimate (x2 for FLOPs) at the given
/// square input size.
double estimate_forward_gflops(const ModelConfig& cfg, int img);

} // namespace sharecmp

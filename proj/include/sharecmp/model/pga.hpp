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
#include <string>

#include "sharecmp/model/layers.hpp"

namespace sharecmp {

/// Polarization image generator: four per-angle 3x3 convolutions are
/// channel-concatenated, gated by squeeze-excitation channel attention
/// computed on a dilated depth-wise refinement, and projected back to a
/// three-channel image by a depth-wise head with a parametric rectifier.
struct PGAConfig {
    int in_channels = 3;   // per angle image
    int mid_channels = 80; // per angle branch; concat width is 4x this
    int dilation = 2;
    int se_reduction = 4;
    int out_channels = 3;
    bool per_channel_prelu = true;
    bool bypass = false; // feed a representation stack instead of running PGA

    void validate() const;
};

struct PGA {
    PGAConfig cfg;
    std::array<Conv2dLayer, 4> angle_convs; // in -> mid, 3x3, same padding
    Conv2dLayer mix_pw;                     // 1x1 on the concat width
    Conv2dLayer mix_dw;                     // 3x3 depth-wise, dilation 2
    LinearLayer se1, se2;                   // bottleneck gate MLP
    Conv2dLayer head_pw;                    // 1x1 concat width -> out
    Conv2dLayer head_dw;                    // 3x3 depth-wise on out channels
    Parameter* prelu_slope = nullptr;

    PGA() = default;
    PGA(ParamStore& ps, const std::string& prefix, const PGAConfig& cfg);

    /// Per-angle convolutions, concatenated in (0, 45, 90, 135) order.
    Ref concat_features(Graph& g, Ref i0, Ref i45, Ref i90, Ref i135) const;
    /// Channel-attention gate of f_p, one sigmoid value per channel.
    Ref attention_gate(Graph& g, Ref f_p) const;
    /// Full module: I_P = PReLU(DWConv(f_p + attn (*) f_p)), [out,H,W].
    Ref forward(Graph& g, Ref i0, Ref i45, Ref i90, Ref i135) const;
};

} // namespace sharecmp

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

#include <string>

#include "sharecmp/core/graph.hpp"
#include "sharecmp/core/module.hpp"
#include "sharecmp/core/ops.hpp"

namespace sharecmp {

/// Thin layer wrappers: each creates its parameters in a ParamStore at
/// construction (named `<prefix>.weight` etc.) and emits graph ops on
/// forward. They hold non-owning Parameter pointers, so copies alias the
/// same weights.

/// Dense layer on token matrices, [N, in] -> [N, out].
struct LinearLayer {
    Parameter* w = nullptr; // [in, out]
    Parameter* b = nullptr; // [out] or null

    LinearLayer() = default;
    LinearLayer(ParamStore& ps, const std::string& prefix, int in, int out, bool bias = true,
                Parameter::Init init = Parameter::Init::TruncNormal, double init_arg = 0.02);
    Ref forward(Graph& g, Ref x) const;
};

/// 2-D convolution on CHW maps.
struct Conv2dLayer {
    Parameter* w = nullptr; // [out, in/groups, k, k]
    Parameter* b = nullptr;
    int stride = 1, pad = 0, dilation = 1, groups = 1;

    Conv2dLayer() = default;
    Conv2dLayer(ParamStore& ps, const std::string& prefix, int in, int out, int k, int stride,
                int pad, int dilation = 1, int groups = 1, bool bias = true,
                Parameter::Init init = Parameter::Init::TruncNormal, double init_arg = 0.02);
    Ref forward(Graph& g, Ref x) const;

    /// Output spatial extent for an input extent, matching conv2d.
    int out_extent(int in, int k) const {
        return (in + 2 * pad - dilation * (k - 1) - 1) / stride + 1;
    }
};

/// Layer normalization over the column axis of [N, dim] matrices.
struct LayerNormLayer {
    Parameter* gamma = nullptr;
    Parameter* beta = nullptr;

    LayerNormLayer() = default;
    LayerNormLayer(ParamStore& ps, const std::string& prefix, int dim);
    Ref forward(Graph& g, Ref x) const;
};

} // namespace sharecmp

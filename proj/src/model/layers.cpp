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

#include "sharecmp/model/layers.hpp"

namespace sharecmp {

LinearLayer::LinearLayer(ParamStore& ps, const std::string& prefix, int in, int out, bool bias,
                         Parameter::Init init, double init_arg) {
    w = &ps.create(prefix + ".weight", {in, out}, init, init_arg);
    if (bias) b = &ps.create(prefix + ".bias", {out}, Parameter::Init::Zeros);
}

Ref LinearLayer::forward(Graph& g, Ref x) const {
    Ref y = ops::matmul(g, x, g.param(*w));
    if (b) y = ops::add_bias_rows(g, y, g.param(*b));
    return y;
}

Conv2dLayer::Conv2dLayer(ParamStore& ps, const std::string& prefix, int in, int out, int k,
                         int stride_, int pad_, int dilation_, int groups_, bool bias,
                         Parameter::Init init, double init_arg)
    : stride(stride_), pad(pad_), dilation(dilation_), groups(groups_) {
    w = &ps.create(prefix + ".weight", {out, in / groups_, k, k}, init, init_arg);
    if (bias) b = &ps.create(prefix + ".bias", {out}, Parameter::Init::Zeros);
}

Ref Conv2dLayer::forward(Graph& g, Ref x) const {
    Ref bias = b ? g.param(*b) : Ref{};
    return ops::conv2d(g, x, g.param(*w), bias, stride, pad, dilation, groups);
}

LayerNormLayer::LayerNormLayer(ParamStore& ps, const std::string& prefix, int dim) {
    gamma = &ps.create(prefix + ".gamma", {dim}, Parameter::Init::Ones);
    beta = &ps.create(prefix + ".beta", {dim}, Parameter::Init::Zeros);
}

Ref LayerNormLayer::forward(Graph& g, Ref x) const {
    return ops::layer_norm_rows(g, x, g.param(*gamma), g.param(*beta));
}

} // namespace sharecmp

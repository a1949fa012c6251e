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

#include <vector>

#include "sharecmp/core/graph.hpp"
#include "sharecmp/core/label_map.hpp"
#include "sharecmp/core/random.hpp"

// Differentiable ops over Graph nodes. Token matrices are [rows, cols],
// image maps are [C, H, W]. Every op validates shapes up front and registers
// a backward closure when any parent requires gradients.
namespace sharecmp::ops {

// elementwise
Ref add(Graph& g, Ref a, Ref b);
Ref sub(Graph& g, Ref a, Ref b);
Ref mul(Graph& g, Ref a, Ref b);
Ref scale(Graph& g, Ref x, double s);
Ref scale_by(Graph& g, Ref x, Ref s); // s is a one-element node
Ref add_scalar(Graph& g, Ref x, double s);
Ref relu(Graph& g, Ref x);
Ref gelu(Graph& g, Ref x);
Ref sigmoid(Graph& g, Ref x);
/// PReLU over a CHW map; slope has one entry per channel or a single entry.
Ref prelu_chw(Graph& g, Ref x, Ref slope);

// shape plumbing
Ref reshape(Graph& g, Ref x, std::vector<int> shape);
Ref transpose2(Graph& g, Ref x);
Ref slice_cols(Graph& g, Ref x, int c0, int c1);
Ref slice_channels_chw(Graph& g, Ref x, int c0, int c1);
Ref concat_chw(Graph& g, const std::vector<Ref>& xs);
Ref concat_cols(Graph& g, const std::vector<Ref>& xs); // [N,Ci] -> [N, sum Ci]
Ref concat_vec(Graph& g, const std::vector<Ref>& xs);
Ref chw_to_rows(Graph& g, Ref x);               // [C,H,W] -> [H*W, C]
Ref rows_to_chw(Graph& g, Ref x, int h, int w); // [H*W, C] -> [C,H,W]

// linear algebra / nn
Ref matmul(Graph& g, Ref a, Ref b); // [N,K]x[K,M]
Ref add_bias_rows(Graph& g, Ref x, Ref bias);
Ref conv2d(Graph& g, Ref x, Ref w, Ref bias, int stride, int pad, int dilation, int groups);
Ref layer_norm_rows(Graph& g, Ref x, Ref gamma, Ref beta, double eps = 1e-6);
Ref softmax_rows(Graph& g, Ref x);
Ref upsample_bilinear(Graph& g, Ref x, int out_h, int out_w);
/// Adaptive average pooling: window (oy, ox) covers rows
/// [oy*H/out_h, (oy+1)*H/out_h) rounded down, likewise for columns.
Ref avg_pool_chw(Graph& g, Ref x, int out_h, int out_w);
Ref gap_chw(Graph& g, Ref x);                      // spatial mean -> [C]
Ref mul_channel_chw(Graph& g, Ref x, Ref gate);    // gate [C]
Ref mul_map_chw(Graph& g, Ref x, Ref m);           // m [1,H,W]
Ref dropout(Graph& g, Ref x, double rate, Rng& rng);

// reductions
Ref sum_all(Graph& g, Ref x);
Ref mean_all(Graph& g, Ref x);

/// Mean cross-entropy of [Cls,H,W] logits over pixels whose label is not
/// `ignore`. Defined as 0 when every pixel is ignored (all_ignored set).
Ref cross_entropy_chw(Graph& g, Ref logits, const LabelMap& labels,
                      std::uint8_t ignore = kIgnoreLabel, bool* all_ignored = nullptr);

} // namespace sharecmp::ops

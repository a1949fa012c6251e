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
#include <vector>

#include "sharecmp/model/layers.hpp"

namespace sharecmp {

/// Four-stage dual-branch hierarchical transformer encoder. The trunk
/// (attention + FFN blocks) can be shared between the RGB and polarization
/// branches; patch embeddings are branch-exclusive on the stages listed in
/// me_opembed_stages and shared elsewhere. Every stage ends with cross-modal
/// rectification and fusion.
struct EncoderConfig {
    std::array<int, 4> dims = {64, 128, 320, 512};
    std::array<int, 4> depths = {3, 4, 6, 3};
    std::array<int, 4> heads = {1, 2, 5, 8};
    std::array<int, 4> sr_ratios = {8, 4, 2, 1};
    int mlp_ratio = 4;
    std::vector<int> me_opembed_stages = {1, 2, 3, 4}; // 1-based stage ids
    bool share_trunk = true;
    int in_channels = 3; // per branch

    static EncoderConfig b2();
    static EncoderConfig tiny();
    void validate() const;
    bool me_opembed_at(int stage) const; // 1-based
};

/// Overlapping strided-convolution tokenizer plus layer norm.
struct OPEmbed {
    Conv2dLayer proj;
    LayerNormLayer norm;

    OPEmbed() = default;
    OPEmbed(ParamStore& ps, const std::string& prefix, int in_ch, int out_ch, int k, int stride,
            int pad);
    /// [C,H,W] -> token rows [H'*W', out_ch]; writes the token grid dims.
    Ref forward(Graph& g, Ref chw, int& out_h, int& out_w) const;
};

/// Efficient self-attention: keys/values are computed on a spatially reduced
/// copy of the token map when sr > 1 (strided conv + layer norm).
struct ESAttn {
    int dim = 0, heads = 1, sr = 1;
    LinearLayer q, kv, proj;
    Conv2dLayer sr_conv;
    LayerNormLayer sr_norm;

    ESAttn() = default;
    ESAttn(ParamStore& ps, const std::string& prefix, int dim, int heads, int sr);
    Ref forward(Graph& g, Ref rows, int h, int w) const;
};

/// FFN with a 3x3 depth-wise convolution between the two dense layers.
struct MixFFN {
    int dim = 0, hidden = 0;
    LinearLayer fc1, fc2;
    Conv2dLayer dw;

    MixFFN() = default;
    MixFFN(ParamStore& ps, const std::string& prefix, int dim, int hidden);
    Ref forward(Graph& g, Ref rows, int h, int w) const;
};

/// Pre-norm residual transformer block: x += Attn(LN(x)); x += FFN(LN(x)).
struct TrunkBlock {
    LayerNormLayer ln1, ln2;
    ESAttn attn;
    MixFFN ffn;

    TrunkBlock() = default;
    TrunkBlock(ParamStore& ps, const std::string& prefix, int dim, int heads, int sr,
               int mlp_ratio);
    Ref forward(Graph& g, Ref rows, int h, int w) const;
};

/// Feature Rectification Module: each branch receives a gated residual of the
/// other branch. Channel gates come from a shared bottleneck MLP over the two
/// pooled descriptors, spatial gates from a shared 1x1 conv over the channel
/// concat; both are order-swapped between branches. The gate outputs and the
/// two mixing scalars start at zero, so rectification is the identity at
/// initialization.
struct FRM {
    int dim = 0;
    LinearLayer mlp1, mlp2;
    Conv2dLayer spatial;
    Parameter* alpha_channel = nullptr;
    Parameter* alpha_spatial = nullptr;

    FRM() = default;
    FRM(ParamStore& ps, const std::string& prefix, int dim);
    /// Returns the rectified pair (y_rgb', y_p'), both [C,H,W].
    std::pair<Ref, Ref> forward(Graph& g, Ref y_rgb, Ref y_p) const;
};

/// Feature Fusion Module: each branch cross-attends to a pooled copy of the
/// other (shared projections, order-swapped), the residual-enhanced pair is
/// channel-concatenated, passed through a Mix-FFN channel embed, and
/// projected down to the stage width.
struct FFM {
    int dim = 0;
    LinearLayer q, k, v, attn_proj;
    LayerNormLayer embed_norm;
    MixFFN embed;
    LinearLayer fuse1, fuse2;

    FFM() = default;
    FFM(ParamStore& ps, const std::string& prefix, int dim);
    /// (y_rgb', y_p') [C,H,W] -> fused [C,H,W].
    Ref forward(Graph& g, Ref y_rgb, Ref y_p, int h, int w) const;
};

/// One encoder stage, independently forwardable (used by the gradient
/// micro-checks). Owns either shared or per-branch embeds/trunks plus the
/// stage's FRM and FFM.
struct EncoderStage {
    int stage = 1; // 1-based
    bool me_embed = false, share_trunk = true;
    OPEmbed embed_shared, embed_rgb, embed_p;
    std::vector<TrunkBlock> blocks_shared, blocks_rgb, blocks_p;
    LayerNormLayer norm_shared, norm_rgb, norm_p;
    FRM frm;
    FFM ffm;

    EncoderStage() = default;
    EncoderStage(ParamStore& ps, const std::string& prefix, const EncoderConfig& cfg, int stage);

    struct Out {
        Ref y_rgb, y_p;           // trunk outputs, pre-fusion [C,H',W']
        Ref y_rgb_rect, y_p_rect; // rectified features feeding the next stage
        Ref fused;                // f_stage [C,H',W']
        int h = 0, w = 0;
    };
    Out forward(Graph& g, Ref x_rgb, Ref x_p) const;
};

/// Fused and per-branch features of all four stages, at strides 4/8/16/32.
struct StageFeatures {
    std::array<Ref, 4> fused;
    std::array<Ref, 4> y_rgb, y_p;
    std::array<Ref, 4> y_rgb_rect, y_p_rect;
    std::array<int, 4> h = {0, 0, 0, 0}, w = {0, 0, 0, 0};
};

struct Encoder {
    EncoderConfig cfg;
    std::array<EncoderStage, 4> stages;

    Encoder() = default;
    /// Parameters are created under `<prefix>.stage{i}.{rgb|p|shared}...`.
    Encoder(ParamStore& ps, const std::string& prefix, const EncoderConfig& cfg);
    /// Both inputs [in_channels, H, W], H and W >= 32.
    StageFeatures forward(Graph& g, Ref x_rgb, Ref x_p) const;
};

} // namespace sharecmp

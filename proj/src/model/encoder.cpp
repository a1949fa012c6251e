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

#include "sharecmp/model/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sharecmp/core/error.hpp"

namespace sharecmp {

namespace {

/// kv token grids larger than this are average-pooled down before the fusion
/// cross-attention; pooling is parameter-free so it never affects counting.
constexpr int kFuseKvLimit = 7;

} // namespace

EncoderConfig EncoderConfig::b2() { return EncoderConfig{}; }

EncoderConfig EncoderConfig::tiny() {
    EncoderConfig cfg;
    cfg.dims = {16, 32, 64, 128};
    cfg.depths = {1, 1, 1, 1};
    cfg.heads = {1, 2, 4, 8};
    cfg.sr_ratios = {8, 4, 2, 1};
    cfg.mlp_ratio = 4;
    return cfg;
}

void EncoderConfig::validate() const {
    for (int i = 0; i < 4; ++i) {
        check_input(dims[static_cast<std::size_t>(i)] > 0 &&
                        depths[static_cast<std::size_t>(i)] > 0 &&
                        heads[static_cast<std::size_t>(i)] > 0 &&
                        sr_ratios[static_cast<std::size_t>(i)] > 0,
                    "encoder config entries must be positive");
        check_input(dims[static_cast<std::size_t>(i)] % heads[static_cast<std::size_t>(i)] == 0,
                    "encoder dims must be divisible by heads");
    }
    check_input(mlp_ratio >= 1, "mlp_ratio must be >= 1");
    check_input(in_channels >= 1, "in_channels must be >= 1");
    std::set<int> seen;
    for (int s : me_opembed_stages) {
        check_input(s >= 1 && s <= 4, "me_opembed_stages must be a subset of {1,2,3,4}");
        check_input(seen.insert(s).second, "me_opembed_stages holds a duplicate");
    }
}

bool EncoderConfig::me_opembed_at(int stage) const {
    return std::find(me_opembed_stages.begin(), me_opembed_stages.end(), stage) !=
           me_opembed_stages.end();
}

// ---------------------------------------------------------------- OPEmbed

OPEmbed::OPEmbed(ParamStore& ps, const std::string& prefix, int in_ch, int out_ch, int k,
                 int stride, int pad)
    : proj(ps, prefix + ".proj", in_ch, out_ch, k, stride, pad),
      norm(ps, prefix + ".norm", out_ch) {}

Ref OPEmbed::forward(Graph& g, Ref chw, int& out_h, int& out_w) const {
    Ref y = proj.forward(g, chw);
    out_h = g.val(y).dim(1);
    out_w = g.val(y).dim(2);
    return norm.forward(g, ops::chw_to_rows(g, y));
}

// ----------------------------------------------------------------- ESAttn

ESAttn::ESAttn(ParamStore& ps, const std::string& prefix, int dim_, int heads_, int sr_)
    : dim(dim_), heads(heads_), sr(sr_),
      q(ps, prefix + ".q", dim_, dim_),
      kv(ps, prefix + ".kv", dim_, 2 * dim_),
      proj(ps, prefix + ".proj", dim_, dim_) {
    if (sr > 1) {
        sr_conv = Conv2dLayer(ps, prefix + ".sr", dim_, dim_, sr_, sr_, 0);
        sr_norm = LayerNormLayer(ps, prefix + ".sr_norm", dim_);
    }
}

Ref ESAttn::forward(Graph& g, Ref rows, int h, int w) const {
    check_input(g.val(rows).dim(1) == dim, "attention: token width mismatch");
    const int dh = dim / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    Ref qs = q.forward(g, rows);
    Ref kv_src = rows;
    if (sr > 1) {
        Ref map = ops::rows_to_chw(g, rows, h, w);
        Ref red = sr_conv.forward(g, map);
        kv_src = sr_norm.forward(g, ops::chw_to_rows(g, red));
    }
    Ref kvs = kv.forward(g, kv_src);

    std::vector<Ref> per_head;
    per_head.reserve(static_cast<std::size_t>(heads));
    for (int i = 0; i < heads; ++i) {
        Ref qi = ops::slice_cols(g, qs, i * dh, (i + 1) * dh);
        Ref ki = ops::slice_cols(g, kvs, i * dh, (i + 1) * dh);
        Ref vi = ops::slice_cols(g, kvs, dim + i * dh, dim + (i + 1) * dh);
        Ref score = ops::scale(g, ops::matmul(g, qi, ops::transpose2(g, ki)), scale);
        per_head.push_back(ops::matmul(g, ops::softmax_rows(g, score), vi));
    }
    Ref cat = heads == 1 ? per_head[0] : ops::concat_cols(g, per_head);
    return proj.forward(g, cat);
}

// ----------------------------------------------------------------- MixFFN

MixFFN::MixFFN(ParamStore& ps, const std::string& prefix, int dim_, int hidden_)
    : dim(dim_), hidden(hidden_),
      fc1(ps, prefix + ".fc1", dim_, hidden_),
      fc2(ps, prefix + ".fc2", hidden_, dim_),
      dw(ps, prefix + ".dw", hidden_, hidden_, 3, 1, 1, 1, hidden_) {}

Ref MixFFN::forward(Graph& g, Ref rows, int h, int w) const {
    Ref y = fc1.forward(g, rows);
    y = ops::rows_to_chw(g, y, h, w);
    y = dw.forward(g, y);
    y = ops::chw_to_rows(g, y);
    y = ops::gelu(g, y);
    return fc2.forward(g, y);
}

// -------------------------------------------------------------- TrunkBlock

TrunkBlock::TrunkBlock(ParamStore& ps, const std::string& prefix, int dim, int heads, int sr,
                       int mlp_ratio)
    : ln1(ps, prefix + ".ln1", dim), ln2(ps, prefix + ".ln2", dim),
      attn(ps, prefix + ".attn", dim, heads, sr),
      ffn(ps, prefix + ".ffn", dim, dim * mlp_ratio) {}

Ref TrunkBlock::forward(Graph& g, Ref rows, int h, int w) const {
    Ref x = ops::add(g, rows, attn.forward(g, ln1.forward(g, rows), h, w));
    return ops::add(g, x, ffn.forward(g, ln2.forward(g, x), h, w));
}

// --------------------------------------------------------------------- FRM

FRM::FRM(ParamStore& ps, const std::string& prefix, int dim_)
    : dim(dim_),
      mlp1(ps, prefix + ".mlp1", 2 * dim_, std::max(1, dim_ / 2)),
      mlp2(ps, prefix + ".mlp2", std::max(1, dim_ / 2), dim_, true, Parameter::Init::Zeros),
      spatial(ps, prefix + ".spatial", 2 * dim_, 1, 1, 1, 0, 1, 1, true,
              Parameter::Init::Zeros) {
    alpha_channel = &ps.create(prefix + ".alpha_channel", {1}, Parameter::Init::Zeros);
    alpha_spatial = &ps.create(prefix + ".alpha_spatial", {1}, Parameter::Init::Zeros);
}

std::pair<Ref, Ref> FRM::forward(Graph& g, Ref y_rgb, Ref y_p) const {
    check_input(g.val(y_rgb).shape() == g.val(y_p).shape(),
                "rectification: branch shapes differ");
    Ref a_chan = g.param(*alpha_channel);
    Ref a_spat = g.param(*alpha_spatial);
    Ref gap_rgb = ops::gap_chw(g, y_rgb);
    Ref gap_p = ops::gap_chw(g, y_p);

    // Channel gate for branch m: shared MLP over [gap(m), gap(other)].
    auto channel_gate = [&](Ref own, Ref other) {
        Ref x = ops::reshape(g, ops::concat_vec(g, {own, other}), {1, 2 * dim});
        Ref hbn = ops::relu(g, mlp1.forward(g, x));
        return ops::reshape(g, ops::sigmoid(g, mlp2.forward(g, hbn)), {dim});
    };
    // Spatial gate: shared 1x1 conv over [m, other] channel concat.
    auto spatial_gate = [&](Ref own, Ref other) {
        return ops::sigmoid(g, spatial.forward(g, ops::concat_chw(g, {own, other})));
    };
    auto rectify = [&](Ref own, Ref own_gap, Ref other, Ref other_gap) {
        Ref chan = ops::mul_channel_chw(g, other, channel_gate(own_gap, other_gap));
        Ref spat = ops::mul_map_chw(g, other, spatial_gate(own, other));
        Ref y = ops::add(g, own, ops::scale_by(g, chan, a_chan));
        return ops::add(g, y, ops::scale_by(g, spat, a_spat));
    };
    Ref out_rgb = rectify(y_rgb, gap_rgb, y_p, gap_p);
    Ref out_p = rectify(y_p, gap_p, y_rgb, gap_rgb);
    return {out_rgb, out_p};
}

// --------------------------------------------------------------------- FFM

FFM::FFM(ParamStore& ps, const std::string& prefix, int dim_)
    : dim(dim_),
      q(ps, prefix + ".q", dim_, dim_),
      k(ps, prefix + ".k", dim_, dim_),
      v(ps, prefix + ".v", dim_, dim_),
      attn_proj(ps, prefix + ".attn_proj", dim_, dim_),
      embed_norm(ps, prefix + ".embed_norm", 2 * dim_),
      embed(ps, prefix + ".embed", 2 * dim_, 8 * dim_),
      fuse1(ps, prefix + ".fuse1", 2 * dim_, 2 * dim_),
      fuse2(ps, prefix + ".fuse2", 2 * dim_, dim_) {}

Ref FFM::forward(Graph& g, Ref y_rgb, Ref y_p, int h, int w) const {
    check_input(g.val(y_rgb).shape() == g.val(y_p).shape(), "fusion: branch shapes differ");
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    const int ph = std::min(h, kFuseKvLimit), pw = std::min(w, kFuseKvLimit);

    // own attends to a pooled copy of other; projections shared across the
    // two directions so the module is symmetric under a branch swap.
    auto cross = [&](Ref own_rows, Ref other_map) {
        Ref pooled = ops::chw_to_rows(g, ops::avg_pool_chw(g, other_map, ph, pw));
        Ref ki = k.forward(g, pooled);
        Ref vi = v.forward(g, pooled);
        Ref score = ops::scale(g, ops::matmul(g, q.forward(g, own_rows), ops::transpose2(g, ki)),
                               scale);
        Ref mixed = ops::matmul(g, ops::softmax_rows(g, score), vi);
        return ops::add(g, own_rows, attn_proj.forward(g, mixed));
    };
    Ref rows_rgb = ops::chw_to_rows(g, y_rgb);
    Ref rows_p = ops::chw_to_rows(g, y_p);
    Ref z = ops::concat_cols(g, {cross(rows_rgb, y_p), cross(rows_p, y_rgb)});
    z = ops::add(g, z, embed.forward(g, embed_norm.forward(g, z), h, w));
    Ref fused = fuse2.forward(g, ops::gelu(g, fuse1.forward(g, z)));
    return ops::rows_to_chw(g, fused, h, w);
}

// ------------------------------------------------------------ EncoderStage

EncoderStage::EncoderStage(ParamStore& ps, const std::string& prefix, const EncoderConfig& cfg,
                           int stage_)
    : stage(stage_), me_embed(cfg.me_opembed_at(stage_)), share_trunk(cfg.share_trunk) {
    const int i = stage - 1;
    const int dim = cfg.dims[static_cast<std::size_t>(i)];
    const int in_ch = stage == 1 ? cfg.in_channels : cfg.dims[static_cast<std::size_t>(i - 1)];
    const int k = stage == 1 ? 7 : 3;
    const int stride = stage == 1 ? 4 : 2;
    const int pad = stage == 1 ? 3 : 1;

    if (me_embed) {
        embed_rgb = OPEmbed(ps, prefix + ".rgb.embed", in_ch, dim, k, stride, pad);
        embed_p = OPEmbed(ps, prefix + ".p.embed", in_ch, dim, k, stride, pad);
    } else {
        embed_shared = OPEmbed(ps, prefix + ".shared.embed", in_ch, dim, k, stride, pad);
    }

    const int depth = cfg.depths[static_cast<std::size_t>(i)];
    const int heads = cfg.heads[static_cast<std::size_t>(i)];
    const int sr = cfg.sr_ratios[static_cast<std::size_t>(i)];
    auto build_trunk = [&](const std::string& branch, std::vector<TrunkBlock>& blocks,
                           LayerNormLayer& norm) {
        for (int b = 0; b < depth; ++b)
            blocks.emplace_back(ps, prefix + "." + branch + ".block" + std::to_string(b), dim,
                                heads, sr, cfg.mlp_ratio);
        norm = LayerNormLayer(ps, prefix + "." + branch + ".norm", dim);
    };
    if (share_trunk) {
        build_trunk("shared", blocks_shared, norm_shared);
    } else {
        build_trunk("rgb", blocks_rgb, norm_rgb);
        build_trunk("p", blocks_p, norm_p);
    }

    frm = FRM(ps, prefix + ".frm", dim);
    ffm = FFM(ps, prefix + ".ffm", dim);
}

EncoderStage::Out EncoderStage::forward(Graph& g, Ref x_rgb, Ref x_p) const {
    check_input(g.val(x_rgb).shape() == g.val(x_p).shape(),
                "encoder stage: branch input shapes differ");
    Out out;
    auto branch = [&](Ref x, const OPEmbed& embed, const std::vector<TrunkBlock>& blocks,
                      const LayerNormLayer& norm) {
        int h = 0, w = 0;
        Ref rows = embed.forward(g, x, h, w);
        for (const TrunkBlock& b : blocks) rows = b.forward(g, rows, h, w);
        rows = norm.forward(g, rows);
        out.h = h;
        out.w = w;
        return ops::rows_to_chw(g, rows, h, w);
    };
    const OPEmbed& er = me_embed ? embed_rgb : embed_shared;
    const OPEmbed& ep = me_embed ? embed_p : embed_shared;
    if (share_trunk) {
        out.y_rgb = branch(x_rgb, er, blocks_shared, norm_shared);
        out.y_p = branch(x_p, ep, blocks_shared, norm_shared);
    } else {
        out.y_rgb = branch(x_rgb, er, blocks_rgb, norm_rgb);
        out.y_p = branch(x_p, ep, blocks_p, norm_p);
    }
    auto rect = frm.forward(g, out.y_rgb, out.y_p);
    out.y_rgb_rect = rect.first;
    out.y_p_rect = rect.second;
    out.fused = ffm.forward(g, out.y_rgb_rect, out.y_p_rect, out.h, out.w);
    return out;
}

// ----------------------------------------------------------------- Encoder

Encoder::Encoder(ParamStore& ps, const std::string& prefix, const EncoderConfig& cfg_)
    : cfg(cfg_) {
    cfg.validate();
    for (int s = 1; s <= 4; ++s)
        stages[static_cast<std::size_t>(s - 1)] =
            EncoderStage(ps, prefix + ".stage" + std::to_string(s), cfg, s);
}

StageFeatures Encoder::forward(Graph& g, Ref x_rgb, Ref x_p) const {
    const Tensor& vr = g.val(x_rgb);
    check_input(vr.ndim() == 3 && vr.dim(0) == cfg.in_channels,
                "encoder: input must be [in_channels, H, W]");
    check_input(vr.dim(1) >= 32 && vr.dim(2) >= 32, "encoder: input extent must be >= 32");
    StageFeatures f;
    Ref cur_rgb = x_rgb, cur_p = x_p;
    for (int i = 0; i < 4; ++i) {
        EncoderStage::Out out = stages[static_cast<std::size_t>(i)].forward(g, cur_rgb, cur_p);
        f.fused[static_cast<std::size_t>(i)] = out.fused;
        f.y_rgb[static_cast<std::size_t>(i)] = out.y_rgb;
        f.y_p[static_cast<std::size_t>(i)] = out.y_p;
        f.y_rgb_rect[static_cast<std::size_t>(i)] = out.y_rgb_rect;
        f.y_p_rect[static_cast<std::size_t>(i)] = out.y_p_rect;
        f.h[static_cast<std::size_t>(i)] = out.h;
        f.w[static_cast<std::size_t>(i)] = out.w;
        cur_rgb = out.y_rgb_rect;
        cur_p = out.y_p_rect;
    }
    return f;
}

} // namespace sharecmp

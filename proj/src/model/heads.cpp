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

#include "sharecmp/model/heads.hpp"

#include <algorithm>
#include <set>

#include "sharecmp/core/error.hpp"

namespace sharecmp {

void CPAConfig::validate() const {
    check_input(lambda >= 0.0, "cpa lambda must be >= 0");
    check_input(head_dim >= 1, "cpa head_dim must be >= 1");
    std::set<int> seen;
    for (int s : active_stages) {
        check_input(s >= 1 && s <= 4, "cpa active_stages must be a subset of {1,2,3,4}");
        check_input(seen.insert(s).second, "cpa active_stages holds a duplicate");
    }
}

bool CPAConfig::active_at(int stage) const {
    return std::find(active_stages.begin(), active_stages.end(), stage) != active_stages.end();
}

CPAAHead::CPAAHead(ParamStore& ps, const std::string& prefix, const EncoderConfig& enc,
                   const CPAConfig& cfg, int num_classes_)
    : num_classes(num_classes_) {
    cfg.validate();
    check_input(num_classes >= 1, "cpa head needs at least one class");
    for (int s = 1; s <= 4; ++s) {
        StageHead& h = heads[static_cast<std::size_t>(s - 1)];
        const std::string base = prefix + ".stage" + std::to_string(s);
        h.reduce = Conv2dLayer(ps, base + ".reduce", enc.dims[static_cast<std::size_t>(s - 1)],
                               cfg.head_dim, 1, 1, 0);
        h.out = Conv2dLayer(ps, base + ".out", cfg.head_dim, 2 * num_classes, 1, 1, 0);
    }
}

CPAEstimate CPAAHead::forward_stage(Graph& g, Ref f, int stage, int img_h, int img_w) const {
    check_input(stage >= 1 && stage <= 4, "cpa stage out of range");
    const StageHead& head = heads[static_cast<std::size_t>(stage - 1)];
    // Intermediate grid sits at stride 4 regardless of the stage's stride.
    const int mid_h = (img_h + 3) / 4, mid_w = (img_w + 3) / 4;
    Ref y = head.reduce.forward(g, f);
    const Tensor& v = g.val(y);
    if (v.dim(1) != mid_h || v.dim(2) != mid_w) y = ops::upsample_bilinear(g, y, mid_h, mid_w);
    y = head.out.forward(g, y);
    if (mid_h != img_h || mid_w != img_w) y = ops::upsample_bilinear(g, y, img_h, img_w);
    CPAEstimate est;
    est.a_hat = ops::slice_channels_chw(g, y, 0, num_classes);
    est.d_hat = ops::slice_channels_chw(g, y, num_classes, 2 * num_classes);
    return est;
}

std::map<int, CPAEstimate> CPAAHead::forward(Graph& g, const StageFeatures& f,
                                             const CPAConfig& cfg, int img_h, int img_w) const {
    std::map<int, CPAEstimate> out;
    for (int s : cfg.active_stages)
        out[s] = forward_stage(g, f.fused[static_cast<std::size_t>(s - 1)], s, img_h, img_w);
    return out;
}

CPATargets build_cpa_targets(const Tensor& aolp_map, const Tensor& dolp_map,
                             const LabelMap& mask, int num_classes) {
    check_input(num_classes >= 1, "cpa targets need at least one class");
    check_input(aolp_map.ndim() == 3 && aolp_map.dim(0) == 1 && dolp_map.ndim() == 3 &&
                    dolp_map.dim(0) == 1,
                "cpa targets expect [1,H,W] maps");
    const int h = aolp_map.dim(1), w = aolp_map.dim(2);
    check_input(dolp_map.dim(1) == h && dolp_map.dim(2) == w && mask.h == h && mask.w == w,
                "cpa targets: map and mask dims differ");
    CPATargets t{Tensor({num_classes, h, w}), Tensor({num_classes, h, w})};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::uint8_t c = mask.at(y, x);
            if (c == kIgnoreLabel) continue;
            check_input(c < num_classes, "cpa targets: class id exceeds class count");
            t.a.at3(c, y, x) = aolp_map.at3(0, y, x);
            t.d.at3(c, y, x) = dolp_map.at3(0, y, x);
        }
    return t;
}

Ref cpa_loss(Graph& g, const std::map<int, CPAEstimate>& est, const CPATargets& tgt,
             const CPAConfig& cfg) {
    cfg.validate();
    const double pixels = static_cast<double>(tgt.a.dim(1)) * tgt.a.dim(2);
    Ref total;
    for (const auto& [stage, e] : est) {
        check_input(cfg.active_at(stage), "cpa loss: estimate for an inactive stage");
        check_input(g.val(e.a_hat).shape() == tgt.a.shape(), "cpa loss: shape mismatch");
        Ref da = ops::sub(g, e.a_hat, g.input(tgt.a));
        Ref dd = ops::sub(g, e.d_hat, g.input(tgt.d));
        Ref sq = ops::add(g, ops::sum_all(g, ops::mul(g, da, da)),
                          ops::sum_all(g, ops::mul(g, dd, dd)));
        total = total.valid() ? ops::add(g, total, sq) : sq;
    }
    if (!total.valid()) return g.input(Tensor::scalar(0.0));
    // Sum over stages and classes; mean (default) or sum over pixels. The
    // class sum of per-pixel means is the raw sum divided by the pixel count.
    const double reduce = cfg.mean_over_pixels ? 1.0 / pixels : 1.0;
    return ops::scale(g, total, cfg.lambda * reduce);
}

void DecoderConfig::validate() const {
    check_input(embed_dim >= 1, "decoder embed_dim must be >= 1");
    check_input(dropout >= 0.0 && dropout < 1.0, "decoder dropout must be in [0,1)");
}

Decoder::Decoder(ParamStore& ps, const std::string& prefix, const EncoderConfig& enc,
                 const DecoderConfig& cfg, int num_classes_)
    : num_classes(num_classes_), dropout(cfg.dropout) {
    cfg.validate();
    check_input(num_classes >= 1, "decoder needs at least one class");
    for (int s = 0; s < 4; ++s)
        proj[static_cast<std::size_t>(s)] =
            LinearLayer(ps, prefix + ".proj" + std::to_string(s + 1),
                        enc.dims[static_cast<std::size_t>(s)], cfg.embed_dim);
    fuse = Conv2dLayer(ps, prefix + ".fuse", 4 * cfg.embed_dim, cfg.embed_dim, 1, 1, 0);
    classifier = Conv2dLayer(ps, prefix + ".classifier", cfg.embed_dim, num_classes, 1, 1, 0);
}

Ref Decoder::forward(Graph& g, const StageFeatures& f, int img_h, int img_w, bool train,
                     Rng* rng) const {
    for (int s = 0; s < 4; ++s)
        check_input(f.fused[static_cast<std::size_t>(s)].valid(), "decoder: missing stage");
    const int out_h = (img_h + 3) / 4, out_w = (img_w + 3) / 4;
    std::vector<Ref> maps;
    maps.reserve(4);
    for (int s = 0; s < 4; ++s) {
        Ref rows = ops::chw_to_rows(g, f.fused[static_cast<std::size_t>(s)]);
        Ref emb = proj[static_cast<std::size_t>(s)].forward(g, rows);
        Ref map = ops::rows_to_chw(g, emb, f.h[static_cast<std::size_t>(s)],
                                   f.w[static_cast<std::size_t>(s)]);
        if (f.h[static_cast<std::size_t>(s)] != out_h || f.w[static_cast<std::size_t>(s)] != out_w)
            map = ops::upsample_bilinear(g, map, out_h, out_w);
        maps.push_back(map);
    }
    Ref y = fuse.forward(g, ops::concat_chw(g, maps));
    if (train && dropout > 0.0) {
        check_input(rng != nullptr, "decoder: dropout needs an rng in training mode");
        y = ops::dropout(g, y, dropout, *rng);
    }
    y = classifier.forward(g, y);
    if (out_h != img_h || out_w != img_w) y = ops::upsample_bilinear(g, y, img_h, img_w);
    return y;
}

LabelMap logits_to_labels(const Tensor& logits) {
    check_input(logits.ndim() == 3, "argmax expects [Cls,H,W] logits");
    const int cls = logits.dim(0), h = logits.dim(1), w = logits.dim(2);
    LabelMap out(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int best = 0;
            double bv = logits.at3(0, y, x);
            for (int c = 1; c < cls; ++c) {
                const double v = logits.at3(c, y, x);
                if (v > bv) { // strict: ties keep the lowest index
                    bv = v;
                    best = c;
                }
            }
            out.at(y, x) = static_cast<std::uint8_t>(best);
        }
    return out;
}

} // namespace sharecmp

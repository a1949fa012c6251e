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

#include "sharecmp/model/model.hpp"

#include "sharecmp/core/error.hpp"

namespace sharecmp {

ModelConfig ModelConfig::b2(int num_classes) {
    ModelConfig cfg;
    cfg.encoder = EncoderConfig::b2();
    cfg.num_classes = num_classes;
    return cfg;
}

ModelConfig ModelConfig::tiny(int num_classes) {
    ModelConfig cfg;
    cfg.encoder = EncoderConfig::tiny();
    cfg.pga.mid_channels = 8;
    cfg.cpa.head_dim = 32;
    cfg.decoder.embed_dim = 64;
    cfg.decoder.dropout = 0.0;
    cfg.num_classes = num_classes;
    return cfg;
}

void ModelConfig::validate() const {
    encoder.validate();
    pga.validate();
    cpa.validate();
    decoder.validate();
    check_input(num_classes >= 1 && num_classes <= 254, "num_classes must be in [1, 254]");
    check_input(pga.out_channels == encoder.in_channels,
                "pga output width must match the encoder input width");
}

Model::Model(const ModelConfig& cfg_)
    : cfg(cfg_) {
    cfg.validate();
    pga = PGA(params, "pga", cfg.pga);
    encoder = Encoder(params, "encoder", cfg.encoder);
    cpaa = CPAAHead(params, "cpaahead", cfg.encoder, cfg.cpa, cfg.num_classes);
    decoder = Decoder(params, "decoder", cfg.encoder, cfg.decoder, cfg.num_classes);
}

void Model::init(std::uint64_t seed) {
    Rng rng(seed);
    params.init_all(rng);
}

Tensor stack_representations(const std::vector<RepresentationMap>& reps) {
    if (reps.empty()) throw ConfigError("representation input requested but none provided");
    const int h = reps[0].values.dim(1), w = reps[0].values.dim(2);
    std::vector<std::pair<const Tensor*, int>> flat;
    for (const RepresentationMap& r : reps) {
        check_input(r.values.ndim() == 3 && r.values.dim(1) == h && r.values.dim(2) == w,
                    "representation maps must share one spatial size");
        for (int c = 0; c < r.values.dim(0); ++c) flat.emplace_back(&r.values, c);
    }
    Tensor out({3, h, w});
    for (int oc = 0; oc < 3; ++oc) {
        const auto& [src, c] = flat[static_cast<std::size_t>(oc) % flat.size()];
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at3(oc, y, x) = src->at3(c, y, x);
    }
    return out;
}

Model::Forward Model::forward(Graph& g, const Sample& sample, bool train, Rng* rng) const {
    Forward f;
    Ref x_rgb = g.input(sample.rgb);
    if (cfg.pga.bypass) {
        f.i_p = g.input(stack_representations(sample.representations));
    } else {
        check_input(sample.has_polarized, "pga needs the four polarizer-angle images");
        f.i_p = pga.forward(g, g.input(sample.polarized.i0), g.input(sample.polarized.i45),
                            g.input(sample.polarized.i90), g.input(sample.polarized.i135));
    }
    f.feats = encoder.forward(g, x_rgb, f.i_p);
    const int h = sample.height(), w = sample.width();
    f.logits = decoder.forward(g, f.feats, h, w, train, rng);
    if (train && cfg.cpa.lambda > 0.0 && !cfg.cpa.active_stages.empty())
        f.cpa = cpaa.forward(g, f.feats, cfg.cpa, h, w);
    return f;
}

Model::Losses Model::losses(Graph& g, const Forward& f, const Sample& sample) const {
    Losses l;
    l.seg = ops::cross_entropy_chw(g, f.logits, sample.mask, kIgnoreLabel, &l.all_ignored);
    if (!f.cpa.empty()) {
        CPATargets tgt = build_cpa_targets(sample.aolp_target, sample.dolp_target, sample.mask,
                                           cfg.num_classes);
        l.cpa = cpa_loss(g, f.cpa, tgt, cfg.cpa);
    } else {
        l.cpa = g.input(Tensor::scalar(0.0));
    }
    l.total = ops::add(g, l.seg, l.cpa);
    return l;
}

} // namespace sharecmp

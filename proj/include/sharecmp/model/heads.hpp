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

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sharecmp/core/label_map.hpp"
#include "sharecmp/model/encoder.hpp"

namespace sharecmp {

/// Auxiliary per-class polarization estimation: which stages contribute to
/// the loss, and the loss weight.
struct CPAConfig {
    std::vector<int> active_stages = {3, 4}; // 1-based
    double lambda = 0.01;
    int head_dim = 256;
    /// Mean over pixels (default) or the bare sum over all elements.
    bool mean_over_pixels = true;

    void validate() const;
    bool active_at(int stage) const;
};

/// Per-class AoLP/DoLP estimates of one stage, both [Cls, H, W] at full
/// input resolution.
struct CPAEstimate {
    Ref a_hat, d_hat;
};

/// Heads exist for all four stages so checkpoints are layout-stable under
/// active-stage ablations; forward is only run on the stages asked for.
struct CPAAHead {
    int num_classes = 0;
    struct StageHead {
        Conv2dLayer reduce; // 1x1 dims[i] -> head_dim
        Conv2dLayer out;    // 1x1 head_dim -> 2*Cls
    };
    std::array<StageHead, 4> heads;

    CPAAHead() = default;
    CPAAHead(ParamStore& ps, const std::string& prefix, const EncoderConfig& enc,
             const CPAConfig& cfg, int num_classes);

    /// stage is 1-based; f is that stage's fused feature map.
    CPAEstimate forward_stage(Graph& g, Ref f, int stage, int img_h, int img_w) const;
    /// Estimates for every stage in cfg.active_stages.
    std::map<int, CPAEstimate> forward(Graph& g, const StageFeatures& f, const CPAConfig& cfg,
                                       int img_h, int img_w) const;
};

/// Per-class polarization targets: channel c equals the map on pixels of
/// class c and 0 elsewhere (ignore pixels are 0 in every channel).
struct CPATargets {
    Tensor a, d; // [Cls, H, W]
};
CPATargets build_cpa_targets(const Tensor& aolp_map, const Tensor& dolp_map,
                             const LabelMap& mask, int num_classes);

/// lambda * sum_stages sum_classes reduce[(a - a_hat)^2 + (d - d_hat)^2].
Ref cpa_loss(Graph& g, const std::map<int, CPAEstimate>& est, const CPATargets& tgt,
             const CPAConfig& cfg);

/// All-MLP decoder over the four fused stage features.
struct DecoderConfig {
    int embed_dim = 256;
    double dropout = 0.1;

    void validate() const;
};

struct Decoder {
    int num_classes = 0;
    double dropout = 0.0;
    std::array<LinearLayer, 4> proj; // dims[i] -> embed
    Conv2dLayer fuse;                // 1x1: 4*embed -> embed
    Conv2dLayer classifier;          // 1x1: embed -> Cls

    Decoder() = default;
    Decoder(ParamStore& ps, const std::string& prefix, const EncoderConfig& enc,
            const DecoderConfig& cfg, int num_classes);

    /// Full-resolution class logits [Cls, img_h, img_w]. rng may be null when
    /// train is false or dropout is 0.
    Ref forward(Graph& g, const StageFeatures& f, int img_h, int img_w, bool train,
                Rng* rng) const;
};

/// Argmax over the class axis of [Cls,H,W] logits; ties break to the lowest
/// class index.
LabelMap logits_to_labels(const Tensor& logits);

} // namespace sharecmp

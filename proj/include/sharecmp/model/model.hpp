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

#include <cstdint>
#include <map>

#include "sharecmp/data/dataset.hpp"
#include "sharecmp/model/encoder.hpp"
#include "sharecmp/model/heads.hpp"
#include "sharecmp/model/pga.hpp"

namespace sharecmp {

struct ModelConfig {
    EncoderConfig encoder;
    PGAConfig pga;
    CPAConfig cpa;
    DecoderConfig decoder;
    int num_classes = 2;

    static ModelConfig b2(int num_classes);
    static ModelConfig tiny(int num_classes);
    void validate() const;
};

/// The full segmentation network: PGA generates the polarization input,
/// the dual-branch encoder fuses it with RGB, the MLP decoder predicts
/// class logits, and the auxiliary head estimates per-class AoLP/DoLP.
/// Parameters live in `params` under the prefixes pga./encoder./cpaahead./
/// decoder. and are created unmaterialized, so structural counting needs no
/// initialization.
class Model {
public:
    explicit Model(const ModelConfig& cfg);
    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;

    ModelConfig cfg;
    ParamStore params;
    PGA pga;
    Encoder encoder;
    CPAAHead cpaa;
    Decoder decoder;

    /// Materializes every parameter from its init spec, deterministically.
    void init(std::uint64_t seed);

    struct Forward {
        Ref i_p;     // [3,H,W] polarization input fed to the encoder
        StageFeatures feats;
        Ref logits;  // [Cls,H,W]
        std::map<int, CPAEstimate> cpa; // filled in training mode only
    };
    /// rng is required when train is true and decoder dropout > 0.
    Forward forward(Graph& g, const Sample& sample, bool train, Rng* rng) const;

    struct Losses {
        Ref seg, cpa, total;
        bool all_ignored = false;
    };
    Losses losses(Graph& g, const Forward& f, const Sample& sample) const;
};

/// Channel-stack of representation maps, cycled to exactly three channels
/// (the encoder's polarization-branch input in PGA bypass mode).
Tensor stack_representations(const std::vector<RepresentationMap>& reps);

} // namespace sharecmp

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

#include "sharecmp/model/pga.hpp"

#include <algorithm>

#include "sharecmp/core/error.hpp"

namespace sharecmp {

void PGAConfig::validate() const {
    check_input(in_channels >= 1 && mid_channels >= 1 && out_channels >= 1,
                "pga channel counts must be positive");
    check_input(dilation >= 1, "pga dilation must be >= 1");
    check_input(se_reduction >= 1, "pga se_reduction must be >= 1");
}

PGA::PGA(ParamStore& ps, const std::string& prefix, const PGAConfig& cfg_) : cfg(cfg_) {
    cfg.validate();
    const int cat = 4 * cfg.mid_channels;
    const int bottleneck = std::max(1, cat / cfg.se_reduction);
    const char* angle_names[4] = {"angle000", "angle045", "angle090", "angle135"};
    for (int a = 0; a < 4; ++a)
        angle_convs[static_cast<std::size_t>(a)] = Conv2dLayer(
            ps, prefix + "." + angle_names[a], cfg.in_channels, cfg.mid_channels, 3, 1, 1);
    mix_pw = Conv2dLayer(ps, prefix + ".mix_pw", cat, cat, 1, 1, 0);
    mix_dw = Conv2dLayer(ps, prefix + ".mix_dw", cat, cat, 3, 1, cfg.dilation, cfg.dilation, cat);
    se1 = LinearLayer(ps, prefix + ".se1", cat, bottleneck);
    se2 = LinearLayer(ps, prefix + ".se2", bottleneck, cat);
    head_pw = Conv2dLayer(ps, prefix + ".head_pw", cat, cfg.out_channels, 1, 1, 0);
    head_dw = Conv2dLayer(ps, prefix + ".head_dw", cfg.out_channels, cfg.out_channels, 3, 1, 1, 1,
                          cfg.out_channels);
    prelu_slope = &ps.create(prefix + ".prelu", {cfg.per_channel_prelu ? cfg.out_channels : 1},
                             Parameter::Init::Constant, 0.25);
}

Ref PGA::concat_features(Graph& g, Ref i0, Ref i45, Ref i90, Ref i135) const {
    const Ref in[4] = {i0, i45, i90, i135};
    std::vector<Ref> parts;
    parts.reserve(4);
    for (int a = 0; a < 4; ++a) {
        check_input(g.val(in[a]).dim(0) == cfg.in_channels, "pga: angle channel mismatch");
        parts.push_back(angle_convs[static_cast<std::size_t>(a)].forward(g, in[a]));
    }
    return ops::concat_chw(g, parts);
}

Ref PGA::attention_gate(Graph& g, Ref f_p) const {
    const int cat = 4 * cfg.mid_channels;
    Ref refined = mix_dw.forward(g, mix_pw.forward(g, f_p));
    Ref pooled = ops::reshape(g, ops::gap_chw(g, refined), {1, cat});
    Ref gate = ops::sigmoid(g, se2.forward(g, ops::relu(g, se1.forward(g, pooled))));
    return ops::reshape(g, gate, {cat});
}

Ref PGA::forward(Graph& g, Ref i0, Ref i45, Ref i90, Ref i135) const {
    Ref f_p = concat_features(g, i0, i45, i90, i135);
    Ref attn = attention_gate(g, f_p);
    Ref pre = ops::add(g, f_p, ops::mul_channel_chw(g, f_p, attn));
    Ref out = head_dw.forward(g, head_pw.forward(g, pre));
    return ops::prelu_chw(g, out, g.param(*prelu_slope));
}

} // namespace sharecmp

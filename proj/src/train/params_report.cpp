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

#include "sharecmp/train/params_report.hpp"

#include <algorithm>

namespace sharecmp {

ParamReport count_params(const ModelConfig& cfg) {
    cfg.validate();
    ModelConfig dual_cfg = cfg;
    dual_cfg.encoder.share_trunk = false;

    // Construction registers shapes only, so both models stay cheap.
    Model shared(cfg);
    Model dual(dual_cfg);

    ParamReport r;
    r.pga = shared.params.count_prefix("pga.");
    r.encoder = shared.params.count_prefix("encoder.");
    r.cpaahead = shared.params.count_prefix("cpaahead.");
    r.decoder = shared.params.count_prefix("decoder.");
    r.total = shared.params.total_params();
    r.encoder_dual = dual.params.count_prefix("encoder.");
    r.total_dual = dual.params.total_params();
    r.encoder_ratio = static_cast<double>(r.encoder) / static_cast<double>(r.encoder_dual);
    r.total_reduction = 1.0 - static_cast<double>(r.total) / static_cast<double>(r.total_dual);
    r.gflops_512 = estimate_forward_gflops(cfg, 512);
    return r;
}

double estimate_forward_gflops(const ModelConfig& cfg, int img) {
    const EncoderConfig& e = cfg.encoder;
    double macs = 0.0;
    const double hw = static_cast<double>(img) * img;

    if (!cfg.pga.bypass) {
        const double mid = cfg.pga.mid_channels, in = cfg.pga.in_channels;
        const double cat = 4.0 * mid, out = cfg.pga.out_channels;
        macs += 4.0 * 9.0 * in * mid * hw; // per-angle 3x3
        macs += cat * cat * hw;            // mix pointwise
        macs += 9.0 * cat * hw;            // mix depth-wise
        const double bneck = std::max(1.0, cat / cfg.pga.se_reduction);
        macs += cat * bneck * 2.0;         // gate MLP on pooled means
        macs += cat * out * hw;            // head pointwise
        macs += 9.0 * out * hw;            // head depth-wise
    }

    // Both branches run every stage; a shared trunk halves parameters, not
    // compute.
    double side = static_cast<double>(img);
    for (int i = 0; i < 4; ++i) {
        const double c = e.dims[static_cast<std::size_t>(i)];
        const double cin = i == 0 ? e.in_channels : e.dims[static_cast<std::size_t>(i - 1)];
        const int k = i == 0 ? 7 : 3, stride = i == 0 ? 4 : 2;
        side = (side + stride - 1.0) / stride;
        side = static_cast<double>(static_cast<long>(side));
        const double n = side * side;
        const double sr = e.sr_ratios[static_cast<std::size_t>(i)];
        const double m = n / (sr * sr);
        const double hidden = c * e.mlp_ratio;

        macs += 2.0 * k * k * cin * c * n; // embeds, both branches
        double block = n * c * c;          // q
        if (sr > 1) block += sr * sr * c * c * m + m * c; // reduction conv + norm
        block += m * c * 2.0 * c;          // kv
        block += 2.0 * n * m * c;          // scores and value mix
        block += n * c * c;                // proj
        block += n * c * hidden + 9.0 * hidden * n + n * hidden * c; // FFN
        macs += 2.0 * e.depths[static_cast<std::size_t>(i)] * block;

        macs += 2.0 * c * (c / 2.0) * 2.0 + 2.0 * c * n; // FRM gates
        const double mp = std::min(n, 49.0);             // FFM pooled kv grid
        double ffm = 2.0 * (n * c * c + 2.0 * mp * c * c + 2.0 * n * mp * c + n * c * c);
        ffm += n * 2.0 * c * 8.0 * c + 9.0 * 8.0 * c * n + n * 8.0 * c * 2.0 * c;
        ffm += n * (2.0 * c * 2.0 * c + 2.0 * c * c);
        macs += ffm;
    }

    const double q = static_cast<double>((img + 3) / 4); // stride-4 grid
    const double cls = cfg.num_classes;
    for (int s : cfg.cpa.active_stages) {
        const double c = e.dims[static_cast<std::size_t>(s - 1)];
        const double n = q * q / std::pow(4.0, s - 1);
        macs += c * cfg.cpa.head_dim * n + cfg.cpa.head_dim * 2.0 * cls * q * q;
    }
    for (int i = 0; i < 4; ++i) {
        const double c = e.dims[static_cast<std::size_t>(i)];
        const double n = q * q / std::pow(4.0, i);
        macs += n * c * cfg.decoder.embed_dim;
    }
    macs += 4.0 * cfg.decoder.embed_dim * cfg.decoder.embed_dim * q * q;
    macs += cfg.decoder.embed_dim * cls * q * q;

    return 2.0 * macs / 1e9;
}

} // namespace sharecmp

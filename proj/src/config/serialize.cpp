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

#include "sharecmp/config/serialize.hpp"

#include <algorithm>
#include <array>
#include <initializer_list>
#include <string>
#include <vector>

#include "sharecmp/core/error.hpp"

namespace sharecmp {

namespace {

using nlohmann::json;

void expect_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const std::string& where) {
    for (const auto& item : j.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) {
            return item.key() == k;
        });
        if (!known) throw ConfigError(where + ": unknown key '" + item.key() + "'");
    }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + ": bad value for '" + key + "'");
    }
}

void read4(const json& j, const char* key, std::array<int, 4>& out, const std::string& where) {
    if (!j.contains(key)) return;
    std::vector<int> v;
    read(j, key, v, where);
    if (v.size() != 4) throw ConfigError(where + ": '" + key + "' needs exactly 4 entries");
    std::copy(v.begin(), v.end(), out.begin());
}

} // namespace

json encoder_config_to_json(const EncoderConfig& cfg) {
    return json{{"dims", cfg.dims},
                {"depths", cfg.depths},
                {"heads", cfg.heads},
                {"sr_ratios", cfg.sr_ratios},
                {"mlp_ratio", cfg.mlp_ratio},
                {"me_opembed_stages", cfg.me_opembed_stages},
                {"share_trunk", cfg.share_trunk},
                {"in_channels", cfg.in_channels}};
}

EncoderConfig encoder_config_from_json(const json& j) {
    const std::string where = "encoder";
    expect_object(j, where);
    reject_unknown(j,
                   {"dims", "depths", "heads", "sr_ratios", "mlp_ratio", "me_opembed_stages",
                    "share_trunk", "in_channels"},
                   where);
    EncoderConfig cfg;
    read4(j, "dims", cfg.dims, where);
    read4(j, "depths", cfg.depths, where);
    read4(j, "heads", cfg.heads, where);
    read4(j, "sr_ratios", cfg.sr_ratios, where);
    read(j, "mlp_ratio", cfg.mlp_ratio, where);
    read(j, "me_opembed_stages", cfg.me_opembed_stages, where);
    read(j, "share_trunk", cfg.share_trunk, where);
    read(j, "in_channels", cfg.in_channels, where);
    return cfg;
}

json pga_config_to_json(const PGAConfig& cfg) {
    return json{{"in_channels", cfg.in_channels},
                {"mid_channels", cfg.mid_channels},
                {"dilation", cfg.dilation},
                {"se_reduction", cfg.se_reduction},
                {"out_channels", cfg.out_channels},
                {"per_channel_prelu", cfg.per_channel_prelu},
                {"bypass", cfg.bypass}};
}

PGAConfig pga_config_from_json(const json& j) {
    const std::string where = "pga";
    expect_object(j, where);
    reject_unknown(j,
                   {"in_channels", "mid_channels", "dilation", "se_reduction", "out_channels",
                    "per_channel_prelu", "bypass"},
                   where);
    PGAConfig cfg;
    read(j, "in_channels", cfg.in_channels, where);
    read(j, "mid_channels", cfg.mid_channels, where);
    read(j, "dilation", cfg.dilation, where);
    read(j, "se_reduction", cfg.se_reduction, where);
    read(j, "out_channels", cfg.out_channels, where);
    read(j, "per_channel_prelu", cfg.per_channel_prelu, where);
    read(j, "bypass", cfg.bypass, where);
    return cfg;
}

json cpa_config_to_json(const CPAConfig& cfg) {
    return json{{"active_stages", cfg.active_stages},
                {"lambda", cfg.lambda},
                {"head_dim", cfg.head_dim},
                {"mean_over_pixels", cfg.mean_over_pixels}};
}

CPAConfig cpa_config_from_json(const json& j) {
    const std::string where = "cpa";
    expect_object(j, where);
    reject_unknown(j, {"active_stages", "lambda", "head_dim", "mean_over_pixels"}, where);
    CPAConfig cfg;
    read(j, "active_stages", cfg.active_stages, where);
    read(j, "lambda", cfg.lambda, where);
    read(j, "head_dim", cfg.head_dim, where);
    read(j, "mean_over_pixels", cfg.mean_over_pixels, where);
    return cfg;
}

json decoder_config_to_json(const DecoderConfig& cfg) {
    return json{{"embed_dim", cfg.embed_dim}, {"dropout", cfg.dropout}};
}

DecoderConfig decoder_config_from_json(const json& j) {
    const std::string where = "decoder";
    expect_object(j, where);
    reject_unknown(j, {"embed_dim", "dropout"}, where);
    DecoderConfig cfg;
    read(j, "embed_dim", cfg.embed_dim, where);
    read(j, "dropout", cfg.dropout, where);
    return cfg;
}

json model_config_to_json(const ModelConfig& cfg) {
    return json{{"encoder", encoder_config_to_json(cfg.encoder)},
                {"pga", pga_config_to_json(cfg.pga)},
                {"cpa", cpa_config_to_json(cfg.cpa)},
                {"decoder", decoder_config_to_json(cfg.decoder)},
                {"num_classes", cfg.num_classes}};
}

ModelConfig model_config_from_json(const json& j) {
    const std::string where = "model";
    expect_object(j, where);
    reject_unknown(j, {"preset", "encoder", "pga", "cpa", "decoder", "num_classes"}, where);
    ModelConfig cfg;
    if (j.contains("preset")) {
        std::string preset;
        read(j, "preset", preset, where);
        if (preset == "b2")
            cfg = ModelConfig::b2(cfg.num_classes);
        else if (preset == "tiny")
            cfg = ModelConfig::tiny(cfg.num_classes);
        else
            throw ConfigError(where + ": unknown preset '" + preset + "'");
    }
    // Sub-objects replace, not patch, the preset section they name; the
    // common case overrides scalars like num_classes or cpa.active_stages.
    auto merge = [&](const char* key, auto parse, auto& slot) {
        if (!j.contains(key)) return;
        json merged = j.at(key);
        expect_object(merged, where + "." + key);
        json base = json::object();
        if (j.contains("preset")) {
            // Apply the override keys on top of the preset's serialized form.
            if (std::string(key) == "encoder") base = encoder_config_to_json(cfg.encoder);
            if (std::string(key) == "pga") base = pga_config_to_json(cfg.pga);
            if (std::string(key) == "cpa") base = cpa_config_to_json(cfg.cpa);
            if (std::string(key) == "decoder") base = decoder_config_to_json(cfg.decoder);
            base.update(merged);
            merged = base;
        }
        slot = parse(merged);
    };
    merge("encoder", encoder_config_from_json, cfg.encoder);
    merge("pga", pga_config_from_json, cfg.pga);
    merge("cpa", cpa_config_from_json, cfg.cpa);
    merge("decoder", decoder_config_from_json, cfg.decoder);
    read(j, "num_classes", cfg.num_classes, where);
    return cfg;
}

json train_config_to_json(const TrainConfig& cfg) {
    return json{{"lr0", cfg.lr0},
                {"power", cfg.power},
                {"warmup_epochs", cfg.warmup_epochs},
                {"warmup_factor", cfg.warmup_factor},
                {"warmup_constant", cfg.warmup_constant},
                {"weight_decay", cfg.weight_decay},
                {"batch_size", cfg.batch_size},
                {"epochs", cfg.epochs},
                {"seed", cfg.seed}};
}

TrainConfig train_config_from_json(const json& j) {
    const std::string where = "train";
    expect_object(j, where);
    reject_unknown(j,
                   {"lr0", "power", "warmup_epochs", "warmup_factor", "warmup_constant",
                    "weight_decay", "batch_size", "epochs", "seed"},
                   where);
    TrainConfig cfg;
    read(j, "lr0", cfg.lr0, where);
    read(j, "power", cfg.power, where);
    read(j, "warmup_epochs", cfg.warmup_epochs, where);
    read(j, "warmup_factor", cfg.warmup_factor, where);
    read(j, "warmup_constant", cfg.warmup_constant, where);
    read(j, "weight_decay", cfg.weight_decay, where);
    read(j, "batch_size", cfg.batch_size, where);
    read(j, "epochs", cfg.epochs, where);
    read(j, "seed", cfg.seed, where);
    return cfg;
}

json augment_config_to_json(const AugmentConfig& cfg) {
    return json{{"enabled", cfg.enabled},
                {"resize_min", cfg.resize_min},
                {"resize_max", cfg.resize_max},
                {"hflip_prob", cfg.hflip_prob},
                {"physical_hflip", cfg.physical_hflip},
                {"brightness", cfg.brightness},
                {"contrast", cfg.contrast},
                {"saturation", cfg.saturation},
                {"hue", cfg.hue},
                {"crop_h", cfg.crop_h},
                {"crop_w", cfg.crop_w}};
}

AugmentConfig augment_config_from_json(const json& j) {
    const std::string where = "augment";
    expect_object(j, where);
    reject_unknown(j,
                   {"enabled", "resize_min", "resize_max", "hflip_prob", "physical_hflip",
                    "brightness", "contrast", "saturation", "hue", "crop_h", "crop_w"},
                   where);
    AugmentConfig cfg;
    read(j, "enabled", cfg.enabled, where);
    read(j, "resize_min", cfg.resize_min, where);
    read(j, "resize_max", cfg.resize_max, where);
    read(j, "hflip_prob", cfg.hflip_prob, where);
    read(j, "physical_hflip", cfg.physical_hflip, where);
    read(j, "brightness", cfg.brightness, where);
    read(j, "contrast", cfg.contrast, where);
    read(j, "saturation", cfg.saturation, where);
    read(j, "hue", cfg.hue, where);
    read(j, "crop_h", cfg.crop_h, where);
    read(j, "crop_w", cfg.crop_w, where);
    return cfg;
}

} // namespace sharecmp

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

#include "json.hpp"
#include "sharecmp/data/augment.hpp"
#include "sharecmp/model/model.hpp"
#include "sharecmp/train/schedule.hpp"

namespace sharecmp {

/// JSON round trips for every config struct. Parsing is strict: an unknown
/// key raises ConfigError; a missing key keeps the struct's default. The
/// model object accepts a leading "preset" key ("b2" or "tiny") that selects
/// the base the remaining keys are applied on.
nlohmann::json encoder_config_to_json(const EncoderConfig& cfg);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);

nlohmann::json pga_config_to_json(const PGAConfig& cfg);
PGAConfig pga_config_from_json(const nlohmann::json& j);

nlohmann::json cpa_config_to_json(const CPAConfig& cfg);
CPAConfig cpa_config_from_json(const nlohmann::json& j);

nlohmann::json decoder_config_to_json(const DecoderConfig& cfg);
DecoderConfig decoder_config_from_json(const nlohmann::json& j);

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

nlohmann::json augment_config_to_json(const AugmentConfig& cfg);
AugmentConfig augment_config_from_json(const nlohmann::json& j);

} // namespace sharecmp

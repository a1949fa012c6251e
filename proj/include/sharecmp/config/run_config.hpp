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

#include <string>
#include <vector>

#include "sharecmp/config/serialize.hpp"
#include "sharecmp/data/synthetic.hpp"

namespace sharecmp {

/// Where the dataset lives and which splits drive training and evaluation.
/// An empty val_split evaluates on the training split.
struct DataConfig {
    std::string root;
    std::string train_split = "train";
    std::string val_split = "val";
};

/// One experiment: model + optimization + augmentation + data location.
/// model.num_classes may be 0, meaning "take it from the dataset manifest".
struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    AugmentConfig augment;
    DataConfig data;
    std::string output_dir = "run";

    void validate() const;
};

nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);

/// Applies one `dotted.path=value` assignment onto the config document.
/// Paths that do not start with a top-level section are resolved under
/// "model." (so `cpa.lambda=0.05` means `model.cpa.lambda=0.05`). Values
/// parse as JSON when possible; `a,b,c` lists become arrays; anything else
/// stays a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Reads a JSON config file and applies the overrides in order.
RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Synthetic scene description as JSON (same strictness as the configs).
nlohmann::json scene_spec_to_json(const SyntheticSceneSpec& spec);
SyntheticSceneSpec scene_spec_from_json(const nlohmann::json& j);

} // namespace sharecmp

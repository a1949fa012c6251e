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

#include "sharecmp/config/run_config.hpp"

#include <fstream>
#include <sstream>

#include "sharecmp/core/error.hpp"

namespace sharecmp {

namespace {

using nlohmann::json;

const char* kTopLevelKeys[] = {"model", "train", "augment", "data", "output_dir"};

json parse_override_value(const std::string& text) {
    if (text.find(',') != std::string::npos) {
        json arr = json::array();
        std::stringstream ss(text);
        std::string piece;
        bool ok = true;
        while (std::getline(ss, piece, ',')) {
            json v = json::parse(piece, nullptr, false);
            if (v.is_discarded()) {
                ok = false;
                break;
            }
            arr.push_back(v);
        }
        if (ok) return arr;
    }
    json v = json::parse(text, nullptr, false);
    if (!v.is_discarded()) return v;
    return json(text);
}

DataConfig data_config_from_json(const json& j) {
    const std::string where = "data";
    if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
    for (const auto& item : j.items())
        if (item.key() != "root" && item.key() != "train_split" && item.key() != "val_split")
            throw ConfigError(where + ": unknown key '" + item.key() + "'");
    DataConfig cfg;
    if (j.contains("root")) cfg.root = j.at("root").get<std::string>();
    if (j.contains("train_split")) cfg.train_split = j.at("train_split").get<std::string>();
    if (j.contains("val_split")) cfg.val_split = j.at("val_split").get<std::string>();
    return cfg;
}

} // namespace

void RunConfig::validate() const {
    if (model.num_classes == 0) {
        // Class count comes from the dataset later; validate the rest now.
        ModelConfig m = model;
        m.num_classes = 1;
        m.validate();
    } else {
        model.validate();
    }
    train.validate();
    if (data.root.empty()) throw ConfigError("data: root must be set");
    if (data.train_split.empty()) throw ConfigError("data: train_split must be set");
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

json run_config_to_json(const RunConfig& cfg) {
    return json{{"model", model_config_to_json(cfg.model)},
                {"train", train_config_to_json(cfg.train)},
                {"augment", augment_config_to_json(cfg.augment)},
                {"data",
                 {{"root", cfg.data.root},
                  {"train_split", cfg.data.train_split},
                  {"val_split", cfg.data.val_split}}},
                {"output_dir", cfg.output_dir}};
}

RunConfig run_config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("run config: expected a JSON object");
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : kTopLevelKeys) known = known || item.key() == k;
        if (!known) throw ConfigError("run config: unknown key '" + item.key() + "'");
    }
    RunConfig cfg;
    if (j.contains("model")) cfg.model = model_config_from_json(j.at("model"));
    if (j.contains("train")) cfg.train = train_config_from_json(j.at("train"));
    if (j.contains("augment")) cfg.augment = augment_config_from_json(j.at("augment"));
    if (j.contains("data")) cfg.data = data_config_from_json(j.at("data"));
    if (j.contains("output_dir")) {
        try {
            cfg.output_dir = j.at("output_dir").get<std::string>();
        } catch (const json::exception&) {
            throw ConfigError("run config: bad value for 'output_dir'");
        }
    }
    return cfg;
}

void apply_override(json& doc, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override must look like path.to.key=value: " + assignment);
    std::string path = assignment.substr(0, eq);
    const json value = parse_override_value(assignment.substr(eq + 1));

    std::vector<std::string> keys;
    std::stringstream ss(path);
    std::string k;
    while (std::getline(ss, k, '.')) {
        if (k.empty()) throw ConfigError("override has an empty path segment: " + assignment);
        keys.push_back(k);
    }
    bool top_level = false;
    for (const char* t : kTopLevelKeys) top_level = top_level || keys.front() == t;
    if (!top_level) keys.insert(keys.begin(), "model");

    json* node = &doc;
    for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
        json& next = (*node)[keys[i]];
        if (!next.is_object() && !next.is_null())
            throw ConfigError("override path crosses a non-object: " + assignment);
        node = &next;
    }
    (*node)[keys.back()] = value;
}

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    json doc;
    try {
        f >> doc;
    } catch (const json::exception& e) {
        throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
    }
    for (const std::string& o : overrides) apply_override(doc, o);
    return run_config_from_json(doc);
}

json scene_spec_to_json(const SyntheticSceneSpec& spec) {
    json classes = json::array();
    for (const SyntheticClassSpec& c : spec.classes)
        classes.push_back(json{{"dolp", c.dolp}, {"aolp", c.aolp}, {"color", c.color}});
    return json{{"height", spec.height},
                {"width", spec.width},
                {"classes", classes},
                {"class_names", spec.class_names},
                {"seed", spec.seed},
                {"shapes_per_image", spec.shapes_per_image},
                {"grid_snap", spec.grid_snap}};
}

SyntheticSceneSpec scene_spec_from_json(const json& j) {
    const std::string where = "scene spec";
    if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
    for (const auto& item : j.items()) {
        static const char* allowed[] = {"height", "width",  "classes",         "class_names",
                                        "seed",   "shapes_per_image", "grid_snap"};
        bool known = false;
        for (const char* a : allowed) known = known || item.key() == a;
        if (!known) throw ConfigError(where + ": unknown key '" + item.key() + "'");
    }
    SyntheticSceneSpec spec;
    spec.classes.clear();
    try {
        if (j.contains("height")) spec.height = j.at("height").get<int>();
        if (j.contains("width")) spec.width = j.at("width").get<int>();
        if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("shapes_per_image"))
            spec.shapes_per_image = j.at("shapes_per_image").get<int>();
        if (j.contains("grid_snap")) spec.grid_snap = j.at("grid_snap").get<int>();
        if (j.contains("class_names"))
            spec.class_names = j.at("class_names").get<std::vector<std::string>>();
        if (j.contains("classes")) {
            for (const json& cj : j.at("classes")) {
                SyntheticClassSpec c;
                if (cj.contains("dolp")) c.dolp = cj.at("dolp").get<double>();
                if (cj.contains("aolp")) c.aolp = cj.at("aolp").get<double>();
                if (cj.contains("color")) c.color = cj.at("color").get<std::array<double, 3>>();
                spec.classes.push_back(c);
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(where + ": bad value: " + std::string(e.what()));
    }
    return spec;
}

} // namespace sharecmp

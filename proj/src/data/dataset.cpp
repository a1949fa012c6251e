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

#include "sharecmp/data/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "sharecmp/core/error.hpp"
#include "sharecmp/image/png_io.hpp"

namespace fs = std::filesystem;

namespace sharecmp {

namespace {

const char* kAngleDirs[4] = {"000", "045", "090", "135"};

std::string image_path(const DatasetIndex& index, const char* angle, const std::string& id) {
    return (fs::path(index.root) / index.split / "images" / angle / (id + ".png")).string();
}

std::string label_path(const DatasetIndex& index, const std::string& id) {
    return (fs::path(index.root) / index.split / "labels" / (id + ".png")).string();
}

} // namespace

DatasetIndex load_index(const std::string& root, const std::string& split) {
    const fs::path manifest = fs::path(root) / "manifest.json";
    std::ifstream in(manifest);
    if (!in) throw DatasetError("missing manifest: " + manifest.string());

    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError("malformed manifest " + manifest.string() + ": " + e.what());
    }

    DatasetIndex index;
    index.root = root;
    index.split = split;
    try {
        index.num_classes = doc.at("num_classes").get<int>();
        index.class_names = doc.at("class_names").get<std::vector<std::string>>();
        if (!doc.at("splits").contains(split))
            throw DatasetError("manifest has no split named '" + split + "'");
        index.ids = doc.at("splits").at(split).get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError("manifest " + manifest.string() + " missing fields: " + e.what());
    }
    if (index.num_classes < 1) throw DatasetError("manifest num_classes must be >= 1");
    if (static_cast<int>(index.class_names.size()) != index.num_classes)
        throw DatasetError("manifest class_names length must equal num_classes");

    for (const std::string& id : index.ids) {
        for (const char* angle : kAngleDirs) {
            const std::string p = image_path(index, angle, id);
            if (!fs::exists(p)) throw DatasetError("indexed file missing: " + p);
        }
        const std::string lp = label_path(index, id);
        if (!fs::exists(lp)) throw DatasetError("indexed file missing: " + lp);
    }
    return index;
}

void derive_from_polarized(Sample& sample) {
    check_input(sample.has_polarized, "sample has no polarized images to derive from");
    StokesMap s = compute_stokes(sample.polarized);
    sample.rgb = s.s0;
    StokesMap lum = collapse_luminance(s);
    sample.aolp_target = compute_representation(lum, RepresentationKind::AoLP).values;
    sample.dolp_target = compute_representation(lum, RepresentationKind::DoLP).values;
}

Sample load_sample(const DatasetIndex& index, const std::string& id) {
    if (std::find(index.ids.begin(), index.ids.end(), id) == index.ids.end())
        throw DatasetError("id '" + id + "' not in index of split '" + index.split + "'");

    Sample sample;
    sample.has_polarized = true;
    Tensor* slots[4] = {&sample.polarized.i0, &sample.polarized.i45, &sample.polarized.i90,
                        &sample.polarized.i135};
    for (int a = 0; a < 4; ++a) {
        const std::string path = image_path(index, kAngleDirs[a], id);
        if (!fs::exists(path)) throw DatasetError("missing file: " + path);
        *slots[a] = image_to_chw(read_png(path));
    }
    validate(sample.polarized);

    sample.mask = read_label_png(label_path(index, id));
    check_input(sample.mask.h == sample.polarized.height() &&
                    sample.mask.w == sample.polarized.width(),
                "mask dims differ from image dims for id " + id);
    for (std::uint8_t v : sample.mask.v)
        check_input(v == kIgnoreLabel || v < index.num_classes,
                    "mask of id " + id + " holds class id >= num_classes");

    derive_from_polarized(sample);
    return sample;
}

} // namespace sharecmp

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

#include "sharecmp/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "sharecmp/core/error.hpp"
#include "sharecmp/core/random.hpp"
#include "sharecmp/image/png_io.hpp"

namespace fs = std::filesystem;

namespace sharecmp {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Scene {
    LabelMap mask;
    PolarizedImageSet images;
};

Scene render_scene(const SyntheticSceneSpec& spec, Rng& rng) {
    const int h = spec.height, w = spec.width;
    const int cls = static_cast<int>(spec.classes.size());
    const int snap = std::max(1, spec.grid_snap);

    Scene scene;
    scene.mask = LabelMap(h, w, 0);
    if (cls > 1) {
        std::uniform_int_distribution<int> pick_class(1, cls - 1);
        const int max_side_y = std::max(snap, h / 2);
        const int max_side_x = std::max(snap, w / 2);
        std::uniform_int_distribution<int> side_y(snap, max_side_y);
        std::uniform_int_distribution<int> side_x(snap, max_side_x);
        for (int shape = 0; shape < spec.shapes_per_image; ++shape) {
            const int c = pick_class(rng);
            int sh = side_y(rng) / snap * snap;
            int sw = side_x(rng) / snap * snap;
            sh = std::max(snap, sh);
            sw = std::max(snap, sw);
            std::uniform_int_distribution<int> top(0, std::max(0, h - sh));
            std::uniform_int_distribution<int> left(0, std::max(0, w - sw));
            const int y0 = top(rng) / snap * snap;
            const int x0 = left(rng) / snap * snap;
            for (int y = y0; y < std::min(h, y0 + sh); ++y)
                for (int x = x0; x < std::min(w, x0 + sw); ++x) scene.mask.at(y, x) =
                    static_cast<std::uint8_t>(c);
        }
    }

    Tensor unpol({3, h, w}), pol({3, h, w}), theta({3, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const SyntheticClassSpec& c = spec.classes[scene.mask.at(y, x)];
            for (int k = 0; k < 3; ++k) {
                const double total = c.color[static_cast<std::size_t>(k)];
                unpol.at3(k, y, x) = (1.0 - c.dolp) * total;
                pol.at3(k, y, x) = c.dolp * total;
                theta.at3(k, y, x) = c.aolp;
            }
        }
    scene.images = synthesize_polarized(unpol, pol, theta);
    return scene;
}

void validate_spec(const SyntheticSceneSpec& spec) {
    check_input(spec.height >= 8 && spec.width >= 8, "scene size must be at least 8x8");
    check_input(!spec.classes.empty() && spec.classes.size() <= 254,
                "class count must be in [1, 254]");
    check_input(spec.shapes_per_image >= 0, "shapes_per_image must be >= 0");
    for (const auto& c : spec.classes) {
        check_input(c.dolp >= 0.0 && c.dolp <= 1.0, "class dolp must be in [0,1]");
        check_input(c.aolp > -kPi / 2.0 && c.aolp <= kPi / 2.0,
                    "class aolp must be in (-pi/2, pi/2]");
        for (double v : c.color)
            check_input(v >= 0.0 && v <= 1.0, "class color channels must be in [0,1]");
    }
}

} // namespace

SyntheticSceneSpec SyntheticSceneSpec::standard(int num_classes, int height, int width,
                                                std::uint64_t seed) {
    check_input(num_classes >= 1 && num_classes <= 8, "standard spec supports 1..8 classes");
    // Bright palette; luminance of every entry is >= 0.45.
    const std::array<std::array<double, 3>, 8> palette = {{{0.85, 0.85, 0.85},
                                                           {0.95, 0.35, 0.25},
                                                           {0.25, 0.55, 0.95},
                                                           {0.30, 0.85, 0.35},
                                                           {0.90, 0.80, 0.25},
                                                           {0.80, 0.35, 0.85},
                                                           {0.30, 0.85, 0.85},
                                                           {0.95, 0.60, 0.40}}};
    SyntheticSceneSpec spec;
    spec.height = height;
    spec.width = width;
    spec.seed = seed;
    for (int c = 0; c < num_classes; ++c) {
        SyntheticClassSpec cls;
        cls.color = palette[static_cast<std::size_t>(c)];
        cls.dolp = 0.5 + 0.05 * c;
        // Spread angles over (-pi/2, pi/2), avoiding the +-pi/2 wrap point.
        cls.aolp = -kPi / 2.0 + kPi * (c + 1.0) / (num_classes + 1.0);
        spec.classes.push_back(cls);
        spec.class_names.push_back("class" + std::to_string(c));
    }
    return spec;
}

DatasetIndex generate_synthetic_dataset(const SyntheticSceneSpec& spec, int n_train, int n_val,
                                        const std::string& root) {
    validate_spec(spec);
    check_input(n_train >= 1, "need at least one training sample");
    check_input(n_val >= 0, "n_val must be >= 0");

    std::error_code ec;
    fs::create_directories(root, ec);
    if (!fs::is_directory(root)) throw IoError("cannot create dataset root: " + root);

    nlohmann::json manifest;
    manifest["num_classes"] = static_cast<int>(spec.classes.size());
    std::vector<std::string> names = spec.class_names;
    for (std::size_t c = names.size(); c < spec.classes.size(); ++c)
        names.push_back("class" + std::to_string(c));
    names.resize(spec.classes.size());
    manifest["class_names"] = names;

    Rng rng(spec.seed);
    int next_id = 0;
    auto write_split = [&](const std::string& split, int count) {
        const fs::path base = fs::path(root) / split;
        const char* angles[4] = {"000", "045", "090", "135"};
        for (const char* a : angles) fs::create_directories(base / "images" / a);
        fs::create_directories(base / "labels");

        std::vector<std::string> ids;
        for (int i = 0; i < count; ++i) {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%06d", next_id++);
            const std::string id(buf);
            Scene scene = render_scene(spec, rng);
            const Tensor* maps[4] = {&scene.images.i0, &scene.images.i45, &scene.images.i90,
                                     &scene.images.i135};
            for (int a = 0; a < 4; ++a) {
                const fs::path out = base / "images" / angles[a] / (id + ".png");
                write_png(out.string(), chw_to_image(*maps[a]));
            }
            write_label_png((base / "labels" / (id + ".png")).string(), scene.mask);
            ids.push_back(id);
        }
        manifest["splits"][split] = ids;
    };
    write_split("train", n_train);
    write_split("val", n_val);

    const fs::path manifest_path = fs::path(root) / "manifest.json";
    std::ofstream out(manifest_path);
    if (!out) throw IoError("cannot write manifest: " + manifest_path.string());
    out << manifest.dump(2) << "\n";
    out.close();

    return load_index(root, "train");
}

} // namespace sharecmp

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

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sharecmp/config/run_config.hpp"
#include "sharecmp/core/error.hpp"
#include "sharecmp/data/synthetic.hpp"
#include "sharecmp/image/png_io.hpp"
#include "sharecmp/polar/polarization.hpp"
#include "sharecmp/train/checkpoint.hpp"
#include "sharecmp/train/metrics.hpp"
#include "sharecmp/train/params_report.hpp"
#include "sharecmp/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace sharecmp;

namespace {

/// Relative output paths resolve under $SHARECMP_OUTPUT_ROOT when it is set.
std::string resolve_output_dir(const std::string& dir) {
    const char* root = std::getenv("SHARECMP_OUTPUT_ROOT");
    fs::path p(dir);
    if (root != nullptr && *root != '\0' && p.is_relative()) return (fs::path(root) / p).string();
    return dir;
}

void make_dirs(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

std::vector<std::string> collect_overrides(const CLI::App* cmd,
                                           const std::vector<std::string>& set_values) {
    std::vector<std::string> overrides = set_values;
    for (const std::string& extra : cmd->remaining()) {
        std::string s = extra;
        if (s.rfind("--", 0) == 0) s = s.substr(2);
        if (s.find('=') == std::string::npos)
            throw ConfigError("unrecognized argument (overrides look like --path.key=value): " +
                              extra);
        overrides.push_back(s);
    }
    return overrides;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& out_flag) {
    RunConfig cfg = load_run_config(config_path, overrides);
    if (!out_flag.empty()) cfg.output_dir = out_flag;
    cfg.validate();

    DatasetIndex train_index = load_index(cfg.data.root, cfg.data.train_split);
    if (cfg.model.num_classes == 0) cfg.model.num_classes = train_index.num_classes;
    if (cfg.model.num_classes != train_index.num_classes) {
        std::ostringstream msg;
        msg << "model.num_classes = " << cfg.model.num_classes << " but the dataset has "
            << train_index.num_classes << " classes";
        throw ConfigError(msg.str());
    }
    cfg.model.validate();
    DatasetIndex eval_index = cfg.data.val_split.empty()
                                  ? train_index
                                  : load_index(cfg.data.root, cfg.data.val_split);

    const std::string out = resolve_output_dir(cfg.output_dir);
    make_dirs(out);
    std::ofstream((fs::path(out) / "config.json").string())
        << run_config_to_json(cfg).dump(2) << '\n';

    Model model(cfg.model);
    model.init(cfg.train.seed);
    TrainOptions opt;
    opt.metrics_path = (fs::path(out) / "metrics.jsonl").string();
    opt.checkpoint_path = (fs::path(out) / "last.ckpt").string();
    TrainSummary sum = train_model(model, train_index, &eval_index, cfg.train, cfg.augment, opt);

    std::cout << "steps: " << sum.steps.size() << '\n';
    if (!sum.steps.empty())
        std::cout << "final total loss: " << sum.steps.back().total_loss << '\n';
    if (sum.final_miou >= 0.0) std::cout << "final mIoU: " << sum.final_miou << '\n';
    std::cout << "checkpoint: " << opt.checkpoint_path << '\n';
    std::cout << "metrics: " << opt.metrics_path << '\n';
    return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& root, const std::string& split,
             const std::string& report_path) {
    std::unique_ptr<Model> model = load_checkpoint(ckpt);
    DatasetIndex index = load_index(root, split);
    if (model->cfg.num_classes != index.num_classes) {
        std::ostringstream msg;
        msg << "checkpoint expects " << model->cfg.num_classes << " classes, dataset has "
            << index.num_classes;
        throw CheckpointError(msg.str());
    }
    EvalResult res = evaluate(*model, index);

    std::cout << "class               IoU\n";
    for (int c = 0; c < index.num_classes; ++c) {
        const std::string name = c < static_cast<int>(index.class_names.size())
                                     ? index.class_names[static_cast<std::size_t>(c)]
                                     : "class_" + std::to_string(c);
        const double iou = res.per_class_iou[static_cast<std::size_t>(c)];
        std::cout << name;
        for (std::size_t i = name.size(); i < 20; ++i) std::cout << ' ';
        if (std::isnan(iou))
            std::cout << "n/a\n";
        else
            std::cout << iou << '\n';
    }
    std::cout << "mIoU: " << res.miou << '\n';

    if (!report_path.empty()) {
        nlohmann::json per_class = nlohmann::json::array();
        for (int c = 0; c < index.num_classes; ++c) {
            const double iou = res.per_class_iou[static_cast<std::size_t>(c)];
            per_class.push_back(
                {{"class", c < static_cast<int>(index.class_names.size())
                               ? index.class_names[static_cast<std::size_t>(c)]
                               : "class_" + std::to_string(c)},
                 {"iou", std::isnan(iou) ? nlohmann::json() : nlohmann::json(iou)}});
        }
        nlohmann::json confusion = nlohmann::json::array();
        for (int t = 0; t < index.num_classes; ++t) {
            nlohmann::json row = nlohmann::json::array();
            for (int p = 0; p < index.num_classes; ++p) row.push_back(res.confusion.at(t, p));
            confusion.push_back(row);
        }
        std::ofstream f(report_path);
        if (!f) throw IoError("cannot write report: " + report_path);
        f << nlohmann::json{{"miou", res.miou},
                            {"per_class", per_class},
                            {"confusion", confusion}}
                 .dump(2)
          << '\n';
    }
    return 0;
}

int cmd_stokes_export(const std::string& root, const std::string& split, const std::string& out,
                      const std::string& kinds_csv, const std::string& ckpt) {
    std::vector<RepresentationKind> kinds;
    std::stringstream ss(kinds_csv);
    std::string name;
    while (std::getline(ss, name, ',')) {
        try {
            kinds.push_back(representation_from_string(name));
        } catch (const InvalidInputError& e) {
            throw ConfigError(e.what());
        }
    }
    if (kinds.empty()) throw ConfigError("no representation kinds selected");

    DatasetIndex index = load_index(root, split);
    std::unique_ptr<Model> model;
    if (!ckpt.empty()) model = load_checkpoint(ckpt);
    make_dirs(out);

    for (const std::string& id : index.ids) {
        Sample s = load_sample(index, id);
        const StokesMap st = collapse_luminance(compute_stokes(s.polarized));
        for (RepresentationKind kind : kinds) {
            const RepresentationMap r = compute_representation(st, kind);
            export_representation(r, (fs::path(out) / (id + "_" + to_string(kind) + ".png"))
                                         .string());
        }
        if (model != nullptr) {
            Graph g;
            Model::Forward f = model->forward(g, s, false, nullptr);
            Tensor ip = g.val(f.i_p);
            // Min-max normalization: the generated image has no declared range.
            double lo = ip[0], hi = ip[0];
            for (std::size_t i = 0; i < ip.numel(); ++i) {
                lo = std::min(lo, ip[i]);
                hi = std::max(hi, ip[i]);
            }
            const double span = hi > lo ? hi - lo : 1.0;
            for (std::size_t i = 0; i < ip.numel(); ++i) ip[i] = (ip[i] - lo) / span;
            write_png((fs::path(out) / (id + "_ip.png")).string(), chw_to_image(ip));
        }
    }
    std::cout << "exported " << index.ids.size() << " samples to " << out << '\n';
    return 0;
}

int cmd_params(const std::string& config_path, const std::vector<std::string>& overrides,
               bool as_json) {
    RunConfig cfg = load_run_config(config_path, overrides);
    if (cfg.model.num_classes == 0)
        throw ConfigError("params: model.num_classes must be set explicitly");
    const ParamReport r = count_params(cfg.model);
    if (as_json) {
        std::cout << nlohmann::json{{"pga", r.pga},
                                    {"encoder", r.encoder},
                                    {"cpaahead", r.cpaahead},
                                    {"decoder", r.decoder},
                                    {"total", r.total},
                                    {"encoder_dual", r.encoder_dual},
                                    {"total_dual", r.total_dual},
                                    {"encoder_ratio", r.encoder_ratio},
                                    {"total_reduction", r.total_reduction},
                                    {"gflops_512", r.gflops_512}}
                         .dump(2)
                  << '\n';
        return 0;
    }
    std::cout << "pga:             " << r.pga << '\n'
              << "encoder:         " << r.encoder << '\n'
              << "cpaahead:        " << r.cpaahead << '\n'
              << "decoder:         " << r.decoder << '\n'
              << "total:           " << r.total << '\n'
              << "encoder (dual):  " << r.encoder_dual << '\n'
              << "total (dual):    " << r.total_dual << '\n'
              << "encoder ratio:   " << r.encoder_ratio << '\n'
              << "total reduction: " << r.total_reduction << '\n'
              << "~GFLOPs @512:    " << r.gflops_512 << " (analytic estimate)" << '\n';
    return 0;
}

int cmd_gen_synth(const std::string& out, const std::string& spec_path, int classes, int n_train,
                  int n_val, int size, std::uint64_t seed) {
    SyntheticSceneSpec spec;
    if (!spec_path.empty()) {
        std::ifstream f(spec_path);
        if (!f) throw ConfigError("cannot open scene spec: " + spec_path);
        nlohmann::json j;
        try {
            f >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("scene spec is not valid JSON: " + std::string(e.what()));
        }
        spec = scene_spec_from_json(j);
    } else {
        spec = SyntheticSceneSpec::standard(classes, size, size, seed);
    }
    DatasetIndex index = generate_synthetic_dataset(spec, n_train, n_val, out);
    std::cout << "root: " << index.root << '\n'
              << "classes: " << index.num_classes << '\n'
              << "train samples: " << index.ids.size() << '\n'
              << "val samples: " << n_val << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"RGB-polarization semantic segmentation toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_flag, ckpt, root, split = "val", report_path;
    std::string export_out, kinds = "aolp,dolp,saolp,caolp", spec_path, synth_out;
    std::vector<std::string> set_values;
    bool as_json = false;
    int classes = 3, n_train = 8, n_val = 2, size = 64;
    std::uint64_t seed = 0;

    CLI::App* train = app.add_subcommand("train", "Train a model from a JSON config");
    train->add_option("--config", config_path, "run config JSON")->required();
    train->add_option("--out", out_flag, "output directory (overrides config)");
    train->add_option("--set", set_values,
                      "config override path.to.key=value (repeatable); bare "
                      "--path.to.key=value arguments work too");
    train->allow_extras();

    CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
    eval->add_option("--checkpoint", ckpt, "checkpoint file")->required();
    eval->add_option("--data", root, "dataset root")->required();
    eval->add_option("--split", split, "dataset split (default val)");
    eval->add_option("--report", report_path, "write a JSON report here");

    CLI::App* stokes = app.add_subcommand(
        "stokes-export", "Export AoLP/DoLP/SAoLP/CAoLP maps (and I_P with a checkpoint)");
    stokes->add_option("--data", root, "dataset root")->required();
    stokes->add_option("--split", split, "dataset split (default val)");
    stokes->add_option("--out", export_out, "output directory")->required();
    stokes->add_option("--kinds", kinds, "comma list of aolp,dolp,saolp,caolp");
    stokes->add_option("--checkpoint", ckpt, "also export the generated image I_P");

    CLI::App* params = app.add_subcommand("params", "Print the parameter report for a config");
    params->add_option("--config", config_path, "run config JSON")->required();
    params->add_flag("--json", as_json, "machine-readable output");
    params->add_option("--set", set_values, "config override path.to.key=value (repeatable)");
    params->allow_extras();

    CLI::App* gen = app.add_subcommand("gen-synth", "Generate a synthetic dataset");
    gen->add_option("--out", synth_out, "dataset root to create")->required();
    gen->add_option("--spec", spec_path, "scene spec JSON (overrides the scalar flags)");
    gen->add_option("--classes", classes, "class count (default 3)");
    gen->add_option("--n-train", n_train, "training samples (default 8)");
    gen->add_option("--n-val", n_val, "validation samples (default 2)");
    gen->add_option("--size", size, "square image size (default 64)");
    gen->add_option("--seed", seed, "generation seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (train->parsed())
            return cmd_train(config_path, collect_overrides(train, set_values), out_flag);
        if (eval->parsed()) return cmd_eval(ckpt, root, split, report_path);
        if (stokes->parsed()) return cmd_stokes_export(root, split, export_out, kinds, ckpt);
        if (params->parsed())
            return cmd_params(config_path, collect_overrides(params, set_values), as_json);
        if (gen->parsed())
            return cmd_gen_synth(synth_out, spec_path, classes, n_train, n_val, size, seed);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << '\n';
        return 4;
    } catch (const DatasetError& e) {
        std::cerr << "dataset error: " << e.what() << '\n';
        return 3;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return 3;
    } catch (const InvalidInputError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

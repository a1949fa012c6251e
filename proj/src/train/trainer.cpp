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

#include "sharecmp/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "sharecmp/core/error.hpp"
#include "sharecmp/core/graph.hpp"
#include "sharecmp/core/ops.hpp"
#include "sharecmp/train/checkpoint.hpp"

namespace sharecmp {

StepLosses train_step(Model& model, const std::vector<Sample>& batch, AdamW& opt, double lr,
                      const TrainConfig& cfg, Rng& rng) {
    check_input(!batch.empty(), "train_step: empty batch");
    model.params.zero_grads();

    StepLosses out;
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    for (const Sample& s : batch) {
        Graph g;
        Model::Forward f = model.forward(g, s, true, &rng);
        Model::Losses l = model.losses(g, f, s);
        g.backward(ops::scale_by(g, l.total, g.input(Tensor({1}, {inv_n}))));
        out.seg += g.val(l.seg)[0] * inv_n;
        out.cpa += g.val(l.cpa)[0] * inv_n;
        out.total += g.val(l.total)[0] * inv_n;
    }
    if (!std::isfinite(out.total) || !std::isfinite(out.seg) || !std::isfinite(out.cpa)) {
        std::ostringstream msg;
        msg << "non-finite loss: seg=" << out.seg << " cpa=" << out.cpa
            << " total=" << out.total;
        throw TrainingError(msg.str());
    }
    opt.step(model.params, lr, cfg.weight_decay);
    return out;
}

namespace {

class MetricsLog {
  public:
    explicit MetricsLog(const std::string& path) {
        if (path.empty()) return;
        f_.open(path, std::ios::trunc);
        if (!f_) throw IoError("cannot open metrics log: " + path);
    }
    void record(const StepRecord& r, const double* miou) {
        if (!f_.is_open()) return;
        nlohmann::json j{{"step", r.step},
                         {"lr", r.lr},
                         {"seg_loss", r.seg_loss},
                         {"cpa_loss", r.cpa_loss},
                         {"total_loss", r.total_loss}};
        if (miou != nullptr) j["miou"] = *miou;
        f_ << j.dump() << '\n';
    }

  private:
    std::ofstream f_;
};

} // namespace

TrainSummary train_model(Model& model, const DatasetIndex& train_index,
                         const DatasetIndex* eval_index, const TrainConfig& cfg,
                         const AugmentConfig& aug, const TrainOptions& opt) {
    cfg.validate();
    if (train_index.ids.empty())
        throw DatasetError("train: split '" + train_index.split + "' is empty");

    const long n = static_cast<long>(train_index.ids.size());
    const long steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
    const long total_steps =
        opt.max_steps > 0 ? opt.max_steps : steps_per_epoch * cfg.epochs;

    Rng rng(cfg.seed);
    AdamW optimizer;
    MetricsLog log(opt.metrics_path);
    std::unordered_map<std::string, Sample> cache;
    auto sample_of = [&](const std::string& id) -> const Sample& {
        auto it = cache.find(id);
        if (it == cache.end()) it = cache.emplace(id, load_sample(train_index, id)).first;
        return it->second;
    };

    TrainSummary summary;
    summary.steps.reserve(static_cast<std::size_t>(total_steps));
    std::vector<std::string> order = train_index.ids;
    long step = 0;
    while (step < total_steps) {
        std::shuffle(order.begin(), order.end(), rng);
        for (long b = 0; b < steps_per_epoch && step < total_steps; ++b) {
            std::vector<Sample> batch;
            const long lo = b * cfg.batch_size, hi = std::min<long>(lo + cfg.batch_size, n);
            for (long i = lo; i < hi; ++i) {
                const Sample& s = sample_of(order[static_cast<std::size_t>(i)]);
                batch.push_back(aug.enabled ? augment(s, aug, rng) : s);
            }
            const double lr = poly_lr(step, total_steps, cfg);
            const StepLosses l = train_step(model, batch, optimizer, lr, cfg, rng);
            StepRecord rec{step, lr, l.seg, l.cpa, l.total};
            summary.steps.push_back(rec);
            const bool epoch_end = b == steps_per_epoch - 1 || step == total_steps - 1;
            if (opt.eval_each_epoch && eval_index != nullptr && epoch_end) {
                const double miou = evaluate(model, *eval_index).miou;
                log.record(rec, &miou);
            } else {
                log.record(rec, nullptr);
            }
            ++step;
        }
    }

    if (opt.eval_at_end && eval_index != nullptr) {
        EvalResult res = evaluate(model, *eval_index);
        summary.final_confusion = res.confusion;
        summary.final_miou = res.miou;
    }
    if (!opt.checkpoint_path.empty()) save_checkpoint(opt.checkpoint_path, model);
    return summary;
}

} // namespace sharecmp

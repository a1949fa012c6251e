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

#include "sharecmp/data/augment.hpp"
#include "sharecmp/train/metrics.hpp"
#include "sharecmp/train/optimizer.hpp"
#include "sharecmp/train/schedule.hpp"

namespace sharecmp {

/// Batch-mean loss components of one optimizer update.
struct StepLosses {
    double seg = 0.0, cpa = 0.0, total = 0.0;
};

/// One forward/backward over the batch (gradients averaged across samples)
/// followed by a single optimizer update at the given rate. Throws
/// TrainingError when any loss component goes non-finite, quoting all three.
StepLosses train_step(Model& model, const std::vector<Sample>& batch, AdamW& opt, double lr,
                      const TrainConfig& cfg, Rng& rng);

struct StepRecord {
    long step = 0;
    double lr = 0.0, seg_loss = 0.0, cpa_loss = 0.0, total_loss = 0.0;
};

struct TrainSummary {
    std::vector<StepRecord> steps;
    ConfusionMatrix final_confusion;
    double final_miou = -1.0; // -1 when no evaluation ran
};

struct TrainOptions {
    std::string metrics_path;    // JSON-lines log; empty disables it
    std::string checkpoint_path; // saved after the last step; empty disables it
    bool eval_each_epoch = false;
    bool eval_at_end = true;
    long max_steps = 0; // 0: epochs * ceil(n/batch); otherwise a hard horizon
};

/// Runs the loop: per-epoch shuffle, augmentation draw per sample, poly LR,
/// one metrics record per step (epoch-end records carry a "miou" field when
/// eval_each_epoch is set). Samples are cached in memory after first load.
/// eval_index may equal the training index (train-split fit) or be null
/// (disables evaluation).
TrainSummary train_model(Model& model, const DatasetIndex& train_index,
                         const DatasetIndex* eval_index, const TrainConfig& cfg,
                         const AugmentConfig& aug, const TrainOptions& opt = {});

} // namespace sharecmp

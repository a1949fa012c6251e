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

#include "sharecmp/train/schedule.hpp"

#include <cmath>

#include "sharecmp/core/error.hpp"

namespace sharecmp {

void TrainConfig::validate() const {
    if (lr0 <= 0.0) throw ConfigError("train: lr0 must be > 0");
    if (power <= 0.0) throw ConfigError("train: power must be > 0");
    if (warmup_epochs < 0) throw ConfigError("train: warmup_epochs must be >= 0");
    if (warmup_factor < 0.0 || warmup_factor > 1.0)
        throw ConfigError("train: warmup_factor must be in [0, 1]");
    if (weight_decay < 0.0) throw ConfigError("train: weight_decay must be >= 0");
    if (batch_size <= 0) throw ConfigError("train: batch_size must be > 0");
    if (epochs <= 0) throw ConfigError("train: epochs must be > 0");
    if (epochs < warmup_epochs) throw ConfigError("train: epochs must be >= warmup_epochs");
}

double poly_lr(long step, long total_steps, const TrainConfig& cfg) {
    check_input(total_steps > 0, "poly_lr: total_steps must be > 0");
    check_input(step >= 0 && step <= total_steps, "poly_lr: step outside [0, total_steps]");
    const long warmup = total_steps * cfg.warmup_epochs / cfg.epochs;
    if (step < warmup) {
        if (cfg.warmup_constant) return cfg.warmup_factor * cfg.lr0;
        const double t = static_cast<double>(step) / static_cast<double>(warmup);
        return cfg.lr0 * (cfg.warmup_factor + (1.0 - cfg.warmup_factor) * t);
    }
    const long span = total_steps - warmup;
    if (span == 0) return 0.0; // the whole run is warmup; the end decays to 0
    const double frac = static_cast<double>(step - warmup) / static_cast<double>(span);
    return cfg.lr0 * std::pow(1.0 - frac, cfg.power);
}

} // namespace sharecmp

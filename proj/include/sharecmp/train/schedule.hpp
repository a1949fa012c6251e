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

#include <cstdint>

namespace sharecmp {

/// Optimization settings: poly learning-rate decay with a warmup prefix and
/// decoupled weight decay.
struct TrainConfig {
    double lr0 = 6e-5;
    double power = 1.0;
    int warmup_epochs = 5;
    double warmup_factor = 1e-6;
    /// Warmup shape: linear ramp from warmup_factor*lr0 to lr0 (default), or
    /// a constant floor at warmup_factor*lr0.
    bool warmup_constant = false;
    double weight_decay = 0.01;
    int batch_size = 4;
    int epochs = 20;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Learning rate at `step` of `total_steps`. The warmup prefix covers the
/// first warmup_epochs/epochs fraction of the run; afterwards the rate decays
/// as lr0 * (1 - s/S)^power over the remaining steps. The two phases meet at
/// lr0, so the schedule is continuous.
double poly_lr(long step, long total_steps, const TrainConfig& cfg);

} // namespace sharecmp

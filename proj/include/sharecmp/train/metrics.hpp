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
#include <vector>

#include "sharecmp/core/label_map.hpp"
#include "sharecmp/data/dataset.hpp"
#include "sharecmp/model/model.hpp"

namespace sharecmp {

/// Cls x Cls pixel counts, rows indexed by ground truth, columns by
/// prediction. Ignore-labeled truth pixels are skipped, so total() equals the
/// number of scored pixels.
struct ConfusionMatrix {
    int num_classes = 0;
    std::vector<std::int64_t> counts;

    ConfusionMatrix() = default;
    explicit ConfusionMatrix(int num_classes);

    std::int64_t& at(int truth, int pred);
    std::int64_t at(int truth, int pred) const;
    void add(const LabelMap& truth, const LabelMap& pred, std::uint8_t ignore = kIgnoreLabel);
    std::int64_t total() const;

    /// IoU_c = TP / (TP + FP + FN); classes absent from both prediction and
    /// truth get NaN and are excluded from the mean.
    std::vector<double> per_class_iou() const;
    double miou() const;

    bool operator==(const ConfusionMatrix& o) const;
    bool operator!=(const ConfusionMatrix& o) const { return !(*this == o); }
};

struct EvalResult {
    ConfusionMatrix confusion;
    std::vector<double> per_class_iou;
    double miou = 0.0;
};

/// Deterministic full-split evaluation: per-sample argmax predictions
/// accumulated into one confusion matrix. Throws DatasetError on an empty
/// split.
EvalResult evaluate(const Model& model, const DatasetIndex& index);

} // namespace sharecmp

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

#include "sharecmp/train/metrics.hpp"

#include <limits>

#include "sharecmp/core/error.hpp"
#include "sharecmp/core/graph.hpp"
#include "sharecmp/model/heads.hpp"

namespace sharecmp {

ConfusionMatrix::ConfusionMatrix(int num_classes_) : num_classes(num_classes_) {
    check_input(num_classes_ > 0, "confusion matrix needs at least one class");
    counts.assign(static_cast<std::size_t>(num_classes_) * num_classes_, 0);
}

std::int64_t& ConfusionMatrix::at(int truth, int pred) {
    return counts[static_cast<std::size_t>(truth) * num_classes + pred];
}

std::int64_t ConfusionMatrix::at(int truth, int pred) const {
    return counts[static_cast<std::size_t>(truth) * num_classes + pred];
}

void ConfusionMatrix::add(const LabelMap& truth, const LabelMap& pred, std::uint8_t ignore) {
    check_input(truth.h == pred.h && truth.w == pred.w,
                "confusion add: truth and prediction sizes differ");
    for (std::size_t i = 0; i < truth.v.size(); ++i) {
        const std::uint8_t t = truth.v[i];
        if (t == ignore) continue;
        const std::uint8_t p = pred.v[i];
        check_input(t < num_classes, "confusion add: truth label out of range");
        check_input(p < num_classes, "confusion add: predicted label out of range");
        ++at(t, p);
    }
}

std::int64_t ConfusionMatrix::total() const {
    std::int64_t n = 0;
    for (std::int64_t c : counts) n += c;
    return n;
}

std::vector<double> ConfusionMatrix::per_class_iou() const {
    std::vector<double> iou(static_cast<std::size_t>(num_classes));
    for (int c = 0; c < num_classes; ++c) {
        const std::int64_t tp = at(c, c);
        std::int64_t fp = 0, fn = 0;
        for (int o = 0; o < num_classes; ++o) {
            if (o == c) continue;
            fp += at(o, c);
            fn += at(c, o);
        }
        const std::int64_t denom = tp + fp + fn;
        iou[static_cast<std::size_t>(c)] =
            denom == 0 ? std::numeric_limits<double>::quiet_NaN()
                       : static_cast<double>(tp) / static_cast<double>(denom);
    }
    return iou;
}

double ConfusionMatrix::miou() const {
    double sum = 0.0;
    int present = 0;
    for (double v : per_class_iou()) {
        if (std::isnan(v)) continue;
        sum += v;
        ++present;
    }
    return present == 0 ? 0.0 : sum / present;
}

bool ConfusionMatrix::operator==(const ConfusionMatrix& o) const {
    return num_classes == o.num_classes && counts == o.counts;
}

EvalResult evaluate(const Model& model, const DatasetIndex& index) {
    if (index.ids.empty()) throw DatasetError("evaluate: split '" + index.split + "' is empty");
    EvalResult res;
    res.confusion = ConfusionMatrix(model.cfg.num_classes);
    for (const std::string& id : index.ids) {
        Sample s = load_sample(index, id);
        Graph g;
        Model::Forward f = model.forward(g, s, false, nullptr);
        LabelMap pred = logits_to_labels(g.val(f.logits));
        res.confusion.add(s.mask, pred);
    }
    res.per_class_iou = res.confusion.per_class_iou();
    res.miou = res.confusion.miou();
    return res;
}

} // namespace sharecmp

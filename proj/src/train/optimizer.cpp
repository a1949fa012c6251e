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

#include "sharecmp/train/optimizer.hpp"

#include <cmath>

#include "sharecmp/core/error.hpp"

namespace sharecmp {

void AdamW::step(ParamStore& ps, double lr, double weight_decay) {
    const std::vector<Parameter*>& params = ps.all();
    if (m_.empty()) {
        m_.reserve(params.size());
        v_.reserve(params.size());
        for (Parameter* p : params) {
            m_.emplace_back(p->shape);
            v_.emplace_back(p->shape);
        }
    }
    if (m_.size() != params.size())
        throw TrainingError("optimizer state does not match the parameter set");

    ++t_;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Parameter& p = *params[k];
        if (!p.materialized()) throw TrainingError("parameter not materialized: " + p.name);
        Tensor &m = m_[k], &v = v_[k];
        const bool has_grad = p.grad.numel() == p.value.numel();
        for (std::size_t i = 0; i < p.value.numel(); ++i) {
            const double g = has_grad ? p.grad[i] : 0.0;
            m[i] = beta1 * m[i] + (1.0 - beta1) * g;
            v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            p.value[i] -= lr * (m_hat / (std::sqrt(v_hat) + eps) + weight_decay * p.value[i]);
        }
    }
}

} // namespace sharecmp

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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sharecmp/core/graph.hpp"
#include "sharecmp/core/module.hpp"
#include "sharecmp/core/random.hpp"

namespace sharecmp::testutil {

/// Builds a fresh tape from the current parameter values and returns a scalar
/// loss node. Must be a pure function of the bound parameters.
using LossBuilder = std::function<Ref(Graph&)>;

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    int checked = 0;
};

inline double eval_loss(const LossBuilder& build) {
    Graph g;
    Ref loss = build(g);
    return g.val(loss)[0];
}

/// Central-difference check of every parameter in `store` against the
/// analytic gradients produced by one backward pass. For large tensors only
/// `samples_per_tensor` deterministic coordinates are probed
/// (samples_per_tensor <= 0 checks all of them). Relative error uses
/// max(|analytic|, |fd|) as denominator; pairs that are both below the zero
/// floor count as exact.
inline GradCheckResult grad_check(ParamStore& store, const LossBuilder& build,
                                  int samples_per_tensor = -1, std::uint64_t seed = 7) {
    store.zero_grads();
    {
        Graph g;
        Ref loss = build(g);
        g.backward(loss);
    }

    constexpr double kZeroFloor = 1e-7;
    GradCheckResult res;
    Rng rng(seed);
    for (Parameter* p : store.all()) {
        std::vector<std::size_t> idx;
        const std::size_t n = p->numel();
        if (samples_per_tensor <= 0 || n <= static_cast<std::size_t>(samples_per_tensor)) {
            idx.resize(n);
            for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, n - 1);
            for (int i = 0; i < samples_per_tensor; ++i) idx.push_back(pick(rng));
        }
        for (std::size_t i : idx) {
            const double saved = p->value[i];
            const double h = 1e-5 * std::max(1.0, std::abs(saved));
            p->value[i] = saved + h;
            const double fp = eval_loss(build);
            p->value[i] = saved - h;
            const double fm = eval_loss(build);
            p->value[i] = saved;
            const double fd = (fp - fm) / (2.0 * h);
            const double an = p->grad.numel() > 0 ? p->grad[i] : 0.0;
            const double denom = std::max(std::abs(an), std::abs(fd));
            double rel = 0.0;
            if (denom >= kZeroFloor) rel = std::abs(an - fd) / denom;
            if (rel > res.max_rel_err) {
                res.max_rel_err = rel;
                res.worst_param = p->name;
                res.worst_index = i;
            }
            ++res.checked;
        }
    }
    return res;
}

/// Fills a parameter or tensor with uniform values in [lo, hi].
inline void fill_uniform(Tensor& t, Rng& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = u(rng);
}

/// Uniform values bounded away from zero (both signs), for ops with a kink
/// at the origin.
inline void fill_uniform_away_from_zero(Tensor& t, Rng& rng, double lo = 0.2, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::uniform_int_distribution<int> sign(0, 1);
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = (sign(rng) ? 1.0 : -1.0) * u(rng);
}

inline Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    fill_uniform(t, rng, lo, hi);
    return t;
}

} // namespace sharecmp::testutil

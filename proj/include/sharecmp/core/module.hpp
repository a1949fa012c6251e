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

#include <deque>
#include <string>
#include <vector>

#include "sharecmp/core/random.hpp"
#include "sharecmp/core/tensor.hpp"

namespace sharecmp {

/// One named learnable tensor. Shapes are fixed at construction; values stay
/// unallocated until ParamStore::init_all (or a checkpoint load) fills them,
/// so a model can be built purely for structural parameter counting.
struct Parameter {
    enum class Init { TruncNormal, Zeros, Ones, Constant };

    std::string name;
    std::vector<int> shape;
    Init init = Init::TruncNormal;
    double init_arg = 0.02; // sigma for TruncNormal, value for Constant
    Tensor value;           // empty until materialized
    Tensor grad;            // empty until first backward

    std::size_t numel() const { return Tensor::shape_numel(shape); }
    bool materialized() const { return !value.empty(); }
    void zero_grad() {
        if (!grad.empty()) grad.fill(0.0);
    }
};

/// Owns all parameters of a model in construction order (stable addresses,
/// deterministic iteration for init / optimizer / checkpoint / counting).
class ParamStore {
public:
    Parameter& create(std::string name, std::vector<int> shape,
                      Parameter::Init init = Parameter::Init::TruncNormal,
                      double init_arg = 0.02);

    std::vector<Parameter*>& all() { return ordered_; }
    const std::vector<Parameter*>& all() const { return ordered_; }
    Parameter* find(const std::string& name);

    /// Fills every parameter from its init spec, in creation order.
    void init_all(Rng& rng);
    void zero_grads();
    std::size_t total_params() const;
    /// Sum of parameter counts whose name starts with `prefix`.
    std::size_t count_prefix(const std::string& prefix) const;

private:
    std::deque<Parameter> params_;
    std::vector<Parameter*> ordered_;
};

} // namespace sharecmp

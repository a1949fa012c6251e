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

#include "sharecmp/core/module.hpp"

#include "sharecmp/core/error.hpp"

namespace sharecmp {

Parameter& ParamStore::create(std::string name, std::vector<int> shape, Parameter::Init init,
                              double init_arg) {
    if (find(name) != nullptr) throw Error("duplicate parameter name: " + name);
    Parameter p;
    p.name = std::move(name);
    p.shape = std::move(shape);
    p.init = init;
    p.init_arg = init_arg;
    params_.push_back(std::move(p));
    ordered_.push_back(&params_.back());
    return params_.back();
}

Parameter* ParamStore::find(const std::string& name) {
    for (Parameter* p : ordered_)
        if (p->name == name) return p;
    return nullptr;
}

void ParamStore::init_all(Rng& rng) {
    for (Parameter* p : ordered_) {
        p->value = Tensor(p->shape);
        switch (p->init) {
        case Parameter::Init::TruncNormal:
            for (std::size_t i = 0; i < p->value.numel(); ++i)
                p->value[i] = trunc_normal(rng, p->init_arg);
            break;
        case Parameter::Init::Zeros:
            break;
        case Parameter::Init::Ones:
            p->value.fill(1.0);
            break;
        case Parameter::Init::Constant:
            p->value.fill(p->init_arg);
            break;
        }
    }
}

void ParamStore::zero_grads() {
    for (Parameter* p : ordered_) p->zero_grad();
}

std::size_t ParamStore::total_params() const {
    std::size_t n = 0;
    for (const Parameter* p : ordered_) n += p->numel();
    return n;
}

std::size_t ParamStore::count_prefix(const std::string& prefix) const {
    std::size_t n = 0;
    for (const Parameter* p : ordered_)
        if (p->name.rfind(prefix, 0) == 0) n += p->numel();
    return n;
}

} // namespace sharecmp

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

#include "sharecmp/core/graph.hpp"

#include "sharecmp/core/error.hpp"

namespace sharecmp {

Ref Graph::input(Tensor v) {
    Node n;
    n.value = std::move(v);
    n.needs_grad = false;
    nodes_.push_back(std::move(n));
    return Ref{static_cast<int>(nodes_.size()) - 1};
}

Ref Graph::param(Parameter& p) {
    if (!p.materialized()) throw Error("parameter not materialized: " + p.name);
    Node n;
    n.value = p.value; // copy; grads flow back through `bound`
    n.needs_grad = true;
    n.bound = &p;
    nodes_.push_back(std::move(n));
    return Ref{static_cast<int>(nodes_.size()) - 1};
}

Ref Graph::make(Tensor value, std::vector<Ref> parents, BackwardFn fn) {
    Node n;
    n.value = std::move(value);
    for (Ref pr : parents)
        if (nodes_[static_cast<std::size_t>(pr.id)].needs_grad) n.needs_grad = true;
    n.parents = std::move(parents);
    if (n.needs_grad) n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return Ref{static_cast<int>(nodes_.size()) - 1};
}

Tensor& Graph::grad_buffer(int id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.empty()) n.grad = Tensor(n.value.shape());
    return n.grad;
}

const Tensor& Graph::grad(Ref r) { return grad_buffer(r.id); }

void Graph::backward(Ref loss) {
    Node& top = nodes_[static_cast<std::size_t>(loss.id)];
    check_input(top.value.numel() == 1, "backward requires a scalar loss node");
    grad_buffer(loss.id)[0] = 1.0;
    for (int id = loss.id; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.needs_grad || n.grad.empty()) continue;
        if (n.backward) n.backward(*this, id);
        if (n.bound != nullptr) {
            if (n.bound->grad.empty()) n.bound->grad = Tensor(n.bound->shape);
            n.bound->grad.add_(n.grad);
        }
    }
}

void Graph::clear() { nodes_.clear(); }

} // namespace sharecmp

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

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sharecmp/core/module.hpp"
#include "sharecmp/core/tensor.hpp"

namespace sharecmp {

class Graph;

/// Handle to a node in a Graph. Valid until Graph::clear().
struct Ref {
    int id = -1;
    bool valid() const { return id >= 0; }
};

/// Reverse-mode autodiff tape. Nodes are created in topological order by the
/// op functions in ops.hpp; backward() sweeps them in reverse. Gradients of
/// parameter leaves are accumulated into Parameter::grad, so the same
/// Parameter may back several leaves (weight sharing) or be bound once and
/// used many times.
class Graph {
public:
    /// Non-differentiable leaf.
    Ref input(Tensor v);
    /// Differentiable leaf bound to a parameter; requires materialized values.
    Ref param(Parameter& p);

    const Tensor& val(Ref r) const { return nodes_[static_cast<std::size_t>(r.id)].value; }
    /// Gradient of a node (zeros until backward has touched it).
    const Tensor& grad(Ref r);
    bool needs_grad(Ref r) const { return nodes_[static_cast<std::size_t>(r.id)].needs_grad; }

    /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be a scalar node.
    void backward(Ref loss);

    /// Drops every node. Outstanding Refs become invalid.
    void clear();

    std::size_t size() const { return nodes_.size(); }

    // --- used by op implementations ---
    using BackwardFn = std::function<void(Graph&, int)>;
    Ref make(Tensor value, std::vector<Ref> parents, BackwardFn fn);
    Tensor& grad_buffer(int id);
    Tensor& value_buffer(int id) { return nodes_[static_cast<std::size_t>(id)].value; }
    const std::vector<Ref>& parents(int id) const {
        return nodes_[static_cast<std::size_t>(id)].parents;
    }

private:
    struct Node {
        Tensor value;
        Tensor grad; // lazily allocated, same shape as value
        bool needs_grad = false;
        Parameter* bound = nullptr;
        std::vector<Ref> parents;
        BackwardFn backward;
    };
    std::vector<Node> nodes_;
};

} // namespace sharecmp

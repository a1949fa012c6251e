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

#include <vector>

#include "sharecmp/core/module.hpp"

namespace sharecmp {

/// Bias-corrected adaptive moments with decoupled weight decay:
///   p -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)
/// An empty gradient counts as zero. Decay is scaled by lr, so lr = 0 leaves
/// every parameter unchanged while the moments still advance.
class AdamW {
  public:
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    void step(ParamStore& ps, double lr, double weight_decay);
    long steps() const { return t_; }

  private:
    long t_ = 0;
    std::vector<Tensor> m_, v_; // parallel to ps.all()
};

} // namespace sharecmp

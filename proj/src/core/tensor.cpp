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

#include "sharecmp/core/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sharecmp {

std::size_t Tensor::shape_numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        check_input(d >= 0, "tensor dimension must be non-negative");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data) : shape_(std::move(shape)) {
    check_input(shape_numel(shape_) == data.size(), "tensor data size does not match shape");
    data_ = std::move(data);
}

Tensor Tensor::full(std::vector<int> shape, double v) {
    Tensor t(std::move(shape));
    t.fill(v);
    return t;
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

double Tensor::min() const {
    double m = data_.empty() ? 0.0 : data_[0];
    for (double v : data_) m = std::min(m, v);
    return m;
}

double Tensor::max() const {
    double m = data_.empty() ? 0.0 : data_[0];
    for (double v : data_) m = std::max(m, v);
    return m;
}

double Tensor::sum() const {
    double s = 0.0;
    for (double v : data_) s += v;
    return s;
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::add_(const Tensor& o) {
    check_input(same_shape(o), "tensor add_: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
}

void Tensor::scale_(double s) {
    for (double& v : data_) v *= s;
}

std::string shape_str(const std::vector<int>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor bilinear_resize(const Tensor& chw, int out_h, int out_w) {
    check_input(chw.ndim() == 3, "bilinear_resize expects a CHW tensor");
    check_input(out_h > 0 && out_w > 0, "bilinear_resize: output dims must be positive");
    const int c = chw.dim(0), h = chw.dim(1), w = chw.dim(2);
    Tensor out({c, out_h, out_w});
    const double sy = static_cast<double>(h) / out_h;
    const double sx = static_cast<double>(w) / out_w;
    for (int oy = 0; oy < out_h; ++oy) {
        double fy = std::clamp((oy + 0.5) * sy - 0.5, 0.0, static_cast<double>(h - 1));
        int y0 = static_cast<int>(fy);
        int y1 = std::min(y0 + 1, h - 1);
        double wy = fy - y0;
        for (int ox = 0; ox < out_w; ++ox) {
            double fx = std::clamp((ox + 0.5) * sx - 0.5, 0.0, static_cast<double>(w - 1));
            int x0 = static_cast<int>(fx);
            int x1 = std::min(x0 + 1, w - 1);
            double wx = fx - x0;
            for (int ch = 0; ch < c; ++ch) {
                double top = (1.0 - wx) * chw.at3(ch, y0, x0) + wx * chw.at3(ch, y0, x1);
                double bot = (1.0 - wx) * chw.at3(ch, y1, x0) + wx * chw.at3(ch, y1, x1);
                out.at3(ch, oy, ox) = (1.0 - wy) * top + wy * bot;
            }
        }
    }
    return out;
}

} // namespace sharecmp

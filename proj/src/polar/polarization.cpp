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

#include "sharecmp/polar/polarization.hpp"

#include <algorithm>
#include <cmath>

#include "sharecmp/core/error.hpp"
#include "sharecmp/image/png_io.hpp"

namespace sharecmp {

namespace {

constexpr double kPi = 3.14159265358979323846;

void validate_map(const Tensor& t, const char* name) {
    check_input(t.ndim() == 3, std::string(name) + " must be [C,H,W]");
    check_input(t.dim(0) == 1 || t.dim(0) == 3, std::string(name) + " must have 1 or 3 channels");
    for (std::size_t i = 0; i < t.numel(); ++i)
        check_input(std::isfinite(t[i]) && t[i] >= 0.0,
                    std::string(name) + " must be finite and non-negative");
}

} // namespace

void validate(const PolarizedImageSet& p) {
    validate_map(p.i0, "i0");
    validate_map(p.i45, "i45");
    validate_map(p.i90, "i90");
    validate_map(p.i135, "i135");
    check_input(p.i0.same_shape(p.i45) && p.i0.same_shape(p.i90) && p.i0.same_shape(p.i135),
                "all four angle images must share one shape");
}

const char* to_string(RepresentationKind kind) {
    switch (kind) {
    case RepresentationKind::AoLP: return "aolp";
    case RepresentationKind::DoLP: return "dolp";
    case RepresentationKind::SAoLP: return "saolp";
    case RepresentationKind::CAoLP: return "caolp";
    }
    return "?";
}

RepresentationKind representation_from_string(const std::string& name) {
    if (name == "aolp") return RepresentationKind::AoLP;
    if (name == "dolp") return RepresentationKind::DoLP;
    if (name == "saolp") return RepresentationKind::SAoLP;
    if (name == "caolp") return RepresentationKind::CAoLP;
    throw InvalidInputError("unknown representation kind: " + name);
}

ValueRange representation_range(RepresentationKind kind) {
    switch (kind) {
    case RepresentationKind::AoLP: return {-kPi / 2.0, kPi / 2.0};
    case RepresentationKind::DoLP: return {0.0, 1.0};
    case RepresentationKind::SAoLP: return {-kPi / 4.0, kPi / 4.0};
    case RepresentationKind::CAoLP: return {0.0, kPi / 2.0};
    }
    return {0.0, 1.0};
}

StokesMap compute_stokes(const PolarizedImageSet& p) {
    validate(p);
    StokesMap s{Tensor(p.i0.shape()), Tensor(p.i0.shape()), Tensor(p.i0.shape())};
    for (std::size_t i = 0; i < p.i0.numel(); ++i) {
        s.s0[i] = (p.i0[i] + p.i45[i] + p.i90[i] + p.i135[i]) / 2.0;
        s.s1[i] = p.i0[i] - p.i90[i];
        s.s2[i] = p.i45[i] - p.i135[i];
    }
    return s;
}

RepresentationMap compute_representation(const StokesMap& s, RepresentationKind kind,
                                         bool use_atan2) {
    check_input(s.s0.same_shape(s.s1) && s.s0.same_shape(s.s2),
                "Stokes components must share one shape");
    for (std::size_t i = 0; i < s.s0.numel(); ++i)
        check_input(std::isfinite(s.s0[i]) && std::isfinite(s.s1[i]) && std::isfinite(s.s2[i]),
                    "Stokes map contains non-finite values");

    RepresentationMap r{kind, Tensor(s.s0.shape())};
    for (std::size_t i = 0; i < s.s0.numel(); ++i) {
        const double s0 = s.s0[i], s1 = s.s1[i], s2 = s.s2[i];
        double v = 0.0;
        switch (kind) {
        case RepresentationKind::AoLP:
            if (s1 == 0.0 && s2 == 0.0) v = 0.0;
            else if (use_atan2) v = 0.5 * std::atan2(s2, s1);
            else v = s1 == 0.0 ? (s2 > 0.0 ? kPi / 4.0 : -kPi / 4.0) : 0.5 * std::atan(s2 / s1);
            break;
        case RepresentationKind::DoLP:
            v = s0 == 0.0 ? 0.0 : std::clamp(std::sqrt(s1 * s1 + s2 * s2) / s0, 0.0, 1.0);
            break;
        case RepresentationKind::SAoLP:
            v = s0 == 0.0 ? 0.0 : 0.5 * std::asin(std::clamp(s2 / s0, -1.0, 1.0));
            break;
        case RepresentationKind::CAoLP:
            v = s0 == 0.0 ? 0.0 : 0.5 * std::acos(std::clamp(s1 / s0, -1.0, 1.0));
            break;
        }
        r.values[i] = v;
    }
    return r;
}

PolarizedImageSet synthesize_polarized(const Tensor& intensity_unpol,
                                       const Tensor& intensity_pol, const Tensor& theta) {
    check_input(intensity_unpol.same_shape(intensity_pol) &&
                    intensity_unpol.same_shape(theta),
                "synthesize_polarized: inputs must share one shape");
    for (std::size_t i = 0; i < intensity_unpol.numel(); ++i) {
        check_input(std::isfinite(intensity_unpol[i]) && intensity_unpol[i] >= 0.0,
                    "unpolarized intensity must be finite and non-negative");
        check_input(std::isfinite(intensity_pol[i]) && intensity_pol[i] >= 0.0,
                    "polarized intensity must be finite and non-negative");
        check_input(std::isfinite(theta[i]), "theta must be finite");
    }

    PolarizedImageSet p{Tensor(theta.shape()), Tensor(theta.shape()), Tensor(theta.shape()),
                        Tensor(theta.shape())};
    auto render = [&](Tensor& out, double angle) {
        for (std::size_t i = 0; i < theta.numel(); ++i) {
            const double c = std::cos(theta[i] - angle);
            out[i] = intensity_unpol[i] / 2.0 + intensity_pol[i] * c * c;
        }
    };
    render(p.i0, 0.0);
    render(p.i45, kPi / 4.0);
    render(p.i90, kPi / 2.0);
    render(p.i135, 3.0 * kPi / 4.0);
    return p;
}

StokesMap collapse_luminance(const StokesMap& s) {
    check_input(s.s0.ndim() == 3, "Stokes components must be [C,H,W]");
    if (s.s0.dim(0) == 1) return s;
    check_input(s.s0.dim(0) == 3, "luminance collapse expects 1 or 3 channels");
    const int h = s.s0.dim(1), w = s.s0.dim(2);
    constexpr double kW[3] = {0.299, 0.587, 0.114};
    StokesMap out{Tensor({1, h, w}), Tensor({1, h, w}), Tensor({1, h, w})};
    const Tensor* src[3] = {&s.s0, &s.s1, &s.s2};
    Tensor* dst[3] = {&out.s0, &out.s1, &out.s2};
    for (int k = 0; k < 3; ++k)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                dst[k]->at3(0, y, x) = kW[0] * src[k]->at3(0, y, x) +
                                       kW[1] * src[k]->at3(1, y, x) +
                                       kW[2] * src[k]->at3(2, y, x);
    return out;
}

void export_representation(const RepresentationMap& r, const std::string& path) {
    check_input(r.values.ndim() == 3 && (r.values.dim(0) == 1 || r.values.dim(0) == 3),
                "representation map must be [1|3,H,W]");
    const ValueRange range = representation_range(r.kind);
    const double span = range.hi - range.lo;
    ImageU8 img(r.values.dim(1), r.values.dim(2), r.values.dim(0));
    for (int ch = 0; ch < img.c; ++ch)
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x) {
                const double norm =
                    std::clamp((r.values.at3(ch, y, x) - range.lo) / span, 0.0, 1.0);
                img.at(y, x, ch) = static_cast<std::uint8_t>(std::llround(255.0 * norm));
            }
    write_png(path, img);
}

} // namespace sharecmp

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

#include <string>

#include "sharecmp/core/tensor.hpp"

namespace sharecmp {

/// Four co-registered polarizer-angle intensity images, each [C,H,W] with
/// C in {1,3}, values finite and >= 0.
struct PolarizedImageSet {
    Tensor i0, i45, i90, i135;

    int channels() const { return i0.dim(0); }
    int height() const { return i0.dim(1); }
    int width() const { return i0.dim(2); }
};

/// Throws InvalidInputError unless all four maps agree in shape, are [C,H,W]
/// with C in {1,3}, finite and non-negative.
void validate(const PolarizedImageSet& p);

/// Linear-polarization Stokes components, each [C,H,W]. s3 (circular) is out
/// of scope.
struct StokesMap {
    Tensor s0, s1, s2;
};

enum class RepresentationKind { AoLP, DoLP, SAoLP, CAoLP };

const char* to_string(RepresentationKind kind);
RepresentationKind representation_from_string(const std::string& name);

/// Closed value range a representation kind is guaranteed to live in.
struct ValueRange {
    double lo;
    double hi;
};
ValueRange representation_range(RepresentationKind kind);

struct RepresentationMap {
    RepresentationKind kind;
    Tensor values; // [C,H,W]
};

/// s0 = (i0+i45+i90+i135)/2, s1 = i0-i90, s2 = i45-i135, element-wise.
StokesMap compute_stokes(const PolarizedImageSet& p);

/// AoLP = atan2(s2,s1)/2 (or atan(s2/s1)/2 when use_atan2 is false, the
/// principal-branch variant that folds opposite quadrants together),
/// DoLP = clamp(|s|/s0, 0, 1),
/// SAoLP = asin(clamp(s2/s0))/2, CAoLP = acos(clamp(s1/s0))/2.
/// Pixels with s0 = 0 give 0 for DoLP/SAoLP/CAoLP; s1 = s2 = 0 gives AoLP 0.
RepresentationMap compute_representation(const StokesMap& s, RepresentationKind kind,
                                         bool use_atan2 = true);

/// Malus forward model: i_a = unpol/2 + pol*cos^2(theta - a) for
/// a in {0, 45, 90, 135} degrees. All three inputs share one shape; theta in
/// radians. This is the independent oracle the Stokes math is tested against.
PolarizedImageSet synthesize_polarized(const Tensor& intensity_unpol,
                                       const Tensor& intensity_pol, const Tensor& theta);

/// Collapses a 3-channel Stokes map to luminance (0.299/0.587/0.114 weights
/// on each component). Single-channel maps pass through unchanged.
StokesMap collapse_luminance(const StokesMap& s);

/// Writes an 8-bit PNG with values mapped linearly from the kind's declared
/// range (not the empirical data range) onto 0..255.
void export_representation(const RepresentationMap& r, const std::string& path);

} // namespace sharecmp

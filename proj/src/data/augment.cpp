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

#include "sharecmp/data/augment.hpp"

#include <algorithm>
#include <cmath>

#include "sharecmp/core/error.hpp"

namespace sharecmp {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kLumR = 0.299, kLumG = 0.587, kLumB = 0.114;

LabelMap resize_nearest(const LabelMap& in, int nh, int nw) {
    LabelMap out(nh, nw);
    const double sy = static_cast<double>(in.h) / nh;
    const double sx = static_cast<double>(in.w) / nw;
    for (int y = 0; y < nh; ++y) {
        const int iy = std::clamp(static_cast<int>(std::floor((y + 0.5) * sy)), 0, in.h - 1);
        for (int x = 0; x < nw; ++x) {
            const int ix = std::clamp(static_cast<int>(std::floor((x + 0.5) * sx)), 0, in.w - 1);
            out.at(y, x) = in.at(iy, ix);
        }
    }
    return out;
}

Tensor hflip_chw(const Tensor& t) {
    Tensor out(t.shape());
    const int c = t.dim(0), h = t.dim(1), w = t.dim(2);
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at3(ch, y, x) = t.at3(ch, y, w - 1 - x);
    return out;
}

LabelMap hflip_labels(const LabelMap& m) {
    LabelMap out(m.h, m.w);
    for (int y = 0; y < m.h; ++y)
        for (int x = 0; x < m.w; ++x) out.at(y, x) = m.at(y, m.w - 1 - x);
    return out;
}

/// Negates an angle map, wrapping -pi/2 back to pi/2 so the value stays in
/// the AoLP range (-pi/2, pi/2].
void negate_angle(Tensor& t) {
    for (std::size_t i = 0; i < t.numel(); ++i) {
        double v = -t[i];
        if (v <= -kPi / 2.0) v += kPi;
        t[i] = v;
    }
}

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double d = mx - mn;
    v = mx;
    s = mx == 0.0 ? 0.0 : d / mx;
    if (d == 0.0) {
        h = 0.0;
    } else if (mx == r) {
        h = std::fmod((g - b) / d, 6.0) / 6.0;
    } else if (mx == g) {
        h = ((b - r) / d + 2.0) / 6.0;
    } else {
        h = ((r - g) / d + 4.0) / 6.0;
    }
    if (h < 0.0) h += 1.0;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
    const double hh = std::fmod(h, 1.0) * 6.0;
    const int sector = static_cast<int>(hh) % 6;
    const double f = hh - std::floor(hh);
    const double p = v * (1.0 - s);
    const double q = v * (1.0 - s * f);
    const double t = v * (1.0 - s * (1.0 - f));
    switch (sector) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
    }
}

struct JitterDraw {
    double brightness = 1.0;
    double contrast = 1.0;
    double saturation = 1.0;
    double hue = 0.0;
};

/// One photometric transform applied identically to all four angle images.
/// The contrast pivot is shared so the transform is a single function of
/// pixel value rather than of the individual image.
void apply_jitter(Tensor& img, const JitterDraw& j, double contrast_pivot) {
    const int c = img.dim(0), h = img.dim(1), w = img.dim(2);
    for (std::size_t i = 0; i < img.numel(); ++i) img[i] *= j.brightness;
    for (std::size_t i = 0; i < img.numel(); ++i)
        img[i] = contrast_pivot * j.brightness +
                 (img[i] - contrast_pivot * j.brightness) * j.contrast;
    if (c == 3) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double r = img.at3(0, y, x), g = img.at3(1, y, x), b = img.at3(2, y, x);
                const double lum = kLumR * r + kLumG * g + kLumB * b;
                r = lum + (r - lum) * j.saturation;
                g = lum + (g - lum) * j.saturation;
                b = lum + (b - lum) * j.saturation;
                if (j.hue != 0.0) {
                    double hh, ss, vv;
                    rgb_to_hsv(std::clamp(r, 0.0, 1.0), std::clamp(g, 0.0, 1.0),
                               std::clamp(b, 0.0, 1.0), hh, ss, vv);
                    hh += j.hue;
                    if (hh < 0.0) hh += 1.0;
                    hsv_to_rgb(hh, ss, vv, r, g, b);
                }
                img.at3(0, y, x) = r;
                img.at3(1, y, x) = g;
                img.at3(2, y, x) = b;
            }
    }
    for (std::size_t i = 0; i < img.numel(); ++i) img[i] = std::clamp(img[i], 0.0, 1.0);
}

Tensor crop_pad_chw(const Tensor& t, int y0, int x0, int ch, int cw, double pad_value) {
    Tensor out = Tensor::full({t.dim(0), ch, cw}, pad_value);
    const int c = t.dim(0), h = t.dim(1), w = t.dim(2);
    for (int k = 0; k < c; ++k)
        for (int y = 0; y < ch; ++y) {
            const int sy = y0 + y;
            if (sy < 0 || sy >= h) continue;
            for (int x = 0; x < cw; ++x) {
                const int sx = x0 + x;
                if (sx < 0 || sx >= w) continue;
                out.at3(k, y, x) = t.at3(k, sy, sx);
            }
        }
    return out;
}

LabelMap crop_pad_labels(const LabelMap& m, int y0, int x0, int ch, int cw) {
    LabelMap out(ch, cw, kIgnoreLabel);
    for (int y = 0; y < ch; ++y) {
        const int sy = y0 + y;
        if (sy < 0 || sy >= m.h) continue;
        for (int x = 0; x < cw; ++x) {
            const int sx = x0 + x;
            if (sx < 0 || sx >= m.w) continue;
            out.at(y, x) = m.at(sy, sx);
        }
    }
    return out;
}

} // namespace

Sample augment(const Sample& sample, const AugmentConfig& cfg, Rng& rng) {
    check_input(cfg.resize_min > 0.0 && cfg.resize_max >= cfg.resize_min,
                "resize ratio range must be positive");
    check_input(cfg.crop_h >= 1 && cfg.crop_w >= 1, "crop size must be positive");
    Sample out = sample;
    if (!cfg.enabled) return out;

    auto each_image = [&](auto&& fn) {
        if (out.has_polarized) {
            fn(out.polarized.i0);
            fn(out.polarized.i45);
            fn(out.polarized.i90);
            fn(out.polarized.i135);
        } else {
            for (auto& r : out.representations) fn(r.values);
        }
        fn(out.rgb);
        fn(out.aolp_target);
        fn(out.dolp_target);
    };

    // 1. Random ratio resize.
    {
        std::uniform_real_distribution<double> ratio(cfg.resize_min, cfg.resize_max);
        const double r = ratio(rng);
        const int nh = std::max(1, static_cast<int>(std::lround(out.height() * r)));
        const int nw = std::max(1, static_cast<int>(std::lround(out.width() * r)));
        each_image([&](Tensor& t) { t = bilinear_resize(t, nh, nw); });
        out.mask = resize_nearest(out.mask, nh, nw);
    }

    // 2. Horizontal flip.
    {
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        if (coin(rng) < cfg.hflip_prob) {
            each_image([&](Tensor& t) { t = hflip_chw(t); });
            out.mask = hflip_labels(out.mask);
            if (cfg.physical_hflip) {
                if (out.has_polarized) std::swap(out.polarized.i45, out.polarized.i135);
                negate_angle(out.aolp_target);
                for (auto& r : out.representations)
                    if (r.kind == RepresentationKind::AoLP ||
                        r.kind == RepresentationKind::SAoLP)
                        negate_angle(r.values);
            }
        }
    }

    // 3. Color jitter on the angle images only; rgb re-derived afterwards.
    if (out.has_polarized &&
        (cfg.brightness > 0.0 || cfg.contrast > 0.0 || cfg.saturation > 0.0 || cfg.hue > 0.0)) {
        JitterDraw j;
        std::uniform_real_distribution<double> db(1.0 - cfg.brightness, 1.0 + cfg.brightness);
        std::uniform_real_distribution<double> dc(1.0 - cfg.contrast, 1.0 + cfg.contrast);
        std::uniform_real_distribution<double> ds(1.0 - cfg.saturation, 1.0 + cfg.saturation);
        std::uniform_real_distribution<double> dh(-cfg.hue, cfg.hue);
        j.brightness = std::max(0.0, db(rng));
        j.contrast = std::max(0.0, dc(rng));
        j.saturation = std::max(0.0, ds(rng));
        j.hue = dh(rng);

        // Shared contrast pivot: mean intensity over the four angle images.
        double pivot = 0.0;
        const Tensor* imgs[4] = {&out.polarized.i0, &out.polarized.i45, &out.polarized.i90,
                                 &out.polarized.i135};
        for (const Tensor* t : imgs) pivot += t->sum() / static_cast<double>(t->numel());
        pivot /= 4.0;

        apply_jitter(out.polarized.i0, j, pivot);
        apply_jitter(out.polarized.i45, j, pivot);
        apply_jitter(out.polarized.i90, j, pivot);
        apply_jitter(out.polarized.i135, j, pivot);
        out.rgb = compute_stokes(out.polarized).s0;
    }

    // 4. Random crop, padded when the resized image is smaller.
    {
        const int h = out.height(), w = out.width();
        int y0 = 0, x0 = 0;
        if (h > cfg.crop_h) {
            std::uniform_int_distribution<int> dy(0, h - cfg.crop_h);
            y0 = dy(rng);
        }
        if (w > cfg.crop_w) {
            std::uniform_int_distribution<int> dx(0, w - cfg.crop_w);
            x0 = dx(rng);
        }
        each_image([&](Tensor& t) { t = crop_pad_chw(t, y0, x0, cfg.crop_h, cfg.crop_w, 0.0); });
        out.mask = crop_pad_labels(out.mask, y0, x0, cfg.crop_h, cfg.crop_w);
    }
    return out;
}

} // namespace sharecmp

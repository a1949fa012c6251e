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

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "sharecmp/core/error.hpp"
#include "sharecmp/image/png_io.hpp"
#include "sharecmp/polar/polarization.hpp"
#include "testutil.hpp"

using namespace sharecmp;
using namespace sharecmp::testutil;

namespace {

constexpr double kPi = 3.14159265358979323846;

double angle_diff_mod_pi(double a, double b) {
    double d = std::fmod(std::abs(a - b), kPi);
    return std::min(d, kPi - d);
}

PolarizedImageSet single_pixel(double i0, double i45, double i90, double i135) {
    return {Tensor({1, 1, 1}, {i0}), Tensor({1, 1, 1}, {i45}), Tensor({1, 1, 1}, {i90}),
            Tensor({1, 1, 1}, {i135})};
}

} // namespace

TEST_CASE("stokes of hand pixels") {
    {
        StokesMap s = compute_stokes(single_pixel(0.5, 0.5, 0.5, 0.5));
        CHECK(s.s0[0] == doctest::Approx(1.0));
        CHECK(s.s1[0] == doctest::Approx(0.0));
        CHECK(s.s2[0] == doctest::Approx(0.0));
    }
    {
        StokesMap s = compute_stokes(single_pixel(1.0, 0.5, 0.0, 0.5));
        CHECK(s.s0[0] == doctest::Approx(1.0));
        CHECK(s.s1[0] == doctest::Approx(1.0));
        CHECK(s.s2[0] == doctest::Approx(0.0));
    }
    {
        // Malus closed form: s1 = pol*cos(2 theta), s2 = pol*sin(2 theta).
        Tensor u({1, 1, 1}, {0.2}), p({1, 1, 1}, {0.6}), th({1, 1, 1}, {kPi / 6.0});
        StokesMap s = compute_stokes(synthesize_polarized(u, p, th));
        CHECK(s.s0[0] == doctest::Approx(0.8).epsilon(1e-12));
        CHECK(s.s1[0] == doctest::Approx(0.6 * std::cos(kPi / 3.0)).epsilon(1e-12));
        CHECK(s.s2[0] == doctest::Approx(0.6 * std::sin(kPi / 3.0)).epsilon(1e-12));
    }
}

TEST_CASE("stokes rejects malformed input") {
    PolarizedImageSet p = single_pixel(0.4, 0.4, 0.4, 0.4);
    p.i90 = Tensor({1, 2, 1});
    CHECK_THROWS_AS(compute_stokes(p), InvalidInputError);
    PolarizedImageSet neg = single_pixel(0.4, 0.4, 0.4, 0.4);
    neg.i0[0] = -0.1;
    CHECK_THROWS_AS(compute_stokes(neg), InvalidInputError);
    PolarizedImageSet nan_in = single_pixel(0.4, 0.4, 0.4, 0.4);
    nan_in.i45[0] = std::nan("");
    CHECK_THROWS_AS(compute_stokes(nan_in), InvalidInputError);
}

TEST_CASE("representation hand values") {
    StokesMap s{Tensor({1, 1, 4}, {1, 1, 1, 1}), Tensor({1, 1, 4}, {1, 0.6, 0, -1}),
                Tensor({1, 1, 4}, {0, 0.8, 0.5, 0})};
    CHECK(compute_representation(s, RepresentationKind::AoLP).values[0] == doctest::Approx(0.0));
    CHECK(compute_representation(s, RepresentationKind::DoLP).values[1] == doctest::Approx(1.0));
    CHECK(compute_representation(s, RepresentationKind::SAoLP).values[2] ==
          doctest::Approx(kPi / 12.0).epsilon(1e-12));
    CHECK(compute_representation(s, RepresentationKind::CAoLP).values[3] ==
          doctest::Approx(kPi / 2.0).epsilon(1e-12));
}

TEST_CASE("degenerate pixels fall back to zero") {
    StokesMap zero{Tensor({1, 1, 1}, {0.0}), Tensor({1, 1, 1}, {0.0}), Tensor({1, 1, 1}, {0.0})};
    for (auto kind : {RepresentationKind::AoLP, RepresentationKind::DoLP,
                      RepresentationKind::SAoLP, RepresentationKind::CAoLP})
        CHECK(compute_representation(zero, kind).values[0] == 0.0);
    StokesMap nan_map{Tensor({1, 1, 1}, {std::nan("")}), Tensor({1, 1, 1}, {0.0}),
                      Tensor({1, 1, 1}, {0.0})};
    CHECK_THROWS_AS(compute_representation(nan_map, RepresentationKind::DoLP),
                    InvalidInputError);
}

TEST_CASE("representations stay in their declared ranges") {
    Rng rng(101);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> s0d(0.0, 2.0);
    const int n = 2000;
    StokesMap s{Tensor({1, 1, n}), Tensor({1, 1, n}), Tensor({1, 1, n})};
    for (int i = 0; i < n; ++i) {
        s.s0[static_cast<std::size_t>(i)] = i % 17 == 0 ? 0.0 : s0d(rng);
        s.s1[static_cast<std::size_t>(i)] = u(rng);
        s.s2[static_cast<std::size_t>(i)] = u(rng);
    }
    for (auto kind : {RepresentationKind::AoLP, RepresentationKind::DoLP,
                      RepresentationKind::SAoLP, RepresentationKind::CAoLP}) {
        RepresentationMap r = compute_representation(s, kind);
        ValueRange range = representation_range(kind);
        for (std::size_t i = 0; i < r.values.numel(); ++i) {
            CHECK(r.values[i] >= range.lo);
            CHECK(r.values[i] <= range.hi);
        }
    }
}

TEST_CASE("malus oracle round trip at 1000 random pixels") {
    Rng rng(77);
    std::uniform_real_distribution<double> iu(0.0, 0.5);
    std::uniform_real_distribution<double> ip(1e-3, 0.5);
    std::uniform_real_distribution<double> th(-kPi / 2.0 + 1e-6, kPi / 2.0);
    const int n = 1000;
    Tensor u({1, 1, n}), p({1, 1, n}), t({1, 1, n});
    for (int i = 0; i < n; ++i) {
        u[static_cast<std::size_t>(i)] = iu(rng);
        p[static_cast<std::size_t>(i)] = ip(rng);
        t[static_cast<std::size_t>(i)] = th(rng);
    }
    PolarizedImageSet imgs = synthesize_polarized(u, p, t);
    StokesMap s = compute_stokes(imgs);
    RepresentationMap dolp = compute_representation(s, RepresentationKind::DoLP);
    RepresentationMap aolp = compute_representation(s, RepresentationKind::AoLP);
    for (int i = 0; i < n; ++i) {
        const std::size_t k = static_cast<std::size_t>(i);
        const double expect_dolp = p[k] / (u[k] + p[k]);
        CHECK(std::abs(dolp.values[k] - expect_dolp) <= 1e-6);
        CHECK(angle_diff_mod_pi(aolp.values[k], t[k]) <= 1e-6);
    }
}

TEST_CASE("noise-free renders satisfy the stokes identity") {
    Rng rng(78);
    Tensor u = random_tensor({3, 8, 8}, rng, 0.0, 0.6);
    Tensor p = random_tensor({3, 8, 8}, rng, 0.0, 0.4);
    Tensor t = random_tensor({3, 8, 8}, rng, -kPi / 2.0 + 1e-9, kPi / 2.0);
    PolarizedImageSet imgs = synthesize_polarized(u, p, t);
    for (std::size_t i = 0; i < u.numel(); ++i)
        CHECK(std::abs((imgs.i0[i] + imgs.i90[i]) - (imgs.i45[i] + imgs.i135[i])) <= 1e-9);
    // sqrt(s1^2+s2^2) <= s0 for physical renders
    StokesMap s = compute_stokes(imgs);
    for (std::size_t i = 0; i < u.numel(); ++i)
        CHECK(std::sqrt(s.s1[i] * s.s1[i] + s.s2[i] * s.s2[i]) <= s.s0[i] + 1e-9);
}

TEST_CASE("synthesize_polarized hand cases and input validation") {
    Tensor u({1, 1, 1}, {0.4}), zero({1, 1, 1}, {0.0}), one({1, 1, 1}, {1.0});
    Tensor th({1, 1, 1}, {0.3});
    PolarizedImageSet unpol = synthesize_polarized(u, zero, th);
    CHECK(unpol.i0[0] == doctest::Approx(0.2));
    CHECK(unpol.i45[0] == doctest::Approx(0.2));
    CHECK(unpol.i90[0] == doctest::Approx(0.2));
    CHECK(unpol.i135[0] == doctest::Approx(0.2));

    Tensor th0({1, 1, 1}, {0.0});
    PolarizedImageSet pol = synthesize_polarized(zero, one, th0);
    CHECK(pol.i0[0] == doctest::Approx(1.0));
    CHECK(pol.i90[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(pol.i45[0] == doctest::Approx(0.5));
    CHECK(pol.i135[0] == doctest::Approx(0.5));

    Tensor neg({1, 1, 1}, {-0.1});
    CHECK_THROWS_AS(synthesize_polarized(neg, one, th0), InvalidInputError);
}

TEST_CASE("compute_stokes is linear") {
    Rng rng(79);
    auto randset = [&] {
        PolarizedImageSet p;
        p.i0 = random_tensor({1, 3, 3}, rng, 0.0, 1.0);
        p.i45 = random_tensor({1, 3, 3}, rng, 0.0, 1.0);
        p.i90 = random_tensor({1, 3, 3}, rng, 0.0, 1.0);
        p.i135 = random_tensor({1, 3, 3}, rng, 0.0, 1.0);
        return p;
    };
    PolarizedImageSet p = randset(), q = randset();
    const double a = 0.3, b = 1.4;
    PolarizedImageSet mix;
    auto blend = [&](const Tensor& x, const Tensor& y) {
        Tensor out(x.shape());
        for (std::size_t i = 0; i < x.numel(); ++i) out[i] = a * x[i] + b * y[i];
        return out;
    };
    mix.i0 = blend(p.i0, q.i0);
    mix.i45 = blend(p.i45, q.i45);
    mix.i90 = blend(p.i90, q.i90);
    mix.i135 = blend(p.i135, q.i135);
    StokesMap sp = compute_stokes(p), sq = compute_stokes(q), sm = compute_stokes(mix);
    for (std::size_t i = 0; i < sp.s0.numel(); ++i) {
        CHECK(sm.s0[i] == doctest::Approx(a * sp.s0[i] + b * sq.s0[i]).epsilon(1e-12));
        CHECK(sm.s1[i] == doctest::Approx(a * sp.s1[i] + b * sq.s1[i]).epsilon(1e-12));
        CHECK(sm.s2[i] == doctest::Approx(a * sp.s2[i] + b * sq.s2[i]).epsilon(1e-12));
    }
}

TEST_CASE("operations are pure") {
    Rng rng(80);
    Tensor u = random_tensor({3, 4, 4}, rng, 0.0, 0.5);
    Tensor p = random_tensor({3, 4, 4}, rng, 0.0, 0.5);
    Tensor t = random_tensor({3, 4, 4}, rng, -1.5, 1.5);
    PolarizedImageSet a = synthesize_polarized(u, p, t);
    PolarizedImageSet b = synthesize_polarized(u, p, t);
    for (std::size_t i = 0; i < u.numel(); ++i) {
        CHECK(a.i0[i] == b.i0[i]);
        CHECK(a.i135[i] == b.i135[i]);
    }
    StokesMap s = compute_stokes(a);
    RepresentationMap r1 = compute_representation(s, RepresentationKind::AoLP);
    RepresentationMap r2 = compute_representation(s, RepresentationKind::AoLP);
    for (std::size_t i = 0; i < r1.values.numel(); ++i) CHECK(r1.values[i] == r2.values[i]);
}

TEST_CASE("single-argument arctangent variant stays in the folded range") {
    StokesMap s{Tensor({1, 1, 3}, {1, 1, 1}), Tensor({1, 1, 3}, {0.5, -0.5, 0.0}),
                Tensor({1, 1, 3}, {0.5, 0.5, 0.4})};
    RepresentationMap two = compute_representation(s, RepresentationKind::AoLP, true);
    RepresentationMap one = compute_representation(s, RepresentationKind::AoLP, false);
    // Quadrant-correct and literal variants agree when s1 > 0.
    CHECK(one.values[0] == doctest::Approx(two.values[0]).epsilon(1e-12));
    // They differ by pi/2 when s1 < 0 (atan folds into (-pi/4, pi/4)).
    CHECK(std::abs(one.values[1] - two.values[1]) == doctest::Approx(kPi / 2.0).epsilon(1e-9));
    // s1 = 0: literal variant takes the arctan limit +-pi/4.
    CHECK(one.values[2] == doctest::Approx(kPi / 4.0));
}

TEST_CASE("luminance collapse matches per-channel weights") {
    Rng rng(81);
    Tensor u = random_tensor({3, 2, 2}, rng, 0.0, 0.5);
    Tensor p = random_tensor({3, 2, 2}, rng, 0.0, 0.5);
    Tensor t = random_tensor({3, 2, 2}, rng, -1.0, 1.0);
    StokesMap s = compute_stokes(synthesize_polarized(u, p, t));
    StokesMap lum = collapse_luminance(s);
    CHECK(lum.s0.dim(0) == 1);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x) {
            double expect =
                0.299 * s.s1.at3(0, y, x) + 0.587 * s.s1.at3(1, y, x) + 0.114 * s.s1.at3(2, y, x);
            CHECK(lum.s1.at3(0, y, x) == doctest::Approx(expect).epsilon(1e-12));
        }
    // Single-channel maps pass through.
    StokesMap narrow{Tensor({1, 2, 2}, {1, 2, 3, 4}), Tensor({1, 2, 2}, {0, 0, 0, 0}),
                     Tensor({1, 2, 2}, {0, 0, 0, 0})};
    StokesMap same = collapse_luminance(narrow);
    for (std::size_t i = 0; i < 4; ++i) CHECK(same.s0[i] == narrow.s0[i]);
}

TEST_CASE("export_representation quantizes against the declared range") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "sharecmp_polar_test";
    fs::create_directories(dir);

    auto readback = [&](const RepresentationMap& r, const char* name) {
        fs::path file = dir / name;
        export_representation(r, file.string());
        return read_png(file.string());
    };

    RepresentationMap black{RepresentationKind::DoLP, Tensor::zeros({1, 4, 4})};
    ImageU8 img = readback(black, "black.png");
    for (auto v : img.pix) CHECK(v == 0);

    RepresentationMap white{RepresentationKind::DoLP, Tensor::full({1, 4, 4}, 1.0)};
    img = readback(white, "white.png");
    for (auto v : img.pix) CHECK(v == 255);

    RepresentationMap mid{RepresentationKind::AoLP, Tensor::zeros({1, 4, 4})};
    img = readback(mid, "mid.png");
    for (auto v : img.pix) CHECK(v == 128);

    fs::remove_all(dir);
}

TEST_CASE("png round trip preserves bytes") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "sharecmp_png_test";
    fs::create_directories(dir);

    ImageU8 rgb(5, 7, 3);
    for (std::size_t i = 0; i < rgb.pix.size(); ++i)
        rgb.pix[i] = static_cast<std::uint8_t>((i * 37) % 256);
    fs::path file = dir / "rt.png";
    write_png(file.string(), rgb);
    ImageU8 back = read_png(file.string());
    CHECK(back.h == 5);
    CHECK(back.w == 7);
    CHECK(back.c == 3);
    CHECK(back.pix == rgb.pix);

    LabelMap labels(3, 4);
    for (std::size_t i = 0; i < labels.v.size(); ++i)
        labels.v[i] = static_cast<std::uint8_t>(i == 5 ? 255 : i);
    fs::path lfile = dir / "labels.png";
    write_label_png(lfile.string(), labels);
    LabelMap lback = read_label_png(lfile.string());
    CHECK(lback.h == 3);
    CHECK(lback.w == 4);
    CHECK(lback.v == labels.v);

    CHECK_THROWS_AS(read_png((dir / "missing.png").string()), IoError);

    // Tensor codec: value/255 in, llround(255 v) out.
    Tensor chw = image_to_chw(rgb);
    CHECK(chw.dim(0) == 3);
    CHECK(chw.dim(1) == 5);
    CHECK(chw.dim(2) == 7);
    ImageU8 again = chw_to_image(chw);
    CHECK(again.pix == rgb.pix);

    fs::remove_all(dir);
}

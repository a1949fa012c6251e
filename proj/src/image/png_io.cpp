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

#include "sharecmp/image/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "sharecmp/core/error.hpp"

namespace sharecmp {

ImageU8 read_png(const std::string& path) {
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str()))
        throw IoError("cannot read PNG " + path + ": " + img.message);

    const bool gray = (img.format & PNG_FORMAT_FLAG_COLOR) == 0 &&
                      (img.format & PNG_FORMAT_FLAG_COLORMAP) == 0;
    img.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;

    ImageU8 out(static_cast<int>(img.height), static_cast<int>(img.width), gray ? 1 : 3);
    if (!png_image_finish_read(&img, nullptr, out.pix.data(), 0, nullptr)) {
        png_image_free(&img);
        throw IoError("cannot decode PNG " + path + ": " + img.message);
    }
    return out;
}

void write_png(const std::string& path, const ImageU8& img) {
    check_input(img.c == 1 || img.c == 3, "write_png: channels must be 1 or 3");
    check_input(img.h > 0 && img.w > 0 &&
                    img.pix.size() == static_cast<std::size_t>(img.h) * img.w * img.c,
                "write_png: inconsistent image buffer");
    png_image out;
    std::memset(&out, 0, sizeof(out));
    out.version = PNG_IMAGE_VERSION;
    out.width = static_cast<png_uint_32>(img.w);
    out.height = static_cast<png_uint_32>(img.h);
    out.format = img.c == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&out, path.c_str(), 0, img.pix.data(), 0, nullptr))
        throw IoError("cannot write PNG " + path + ": " + out.message);
}

LabelMap read_label_png(const std::string& path) {
    ImageU8 img = read_png(path);
    if (img.c != 1) throw DatasetError("label PNG must be single channel: " + path);
    LabelMap labels(img.h, img.w);
    labels.v = std::move(img.pix);
    return labels;
}

void write_label_png(const std::string& path, const LabelMap& labels) {
    ImageU8 img(labels.h, labels.w, 1);
    img.pix = labels.v;
    write_png(path, img);
}

Tensor image_to_chw(const ImageU8& img) {
    Tensor t({img.c, img.h, img.w});
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int ch = 0; ch < img.c; ++ch)
                t.at3(ch, y, x) = static_cast<double>(img.at(y, x, ch)) / 255.0;
    return t;
}

ImageU8 chw_to_image(const Tensor& chw) {
    check_input(chw.ndim() == 3 && (chw.dim(0) == 1 || chw.dim(0) == 3),
                "chw_to_image: expects [1|3,H,W]");
    ImageU8 img(chw.dim(1), chw.dim(2), chw.dim(0));
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int ch = 0; ch < img.c; ++ch) {
                double v = std::clamp(chw.at3(ch, y, x), 0.0, 1.0);
                img.at(y, x, ch) = static_cast<std::uint8_t>(std::llround(255.0 * v));
            }
    return img;
}

} // namespace sharecmp

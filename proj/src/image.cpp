#include "flowstitch/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flowstitch/errors.hpp"
#include "flowstitch/parallel.hpp"
#include "png_io.hpp"

namespace flowstitch {

ImageBuf::ImageBuf(int width, int height, int channels, float fill, bool valid)
    : width_(width), height_(height), channels_(channels),
      data_(static_cast<size_t>(width) * height * channels, fill),
      valid_(static_cast<size_t>(width) * height, valid ? 1 : 0) {
    if (width < 0 || height < 0 || (channels != 1 && channels != 3))
        throw ContractError("ImageBuf: channels must be 1 or 3");
}

Mask ImageBuf::valid_mask() const {
    Mask m(width_, height_);
    m.v = valid_;
    return m;
}

ImageBuf load_image(const std::string& path) {
    detail::RawPng raw = detail::read_png(path);
    int out_channels = raw.channels == 1 ? 1 : 3;
    ImageBuf img(raw.width, raw.height, out_channels);
    const float scale = 1.0f / 255.0f;
    for (int j = 0; j < raw.height; ++j) {
        for (int i = 0; i < raw.width; ++i) {
            const uint8_t* px = raw.bytes.data() +
                (static_cast<size_t>(j) * raw.width + i) * raw.channels;
            for (int c = 0; c < out_channels; ++c)
                img.set(i, j, c, px[c] * scale);
            if (raw.channels == 4)
                img.set_valid(i, j, px[3] >= 128);
        }
    }
    return img;
}

void save_image(const ImageBuf& img, const std::string& path) {
    if (img.empty()) throw ContractError("save_image: empty image");
    bool any_invalid = false;
    for (int j = 0; j < img.height() && !any_invalid; ++j)
        for (int i = 0; i < img.width(); ++i)
            if (!img.valid(i, j)) { any_invalid = true; break; }

    int out_channels = img.channels() == 1 ? (any_invalid ? 4 : 1)
                                           : (any_invalid ? 4 : 3);
    std::vector<uint8_t> bytes(static_cast<size_t>(img.width()) * img.height() * out_channels);
    for (int j = 0; j < img.height(); ++j) {
        for (int i = 0; i < img.width(); ++i) {
            uint8_t* px = bytes.data() + (static_cast<size_t>(j) * img.width() + i) * out_channels;
            for (int c = 0; c < std::min(out_channels, 3); ++c) {
                int src = std::min(c, img.channels() - 1);
                float v = std::clamp(img.at(i, j, src), 0.0f, 1.0f);
                px[c] = static_cast<uint8_t>(std::lround(v * 255.0f));
            }
            if (out_channels == 4)
                px[3] = img.valid(i, j) ? 255 : 0;
        }
    }
    detail::write_png(path, img.width(), img.height(), out_channels, bytes);
}

ImageBuf to_gray(const ImageBuf& img) {
    if (img.channels() == 1) return img;
    ImageBuf g(img.width(), img.height(), 1);
    parallel_rows(img.height(), [&](int j0, int j1) {
        for (int j = j0; j < j1; ++j)
            for (int i = 0; i < img.width(); ++i) {
                float y = 0.299f * img.at(i, j, 0) + 0.587f * img.at(i, j, 1) +
                          0.114f * img.at(i, j, 2);
                g.set(i, j, 0, y);
                g.set_valid(i, j, img.valid(i, j));
            }
    });
    return g;
}

int bilinear_sample(const ImageBuf& img, double x, double y, float* out) {
    const int w = img.width(), h = img.height(), ch = img.channels();
    x = std::clamp(x, 0.0, static_cast<double>(w - 1));
    y = std::clamp(y, 0.0, static_cast<double>(h - 1));
    int x0 = static_cast<int>(std::floor(x));
    int y0 = static_cast<int>(std::floor(y));
    int x1 = std::min(x0 + 1, w - 1);
    int y1 = std::min(y0 + 1, h - 1);
    double fx = x - x0, fy = y - y0;

    const int xs[4] = {x0, x1, x0, x1};
    const int ys[4] = {y0, y0, y1, y1};
    const double ws[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};

    double wsum = 0.0;
    for (int k = 0; k < 4; ++k)
        if (img.valid(xs[k], ys[k])) wsum += ws[k];
    if (wsum <= 0.0) {
        for (int c = 0; c < ch; ++c) out[c] = 0.0f;
        return ch;
    }
    for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k)
            if (img.valid(xs[k], ys[k])) acc += ws[k] * img.at(xs[k], ys[k], c);
        out[c] = static_cast<float>(acc / wsum);
    }
    return ch;
}

RegionPartition compute_partition(const Mask& maskL, const Mask& maskR) {
    if (maskL.width != maskR.width || maskL.height != maskR.height)
        throw ContractError("compute_partition: mask dimensions differ");
    RegionPartition p;
    p.width = maskL.width;
    p.height = maskL.height;
    p.label.resize(static_cast<size_t>(p.width) * p.height);
    std::array<long, 4> counts{};
    for (size_t k = 0; k < p.label.size(); ++k) {
        bool l = maskL.v[k] != 0, r = maskR.v[k] != 0;
        Region reg = l ? (r ? Region::Area3 : Region::Area1)
                       : (r ? Region::Area2 : Region::Outside);
        p.label[k] = reg;
        ++counts[static_cast<size_t>(reg)];
    }
    p.counts = counts;
    return p;
}

CropResult crop_overlap(const ImageBuf& img, const RegionPartition& partition) {
    if (img.width() != partition.width || img.height() != partition.height)
        throw ContractError("crop_overlap: image and partition dimensions differ");
    if (partition.count(Region::Area3) == 0)
        throw EmptyRegionError("crop_overlap: no overlap (Area3 is empty)");

    int min_x = partition.width, min_y = partition.height, max_x = -1, max_y = -1;
    for (int j = 0; j < partition.height; ++j)
        for (int i = 0; i < partition.width; ++i)
            if (partition.at(i, j) == Region::Area3) {
                min_x = std::min(min_x, i);
                min_y = std::min(min_y, j);
                max_x = std::max(max_x, i);
                max_y = std::max(max_y, j);
            }

    CropResult out;
    out.offset_x = min_x;
    out.offset_y = min_y;
    out.image = ImageBuf(max_x - min_x + 1, max_y - min_y + 1, img.channels());
    for (int j = min_y; j <= max_y; ++j)
        for (int i = min_x; i <= max_x; ++i) {
            for (int c = 0; c < img.channels(); ++c)
                out.image.set(i - min_x, j - min_y, c, img.valid(i, j) ? img.at(i, j, c) : 0.0f);
            out.image.set_valid(i - min_x, j - min_y,
                                partition.at(i, j) == Region::Area3 && img.valid(i, j));
        }
    return out;
}

ImageBuf place_on_canvas(const ImageBuf& img, int offset_x, int offset_y,
                         int canvas_width, int canvas_height) {
    if (offset_x < 0 || offset_y < 0 || offset_x + img.width() > canvas_width ||
        offset_y + img.height() > canvas_height)
        throw LayoutError("place_on_canvas: image does not fit inside the canvas");
    ImageBuf canvas(canvas_width, canvas_height, img.channels(), 0.0f, false);
    for (int j = 0; j < img.height(); ++j)
        for (int i = 0; i < img.width(); ++i) {
            for (int c = 0; c < img.channels(); ++c)
                canvas.set(i + offset_x, j + offset_y, c, img.at(i, j, c));
            canvas.set_valid(i + offset_x, j + offset_y, img.valid(i, j));
        }
    return canvas;
}

} // namespace flowstitch

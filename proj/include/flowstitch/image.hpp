#ifndef FLOWSTITCH_IMAGE_HPP
#define FLOWSTITCH_IMAGE_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace flowstitch {

struct PixelCoord {
    int i = 0; // column
    int j = 0; // row
};

// Per-pixel boolean coverage raster.
struct Mask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> v;

    Mask() = default;
    Mask(int w, int h, bool fill = false)
        : width(w), height(h), v(static_cast<size_t>(w) * h, fill ? 1 : 0) {}

    bool at(int i, int j) const { return v[static_cast<size_t>(j) * width + i] != 0; }
    void set(int i, int j, bool b) { v[static_cast<size_t>(j) * width + i] = b ? 1 : 0; }
};

// Floating-point raster in [0,1], 1 or 3 channels, interleaved, with a
// validity mask marking where the image has content on the canvas.
class ImageBuf {
public:
    ImageBuf() = default;
    ImageBuf(int width, int height, int channels, float fill = 0.0f, bool valid = true);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    bool empty() const { return width_ == 0 || height_ == 0; }

    float at(int i, int j, int c) const {
        return data_[(static_cast<size_t>(j) * width_ + i) * channels_ + c];
    }
    void set(int i, int j, int c, float v) {
        data_[(static_cast<size_t>(j) * width_ + i) * channels_ + c] = v;
    }
    bool valid(int i, int j) const { return valid_[static_cast<size_t>(j) * width_ + i] != 0; }
    void set_valid(int i, int j, bool b) {
        valid_[static_cast<size_t>(j) * width_ + i] = b ? 1 : 0;
    }

    const std::vector<float>& data() const { return data_; }
    std::vector<float>& data() { return data_; }

    Mask valid_mask() const;

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<float> data_;
    std::vector<uint8_t> valid_;
};

enum class Region : uint8_t { Outside = 0, Area1 = 1, Area2 = 2, Area3 = 3 };

// Canvas split into L-only (Area1), R-only (Area2), overlap (Area3), Outside.
struct RegionPartition {
    int width = 0;
    int height = 0;
    std::vector<Region> label;
    std::array<long, 4> counts{}; // indexed by Region value

    Region at(int i, int j) const { return label[static_cast<size_t>(j) * width + i]; }
    long count(Region r) const { return counts[static_cast<size_t>(r)]; }
};

// Overlap crop plus the canvas offset of its bounding box.
struct CropResult {
    ImageBuf image;
    int offset_x = 0;
    int offset_y = 0;
};

// 8-bit PNG in, [0,1] floats out. Alpha >= 128 becomes the valid mask and the
// alpha channel is dropped; grayscale loads as channels=1.
ImageBuf load_image(const std::string& path);

// 8-bit PNG out. Writes an alpha channel iff any pixel is invalid.
void save_image(const ImageBuf& img, const std::string& path);

// Rec.601 luminance; grayscale input passes through.
ImageBuf to_gray(const ImageBuf& img);

// Clamp-to-edge bilinear lookup; invalid neighbors are renormalized out.
// Fills out[0..channels) and returns the number of channels written.
int bilinear_sample(const ImageBuf& img, double x, double y, float* out);

RegionPartition compute_partition(const Mask& maskL, const Mask& maskR);

// Bounding-box crop of Area3; non-Area3 pixels inside the box are invalid.
CropResult crop_overlap(const ImageBuf& img, const RegionPartition& partition);

// Places img onto an otherwise-invalid canvas at the given offset.
// The placement must fit entirely inside the canvas.
ImageBuf place_on_canvas(const ImageBuf& img, int offset_x, int offset_y,
                         int canvas_width, int canvas_height);

} // namespace flowstitch

#endif

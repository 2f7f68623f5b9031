#ifndef FLOWSTITCH_FLOW_HPP
#define FLOWSTITCH_FLOW_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "flowstitch/image.hpp"

namespace flowstitch {

// Dense displacement field in pixel units. Convention: dx displaces the
// column index i, dy the row index j. valid=false where the solve was
// degenerate at every pyramid level and the propagated fallback was kept.
struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<float> vec;      // interleaved (dx, dy)
    std::vector<uint8_t> valid;

    FlowField() = default;
    FlowField(int w, int h)
        : width(w), height(h),
          vec(static_cast<size_t>(w) * h * 2, 0.0f),
          valid(static_cast<size_t>(w) * h, 1) {}

    float dx(int i, int j) const { return vec[(static_cast<size_t>(j) * width + i) * 2]; }
    float dy(int i, int j) const { return vec[(static_cast<size_t>(j) * width + i) * 2 + 1]; }
    void set(int i, int j, float x, float y) {
        vec[(static_cast<size_t>(j) * width + i) * 2] = x;
        vec[(static_cast<size_t>(j) * width + i) * 2 + 1] = y;
    }
    bool is_valid(int i, int j) const { return valid[static_cast<size_t>(j) * width + i] != 0; }
};

struct FlowParams {
    int levels = 4;
    int window_radius = 8;         // per-level LK window is (2r+1)^2
    int iterations_per_level = 3;
    double min_eigen_eps = 1e-4;   // structure-tensor threshold, scaled by window area
    int smoothing_passes = 2;      // radius-1 box blurs of the flow per level

    void validate() const;
};

// Level 0 is the input; each next level is 5-tap binomial smoothed (1,4,6,4,1)/16
// then decimated by 2. Depth is reduced so the coarsest level stays >= 8x8.
std::vector<ImageBuf> build_pyramid(const ImageBuf& img, int levels);

// Coarse-to-fine dense LK. Returned d satisfies from(p) ~ to(p + d), i.e. it
// maps `from` coordinates into `to`.
FlowField dense_pyr_lk(const ImageBuf& from, const ImageBuf& to, const FlowParams& params);

// Returns {FlowLtoR, FlowRtoL}. FlowRtoL(p) displaces p so that L(p + d)
// matches R's content at p; symmetrically for FlowLtoR.
std::pair<FlowField, FlowField> bidirectional_flow(const ImageBuf& overlappedL,
                                                   const ImageBuf& overlappedR,
                                                   const FlowParams& params);

// Per-pixel Euclidean norm in pixels.
std::vector<float> flow_magnitude(const FlowField& flow);

// Copies a crop-sized field into a canvas-sized one at the crop offset;
// pixels outside the crop box get zero flow.
FlowField embed_flow(const FlowField& flow, int offset_x, int offset_y,
                     int canvas_width, int canvas_height);

// Middlebury .flo: "PIEH", int32 LE width/height, row-major interleaved
// float32 LE (dx, dy).
void write_flo(const FlowField& flow, const std::string& path);
FlowField read_flo(const std::string& path);

} // namespace flowstitch

#endif

#ifndef FLOWSTITCH_BLENDER_HPP
#define FLOWSTITCH_BLENDER_HPP

#include <utility>

#include "flowstitch/blend_field.hpp"
#include "flowstitch/flow.hpp"
#include "flowstitch/image.hpp"

namespace flowstitch {

struct BlendParams {
    double k_softmax_sharpness = 10.0;
    double k_flow_mag_coef = 0.05; // per pixel of flow magnitude

    void validate() const;
};

// Softmax weights for one overlap pixel: blend_l/blend_r are 1-b and b,
// mag_rtol/mag_ltor the per-pixel flow magnitudes. Returns {SoftmaxL, SoftmaxR}.
std::pair<double, double> softmax_weights(double blend_l, double blend_r,
                                          double mag_rtol, double mag_ltor,
                                          const BlendParams& params);

// Per-pixel flow blend: Area1 takes L, Area2 takes R, Area3 reverse-maps both
// sources along the scaled flow vectors and combines them with softmax
// weights biased by proximity and per-direction flow magnitude. Outside is
// zero and invalid. Flow fields are canvas-sized (zero outside the overlap
// crop box).
ImageBuf blend_pair(const ImageBuf& L, const ImageBuf& R,
                    const FlowField& flowLtoR, const FlowField& flowRtoL,
                    const BlendField& blend, const RegionPartition& partition,
                    const BlendParams& params);

// Linear baseline: Area3 is (1-b)*L + b*R, no warping.
ImageBuf feather_blend(const ImageBuf& L, const ImageBuf& R,
                       const BlendField& blend, const RegionPartition& partition);

// The two flow-warped source images the blend combines: copies of L and R
// whose Area3 pixels are replaced by the reverse-mapped samples ColorL/ColorR.
// Used to measure residual misalignment after warping.
std::pair<ImageBuf, ImageBuf> warp_constituents(const ImageBuf& L, const ImageBuf& R,
                                                const FlowField& flowLtoR,
                                                const FlowField& flowRtoL,
                                                const BlendField& blend,
                                                const RegionPartition& partition);

} // namespace flowstitch

#endif

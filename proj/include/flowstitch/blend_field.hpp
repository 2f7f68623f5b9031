#ifndef FLOWSTITCH_BLEND_FIELD_HPP
#define FLOWSTITCH_BLEND_FIELD_HPP

#include <string>
#include <vector>

#include "flowstitch/image.hpp"

namespace flowstitch {

// Euclidean distance to the nearest true mask pixel, exact.
struct DistanceField {
    int width = 0;
    int height = 0;
    std::vector<double> d;

    double at(int i, int j) const { return d[static_cast<size_t>(j) * width + i]; }
};

// Per-pixel blending coefficient: 0 on Area1, 1 on Area2,
// Lmin/(Lmin+Rmin) on Area3, 0.5 outside.
struct BlendField {
    int width = 0;
    int height = 0;
    std::vector<double> b;

    double at(int i, int j) const { return b[static_cast<size_t>(j) * width + i]; }
};

// Exact EDT by the two-pass separable parabola-envelope algorithm, O(w*h).
// Throws EmptyRegionError on an all-false mask.
DistanceField distance_transform(const Mask& mask);

BlendField compute_blend(const RegionPartition& partition);

// Debug view matching the coefficient field: b * 255 as 8-bit grayscale.
void save_blend_png(const BlendField& field, const std::string& path);

} // namespace flowstitch

#endif

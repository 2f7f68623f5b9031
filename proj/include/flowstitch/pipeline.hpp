#ifndef FLOWSTITCH_PIPELINE_HPP
#define FLOWSTITCH_PIPELINE_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flowstitch/blender.hpp"
#include "flowstitch/flow.hpp"
#include "flowstitch/image.hpp"

namespace flowstitch {

struct LayoutEntry {
    std::string path;
    int offset_x = 0;
    int offset_y = 0;
    std::optional<std::string> mask_path;
};

// Ordered placements on a fixed canvas; the ingestion contract for images
// that were already coarsely registered upstream.
struct CanvasLayout {
    int canvas_width = 0;
    int canvas_height = 0;
    std::vector<LayoutEntry> entries; // sorted left-to-right by offset_x
};

struct PairStats {
    long overlap_pixels = 0;
    double mean_flow_mag_ltor = 0.0;
    double mean_flow_mag_rtol = 0.0;
    std::optional<double> misalignment_before; // raw L vs R over the overlap
    std::optional<double> misalignment_after;  // flow-warped constituents
    double flow_seconds = 0.0;
    double blend_seconds = 0.0;
};

struct StitchReport {
    std::vector<PairStats> pairs;
    double total_seconds = 0.0;

    std::string to_json() const;
};

// An image already decoded and assigned a canvas offset.
struct PlacedImage {
    ImageBuf image;
    int offset_x = 0;
    int offset_y = 0;
};

// Parses and validates the layout JSON, including that every referenced
// image fits inside the canvas. Entries come back sorted by offset_x.
CanvasLayout parse_layout(const std::string& path);

// Left-to-right fold: the running panorama plays L, each new image plays R.
std::pair<ImageBuf, StitchReport> stitch_all(const CanvasLayout& layout,
                                             const FlowParams& flow_params,
                                             const BlendParams& blend_params);

// Same fold over already-loaded placements (sorted by offset_x by the caller).
std::pair<ImageBuf, StitchReport> stitch_placed(const std::vector<PlacedImage>& placed,
                                                int canvas_width, int canvas_height,
                                                const FlowParams& flow_params,
                                                const BlendParams& blend_params);

struct TranslationEstimate {
    int dx = 0;
    int dy = 0;
    double score = 0.0; // normalized cross-correlation, in [-1, 1]
};

// Exhaustive integer-shift NCC search; ties go to the smallest shift norm,
// then lexicographic (dx, dy).
TranslationEstimate estimate_translation(const ImageBuf& A, const ImageBuf& B, int max_shift);

// Mean NCC-matched patch displacement (pixels) over a grid of textured
// patch centers inside Area3. Search range is +-2*patch_radius per axis.
double misalignment_score(const ImageBuf& L, const ImageBuf& R,
                          const RegionPartition& partition,
                          int patch_radius = 8, int stride = 32);

} // namespace flowstitch

#endif

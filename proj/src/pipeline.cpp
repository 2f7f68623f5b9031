#include "flowstitch/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "flowstitch/blend_field.hpp"
#include "flowstitch/errors.hpp"
#include "flowstitch/parallel.hpp"
#include "png_io.hpp"

namespace flowstitch {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

nlohmann::json stats_json(const PairStats& s) {
    nlohmann::json j;
    j["overlap_pixels"] = s.overlap_pixels;
    j["mean_flow_mag_ltor"] = s.mean_flow_mag_ltor;
    j["mean_flow_mag_rtol"] = s.mean_flow_mag_rtol;
    j["misalignment_before"] =
        s.misalignment_before ? nlohmann::json(*s.misalignment_before) : nlohmann::json();
    j["misalignment_after"] =
        s.misalignment_after ? nlohmann::json(*s.misalignment_after) : nlohmann::json();
    j["flow_seconds"] = s.flow_seconds;
    j["blend_seconds"] = s.blend_seconds;
    return j;
}

double mean_of(const std::vector<float>& v) {
    if (v.empty()) return 0.0;
    double acc = 0.0;
    for (float x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

} // namespace

std::string StitchReport::to_json() const {
    nlohmann::json j;
    j["pairs"] = nlohmann::json::array();
    for (const auto& p : pairs) j["pairs"].push_back(stats_json(p));
    j["total_seconds"] = total_seconds;
    return j.dump(2);
}

CanvasLayout parse_layout(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open layout file: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw LayoutError(std::string("layout parse error: ") + e.what());
    }

    auto require = [&](const nlohmann::json& obj, const char* key) -> const nlohmann::json& {
        if (!obj.contains(key))
            throw LayoutError(std::string("layout: missing field \"") + key + "\"");
        return obj.at(key);
    };

    CanvasLayout layout;
    const auto& canvas = require(j, "canvas");
    if (!require(canvas, "width").is_number_integer() ||
        !require(canvas, "height").is_number_integer())
        throw LayoutError("layout: canvas.width/height must be integers");
    layout.canvas_width = canvas.at("width").get<int>();
    layout.canvas_height = canvas.at("height").get<int>();
    if (layout.canvas_width <= 0 || layout.canvas_height <= 0)
        throw LayoutError("layout: canvas dimensions must be positive");

    const auto& images = require(j, "images");
    if (!images.is_array()) throw LayoutError("layout: \"images\" must be an array");
    if (images.size() < 2) throw LayoutError("layout: at least two images required");

    for (const auto& e : images) {
        LayoutEntry entry;
        if (!require(e, "path").is_string())
            throw LayoutError("layout: images[].path must be a string");
        entry.path = e.at("path").get<std::string>();
        const auto& off = require(e, "offset");
        if (!require(off, "x").is_number_integer() || !require(off, "y").is_number_integer())
            throw LayoutError("layout: images[].offset.x/y must be integers");
        entry.offset_x = off.at("x").get<int>();
        entry.offset_y = off.at("y").get<int>();
        if (e.contains("mask") && !e.at("mask").is_null())
            entry.mask_path = e.at("mask").get<std::string>();

        int w = 0, h = 0;
        detail::read_png_size(entry.path, w, h);
        if (entry.offset_x < 0 || entry.offset_y < 0 ||
            entry.offset_x + w > layout.canvas_width ||
            entry.offset_y + h > layout.canvas_height)
            throw LayoutError("layout: \"" + entry.path + "\" does not fit inside the canvas");
        layout.entries.push_back(std::move(entry));
    }

    std::stable_sort(layout.entries.begin(), layout.entries.end(),
                     [](const LayoutEntry& a, const LayoutEntry& b) {
                         return a.offset_x < b.offset_x;
                     });
    return layout;
}

std::pair<ImageBuf, StitchReport> stitch_all(const CanvasLayout& layout,
                                             const FlowParams& flow_params,
                                             const BlendParams& blend_params) {
    std::vector<PlacedImage> placed;
    placed.reserve(layout.entries.size());
    for (const auto& entry : layout.entries) {
        PlacedImage p;
        p.image = load_image(entry.path);
        if (entry.mask_path) {
            ImageBuf m = load_image(*entry.mask_path);
            if (m.width() != p.image.width() || m.height() != p.image.height())
                throw LayoutError("layout: mask size differs from image: " + *entry.mask_path);
            for (int j = 0; j < m.height(); ++j)
                for (int i = 0; i < m.width(); ++i)
                    if (m.at(i, j, 0) < 128.0f / 255.0f) p.image.set_valid(i, j, false);
        }
        p.offset_x = entry.offset_x;
        p.offset_y = entry.offset_y;
        placed.push_back(std::move(p));
    }
    return stitch_placed(placed, layout.canvas_width, layout.canvas_height,
                         flow_params, blend_params);
}

std::pair<ImageBuf, StitchReport> stitch_placed(const std::vector<PlacedImage>& placed,
                                                int canvas_width, int canvas_height,
                                                const FlowParams& flow_params,
                                                const BlendParams& blend_params) {
    if (placed.size() < 2) throw ContractError("stitch: at least two images required");
    flow_params.validate();
    blend_params.validate();

    auto t_start = Clock::now();
    StitchReport report;
    ImageBuf pano = place_on_canvas(placed[0].image, placed[0].offset_x, placed[0].offset_y,
                                    canvas_width, canvas_height);

    for (size_t k = 1; k < placed.size(); ++k) {
        ImageBuf next = place_on_canvas(placed[k].image, placed[k].offset_x, placed[k].offset_y,
                                        canvas_width, canvas_height);
        if (pano.channels() != next.channels())
            throw ContractError("stitch: mixed grayscale and color inputs");

        RegionPartition partition = compute_partition(pano.valid_mask(), next.valid_mask());
        if (partition.count(Region::Area3) == 0)
            throw EmptyRegionError("stitch: no overlap between the panorama and image #" +
                                   std::to_string(k));

        PairStats stats;
        stats.overlap_pixels = partition.count(Region::Area3);

        CropResult crop_l = crop_overlap(pano, partition);
        CropResult crop_r = crop_overlap(next, partition);

        auto t_flow = Clock::now();
        auto [flow_ltor_crop, flow_rtol_crop] =
            bidirectional_flow(crop_l.image, crop_r.image, flow_params);
        stats.flow_seconds = seconds_since(t_flow);
        stats.mean_flow_mag_ltor = mean_of(flow_magnitude(flow_ltor_crop));
        stats.mean_flow_mag_rtol = mean_of(flow_magnitude(flow_rtol_crop));

        FlowField flow_ltor = embed_flow(flow_ltor_crop, crop_l.offset_x, crop_l.offset_y,
                                         canvas_width, canvas_height);
        FlowField flow_rtol = embed_flow(flow_rtol_crop, crop_l.offset_x, crop_l.offset_y,
                                         canvas_width, canvas_height);

        BlendField blend = compute_blend(partition);

        try {
            stats.misalignment_before = misalignment_score(pano, next, partition);
        } catch (const EmptyRegionError&) {
        }

        auto t_blend = Clock::now();
        ImageBuf blended = blend_pair(pano, next, flow_ltor, flow_rtol, blend, partition,
                                      blend_params);
        stats.blend_seconds = seconds_since(t_blend);

        try {
            auto [warped_l, warped_r] =
                warp_constituents(pano, next, flow_ltor, flow_rtol, blend, partition);
            stats.misalignment_after = misalignment_score(warped_l, warped_r, partition);
        } catch (const EmptyRegionError&) {
        }

        // output coverage is the union of the two inputs
        for (int j = 0; j < canvas_height; ++j)
            for (int i = 0; i < canvas_width; ++i)
                blended.set_valid(i, j, pano.valid(i, j) || next.valid(i, j));

        pano = std::move(blended);
        report.pairs.push_back(stats);
    }

    report.total_seconds = seconds_since(t_start);
    return {std::move(pano), std::move(report)};
}

namespace {

struct PatchStats {
    double mean = 0.0;
    double var = 0.0;
};

PatchStats patch_stats(const ImageBuf& g, int cx, int cy, int r) {
    double sum = 0.0, sum2 = 0.0;
    int n = (2 * r + 1) * (2 * r + 1);
    for (int j = cy - r; j <= cy + r; ++j)
        for (int i = cx - r; i <= cx + r; ++i) {
            double v = g.at(i, j, 0);
            sum += v;
            sum2 += v * v;
        }
    PatchStats s;
    s.mean = sum / n;
    s.var = sum2 / n - s.mean * s.mean;
    return s;
}

double patch_ncc(const ImageBuf& a, int ax, int ay, const ImageBuf& b, int bx, int by, int r,
                 const PatchStats& sa, const PatchStats& sb) {
    if (sa.var <= 1e-12 || sb.var <= 1e-12) return -2.0;
    double cov = 0.0;
    int n = (2 * r + 1) * (2 * r + 1);
    for (int dj = -r; dj <= r; ++dj)
        for (int di = -r; di <= r; ++di)
            cov += (a.at(ax + di, ay + dj, 0) - sa.mean) * (b.at(bx + di, by + dj, 0) - sb.mean);
    cov /= n;
    return cov / std::sqrt(sa.var * sb.var);
}

// fixed tie-break: better score, then smaller shift norm, then lexicographic
bool better_candidate(double score, int dx, int dy, double best_score, int best_dx, int best_dy) {
    if (score > best_score + 1e-12) return true;
    if (score < best_score - 1e-12) return false;
    long n2 = static_cast<long>(dx) * dx + static_cast<long>(dy) * dy;
    long b2 = static_cast<long>(best_dx) * best_dx + static_cast<long>(best_dy) * best_dy;
    if (n2 != b2) return n2 < b2;
    if (dx != best_dx) return dx < best_dx;
    return dy < best_dy;
}

} // namespace

TranslationEstimate estimate_translation(const ImageBuf& A, const ImageBuf& B, int max_shift) {
    if (A.channels() != 1 || B.channels() != 1)
        throw ContractError("estimate_translation: grayscale inputs required");
    if (A.width() != B.width() || A.height() != B.height())
        throw ContractError("estimate_translation: dimension mismatch");
    if (max_shift > std::min(A.width(), A.height()) / 4)
        throw ContractError("estimate_translation: max_shift too large for the image size");

    const int w = A.width(), h = A.height();
    TranslationEstimate best;
    best.score = -2.0;
    bool any = false;

    for (int dy = -max_shift; dy <= max_shift; ++dy)
        for (int dx = -max_shift; dx <= max_shift; ++dx) {
            // overlap of A(x, y) with B(x + dx, y + dy)
            int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
            int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
            if (x1 <= x0 || y1 <= y0) continue;
            long n = static_cast<long>(x1 - x0) * (y1 - y0);

            double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) {
                    double va = A.at(x, y, 0);
                    double vb = B.at(x + dx, y + dy, 0);
                    sa += va;
                    sb += vb;
                    saa += va * va;
                    sbb += vb * vb;
                    sab += va * vb;
                }
            double va = saa / n - (sa / n) * (sa / n);
            double vb = sbb / n - (sb / n) * (sb / n);
            if (va <= 1e-12 || vb <= 1e-12) continue;
            double ncc = (sab / n - (sa / n) * (sb / n)) / std::sqrt(va * vb);
            any = true;
            if (better_candidate(ncc, dx, dy, best.score, best.dx, best.dy)) {
                best.dx = dx;
                best.dy = dy;
                best.score = ncc;
            }
        }

    if (!any) throw EmptyRegionError("estimate_translation: no texture");
    return best;
}

double misalignment_score(const ImageBuf& L, const ImageBuf& R,
                          const RegionPartition& partition,
                          int patch_radius, int stride) {
    if (L.width() != R.width() || L.height() != R.height() ||
        L.width() != partition.width || L.height() != partition.height)
        throw ContractError("misalignment_score: dimension mismatch");
    if (partition.count(Region::Area3) == 0)
        throw ContractError("misalignment_score: Area3 is empty");
    if (patch_radius < 1 || stride < 1)
        throw ContractError("misalignment_score: patch_radius and stride must be >= 1");

    ImageBuf gl = to_gray(L);
    ImageBuf gr = to_gray(R);
    const int w = gl.width(), h = gl.height();
    const int r = patch_radius;
    const int search = 2 * patch_radius;

    // prefix counts so footprint checks are O(1): patch centers need their
    // whole footprint inside Area3, candidates need valid R content
    std::vector<int> area3_sum(static_cast<size_t>(w + 1) * (h + 1), 0);
    std::vector<int> rvalid_sum(static_cast<size_t>(w + 1) * (h + 1), 0);
    for (int j = 0; j < h; ++j)
        for (int i = 0; i < w; ++i) {
            size_t idx = static_cast<size_t>(j + 1) * (w + 1) + i + 1;
            size_t up = idx - (w + 1);
            area3_sum[idx] = (partition.at(i, j) == Region::Area3 ? 1 : 0) +
                             area3_sum[idx - 1] + area3_sum[up] - area3_sum[up - 1];
            rvalid_sum[idx] = (gr.valid(i, j) ? 1 : 0) +
                              rvalid_sum[idx - 1] + rvalid_sum[up] - rvalid_sum[up - 1];
        }
    auto box_count = [&](const std::vector<int>& sum, int cx, int cy) {
        int x0 = cx - r, y0 = cy - r, x1 = cx + r + 1, y1 = cy + r + 1;
        return sum[static_cast<size_t>(y1) * (w + 1) + x1] -
               sum[static_cast<size_t>(y1) * (w + 1) + x0] -
               sum[static_cast<size_t>(y0) * (w + 1) + x1] +
               sum[static_cast<size_t>(y0) * (w + 1) + x0];
    };
    const int full_patch = (2 * r + 1) * (2 * r + 1);

    std::vector<int> grid_rows;
    for (int cy = r; cy < h - r; cy += stride) grid_rows.push_back(cy);

    // per-grid-row partial sums, combined in fixed order below
    std::vector<double> row_total(grid_rows.size(), 0.0);
    std::vector<long> row_matched(grid_rows.size(), 0);
    parallel_rows(static_cast<int>(grid_rows.size()), [&](int g0, int g1) {
        for (int g = g0; g < g1; ++g) {
            int cy = grid_rows[g];
            for (int cx = r; cx < w - r; cx += stride) {
                if (box_count(area3_sum, cx, cy) != full_patch) continue;
                PatchStats sl = patch_stats(gl, cx, cy, r);
                if (sl.var < 1e-4) continue; // flat patch, nothing to match

                double best_score = -2.0;
                int best_dx = 0, best_dy = 0;
                bool found = false;
                for (int dy = -search; dy <= search; ++dy)
                    for (int dx = -search; dx <= search; ++dx) {
                        int bx = cx + dx, by = cy + dy;
                        if (bx - r < 0 || bx + r >= w || by - r < 0 || by + r >= h) continue;
                        if (box_count(rvalid_sum, bx, by) != full_patch) continue;
                        PatchStats sr = patch_stats(gr, bx, by, r);
                        double ncc = patch_ncc(gl, cx, cy, gr, bx, by, r, sl, sr);
                        if (ncc < -1.5) continue;
                        found = true;
                        if (better_candidate(ncc, dx, dy, best_score, best_dx, best_dy)) {
                            best_score = ncc;
                            best_dx = dx;
                            best_dy = dy;
                        }
                    }
                if (!found) continue;
                row_total[g] += std::sqrt(static_cast<double>(best_dx) * best_dx +
                                          static_cast<double>(best_dy) * best_dy);
                ++row_matched[g];
            }
        }
    });

    double total = 0.0;
    long matched = 0;
    for (size_t g = 0; g < grid_rows.size(); ++g) {
        total += row_total[g];
        matched += row_matched[g];
    }
    if (matched == 0) throw EmptyRegionError("misalignment_score: no textured patches");
    return total / static_cast<double>(matched);
}

} // namespace flowstitch

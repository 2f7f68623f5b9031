// flowstitch: flow computation, pair blending, full stitching, and metrics.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "flowstitch/blend_field.hpp"
#include "flowstitch/blender.hpp"
#include "flowstitch/errors.hpp"
#include "flowstitch/flow.hpp"
#include "flowstitch/parallel.hpp"
#include "flowstitch/pipeline.hpp"

namespace {

using namespace flowstitch;

struct PairSetup {
    ImageBuf left_canvas;
    ImageBuf right_canvas;
    RegionPartition partition;
};

bool parse_xy(const std::string& s, int& x, int& y) {
    return std::sscanf(s.c_str(), "%d,%d", &x, &y) == 2;
}

bool parse_wh(const std::string& s, int& w, int& h) {
    return std::sscanf(s.c_str(), "%dx%d", &w, &h) == 2;
}

PairSetup load_pair(const std::string& left, const std::string& right,
                    const std::string& left_off, const std::string& right_off,
                    const std::string& canvas) {
    int lx, ly, rx, ry, cw, chh;
    if (!parse_xy(left_off, lx, ly) || !parse_xy(right_off, rx, ry))
        throw ContractError("offsets must be given as X,Y");
    if (!parse_wh(canvas, cw, chh))
        throw ContractError("canvas must be given as WxH");
    PairSetup s;
    s.left_canvas = place_on_canvas(load_image(left), lx, ly, cw, chh);
    s.right_canvas = place_on_canvas(load_image(right), rx, ry, cw, chh);
    s.partition = compute_partition(s.left_canvas.valid_mask(), s.right_canvas.valid_mask());
    if (s.partition.count(Region::Area3) == 0)
        throw EmptyRegionError("no overlap between the two placements");
    return s;
}

void print_params(int verbosity, const FlowParams& fp, const BlendParams& bp) {
    if (verbosity < 1) return;
    std::cerr << "flow: levels=" << fp.levels << " window=" << fp.window_radius
              << " iters=" << fp.iterations_per_level << " eigen-eps=" << fp.min_eigen_eps
              << " smoothing=" << fp.smoothing_passes << "\n"
              << "blend: k-sharpness=" << bp.k_softmax_sharpness
              << " k-flowmag=" << bp.k_flow_mag_coef << "\n"
              << "threads: " << resolved_thread_count() << "\n";
}

int run(int argc, char** argv) {
    CLI::App app{"Panorama blending with asymmetric bidirectional optical flow"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may appear after the subcommand

    FlowParams fp;
    BlendParams bp;
    int threads = 0;
    int verbosity = 0;
    app.add_option("--threads", threads, "Worker threads, 0 = auto")->envname("FLOWSTITCH_THREADS");
    app.add_flag("-v,--verbose", verbosity, "Increase verbosity");

    auto add_flow_opts = [&](CLI::App* cmd) {
        cmd->add_option("--levels", fp.levels, "Pyramid levels");
        cmd->add_option("--window", fp.window_radius, "LK window radius");
        cmd->add_option("--iters", fp.iterations_per_level, "Iterations per level");
        cmd->add_option("--eigen-eps", fp.min_eigen_eps, "Structure tensor threshold");
        cmd->add_option("--smoothing", fp.smoothing_passes, "Flow box-blur passes per level");
    };
    auto add_blend_opts = [&](CLI::App* cmd) {
        cmd->add_option("--k-sharpness", bp.k_softmax_sharpness, "Softmax sharpness");
        cmd->add_option("--k-flowmag", bp.k_flow_mag_coef, "Flow magnitude coefficient");
    };

    // flow
    std::string from_path, to_path, out_path;
    auto* cmd_flow = app.add_subcommand("flow", "Dense flow between two images, written as .flo");
    cmd_flow->add_option("--from", from_path, "Source image")->required();
    cmd_flow->add_option("--to", to_path, "Target image")->required();
    cmd_flow->add_option("--out", out_path, "Output .flo path")->required();
    add_flow_opts(cmd_flow);

    // blend
    std::string left_path, right_path, left_off = "0,0", right_off = "0,0", canvas;
    std::string blend_dump;
    auto* cmd_blend = app.add_subcommand("blend", "Blend two placed images");
    cmd_blend->add_option("--left", left_path, "Left image")->required();
    cmd_blend->add_option("--right", right_path, "Right image")->required();
    cmd_blend->add_option("--left-offset", left_off, "Left placement X,Y");
    cmd_blend->add_option("--right-offset", right_off, "Right placement X,Y");
    cmd_blend->add_option("--canvas", canvas, "Canvas size WxH")->required();
    cmd_blend->add_option("--out", out_path, "Output PNG")->required();
    cmd_blend->add_option("--dump-blend", blend_dump, "Also write the blend field as grayscale PNG");
    add_flow_opts(cmd_blend);
    add_blend_opts(cmd_blend);

    // stitch
    std::string layout_path, report_path;
    auto* cmd_stitch = app.add_subcommand("stitch", "Stitch all images of a layout");
    cmd_stitch->add_option("--layout", layout_path, "Layout JSON")->required();
    cmd_stitch->add_option("--out", out_path, "Output PNG")->required();
    cmd_stitch->add_option("--report", report_path, "Write the stitch report JSON here");
    add_flow_opts(cmd_stitch);
    add_blend_opts(cmd_stitch);

    // metrics
    int patch_radius = 8, stride = 32;
    bool as_json = false;
    auto* cmd_metrics = app.add_subcommand("metrics", "Misalignment score over the overlap");
    cmd_metrics->add_option("--left", left_path, "Left image")->required();
    cmd_metrics->add_option("--right", right_path, "Right image")->required();
    cmd_metrics->add_option("--left-offset", left_off, "Left placement X,Y");
    cmd_metrics->add_option("--right-offset", right_off, "Right placement X,Y");
    cmd_metrics->add_option("--canvas", canvas, "Canvas size WxH")->required();
    cmd_metrics->add_option("--patch-radius", patch_radius, "NCC patch radius");
    cmd_metrics->add_option("--stride", stride, "Patch grid stride");
    cmd_metrics->add_flag("--json", as_json, "Print the score as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    set_thread_count(threads);

    try {
        fp.validate();
        bp.validate();
        print_params(verbosity, fp, bp);

        if (*cmd_flow) {
            ImageBuf from = to_gray(load_image(from_path));
            ImageBuf to = to_gray(load_image(to_path));
            FlowField flow = dense_pyr_lk(from, to, fp);
            write_flo(flow, out_path);
        } else if (*cmd_blend) {
            PairSetup s = load_pair(left_path, right_path, left_off, right_off, canvas);
            CropResult crop_l = crop_overlap(s.left_canvas, s.partition);
            CropResult crop_r = crop_overlap(s.right_canvas, s.partition);
            auto [ltor, rtol] = bidirectional_flow(crop_l.image, crop_r.image, fp);
            FlowField ltor_c = embed_flow(ltor, crop_l.offset_x, crop_l.offset_y,
                                          s.partition.width, s.partition.height);
            FlowField rtol_c = embed_flow(rtol, crop_l.offset_x, crop_l.offset_y,
                                          s.partition.width, s.partition.height);
            BlendField blend = compute_blend(s.partition);
            if (!blend_dump.empty()) save_blend_png(blend, blend_dump);
            ImageBuf out = blend_pair(s.left_canvas, s.right_canvas, ltor_c, rtol_c, blend,
                                      s.partition, bp);
            save_image(out, out_path);
        } else if (*cmd_stitch) {
            CanvasLayout layout = parse_layout(layout_path);
            auto [pano, report] = stitch_all(layout, fp, bp);
            save_image(pano, out_path);
            if (!report_path.empty()) {
                std::ofstream rf(report_path);
                if (!rf) throw IoError("cannot open for writing: " + report_path);
                rf << report.to_json() << "\n";
            }
            if (verbosity >= 1) std::cerr << report.to_json() << "\n";
        } else if (*cmd_metrics) {
            PairSetup s = load_pair(left_path, right_path, left_off, right_off, canvas);
            double score = misalignment_score(s.left_canvas, s.right_canvas, s.partition,
                                              patch_radius, stride);
            if (as_json)
                std::cout << "{\"misalignment_px\": " << score << "}\n";
            else
                std::cout << score << "\n";
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) { return run(argc, argv); }

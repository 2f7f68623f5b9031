#include "flowstitch/blender.hpp"

#include <algorithm>
#include <cmath>

#include "flowstitch/errors.hpp"
#include "flowstitch/parallel.hpp"

namespace flowstitch {

void BlendParams::validate() const {
    if (!(k_softmax_sharpness > 0.0) || !std::isfinite(k_softmax_sharpness))
        throw ContractError("BlendParams: k_softmax_sharpness must be finite and > 0");
    if (k_flow_mag_coef < 0.0 || !std::isfinite(k_flow_mag_coef))
        throw ContractError("BlendParams: k_flow_mag_coef must be finite and >= 0");
}

std::pair<double, double> softmax_weights(double blend_l, double blend_r,
                                          double mag_rtol, double mag_ltor,
                                          const BlendParams& params) {
    double flow_l = 1.0 + params.k_flow_mag_coef * mag_rtol;
    double flow_r = 1.0 + params.k_flow_mag_coef * mag_ltor;
    double arg_l = params.k_softmax_sharpness * blend_l * flow_l;
    double arg_r = params.k_softmax_sharpness * blend_r * flow_r;
    // subtract the max so neither exponential can overflow
    double m = std::max(arg_l, arg_r);
    double el = std::exp(arg_l - m);
    double er = std::exp(arg_r - m);
    return {el / (el + er), er / (el + er)};
}

namespace {

void check_canvas(const ImageBuf& L, const ImageBuf& R, const RegionPartition& partition) {
    if (L.width() != R.width() || L.height() != R.height() ||
        L.width() != partition.width || L.height() != partition.height ||
        L.channels() != R.channels())
        throw ContractError("blend: canvas dimensions or channel counts differ");
}

} // namespace

ImageBuf blend_pair(const ImageBuf& L, const ImageBuf& R,
                    const FlowField& flowLtoR, const FlowField& flowRtoL,
                    const BlendField& blend, const RegionPartition& partition,
                    const BlendParams& params) {
    params.validate();
    check_canvas(L, R, partition);
    if (flowLtoR.width != partition.width || flowLtoR.height != partition.height ||
        flowRtoL.width != partition.width || flowRtoL.height != partition.height ||
        blend.width != partition.width || blend.height != partition.height)
        throw ContractError("blend_pair: flow or blend field dimensions differ from canvas");
    for (float v : flowLtoR.vec)
        if (!std::isfinite(v)) throw ContractError("blend_pair: non-finite flow");
    for (float v : flowRtoL.vec)
        if (!std::isfinite(v)) throw ContractError("blend_pair: non-finite flow");

    const int w = partition.width, h = partition.height, ch = L.channels();
    ImageBuf F(w, h, ch, 0.0f, true);

    parallel_rows(h, [&](int j0, int j1) {
        float color_l[3], color_r[3];
        for (int j = j0; j < j1; ++j)
            for (int i = 0; i < w; ++i) {
                switch (partition.at(i, j)) {
                    case Region::Area1:
                        for (int c = 0; c < ch; ++c) F.set(i, j, c, L.at(i, j, c));
                        break;
                    case Region::Area2:
                        for (int c = 0; c < ch; ++c) F.set(i, j, c, R.at(i, j, c));
                        break;
                    case Region::Area3: {
                        double blend_r = blend.at(i, j);
                        double blend_l = 1.0 - blend_r;
                        float rl_x = flowRtoL.dx(i, j), rl_y = flowRtoL.dy(i, j);
                        float lr_x = flowLtoR.dx(i, j), lr_y = flowLtoR.dy(i, j);
                        bilinear_sample(L, i + rl_x * (1.0 - blend_l),
                                        j + rl_y * (1.0 - blend_l), color_l);
                        bilinear_sample(R, i + lr_x * (1.0 - blend_r),
                                        j + lr_y * (1.0 - blend_r), color_r);
                        double mag_rl = std::sqrt(static_cast<double>(rl_x) * rl_x +
                                                  static_cast<double>(rl_y) * rl_y);
                        double mag_lr = std::sqrt(static_cast<double>(lr_x) * lr_x +
                                                  static_cast<double>(lr_y) * lr_y);
                        auto [sl, sr] = softmax_weights(blend_l, blend_r, mag_rl, mag_lr, params);
                        for (int c = 0; c < ch; ++c) {
                            double v = color_l[c] * sl + color_r[c] * sr;
                            F.set(i, j, c, static_cast<float>(std::clamp(v, 0.0, 1.0)));
                        }
                        break;
                    }
                    case Region::Outside:
                        for (int c = 0; c < ch; ++c) F.set(i, j, c, 0.0f);
                        F.set_valid(i, j, false);
                        break;
                }
            }
    });
    return F;
}

ImageBuf feather_blend(const ImageBuf& L, const ImageBuf& R,
                       const BlendField& blend, const RegionPartition& partition) {
    check_canvas(L, R, partition);
    if (blend.width != partition.width || blend.height != partition.height)
        throw ContractError("feather_blend: blend field dimensions differ from canvas");

    const int w = partition.width, h = partition.height, ch = L.channels();
    ImageBuf F(w, h, ch, 0.0f, true);
    parallel_rows(h, [&](int j0, int j1) {
        for (int j = j0; j < j1; ++j)
            for (int i = 0; i < w; ++i) {
                switch (partition.at(i, j)) {
                    case Region::Area1:
                        for (int c = 0; c < ch; ++c) F.set(i, j, c, L.at(i, j, c));
                        break;
                    case Region::Area2:
                        for (int c = 0; c < ch; ++c) F.set(i, j, c, R.at(i, j, c));
                        break;
                    case Region::Area3: {
                        double b = blend.at(i, j);
                        for (int c = 0; c < ch; ++c) {
                            double v = (1.0 - b) * L.at(i, j, c) + b * R.at(i, j, c);
                            F.set(i, j, c, static_cast<float>(std::clamp(v, 0.0, 1.0)));
                        }
                        break;
                    }
                    case Region::Outside:
                        F.set_valid(i, j, false);
                        break;
                }
            }
    });
    return F;
}

std::pair<ImageBuf, ImageBuf> warp_constituents(const ImageBuf& L, const ImageBuf& R,
                                                const FlowField& flowLtoR,
                                                const FlowField& flowRtoL,
                                                const BlendField& blend,
                                                const RegionPartition& partition) {
    check_canvas(L, R, partition);
    const int w = partition.width, h = partition.height, ch = L.channels();
    ImageBuf warped_l = L, warped_r = R;
    parallel_rows(h, [&](int j0, int j1) {
        float color[3];
        for (int j = j0; j < j1; ++j)
            for (int i = 0; i < w; ++i) {
                if (partition.at(i, j) != Region::Area3) continue;
                double blend_r = blend.at(i, j);
                double blend_l = 1.0 - blend_r;
                bilinear_sample(L, i + flowRtoL.dx(i, j) * (1.0 - blend_l),
                                j + flowRtoL.dy(i, j) * (1.0 - blend_l), color);
                for (int c = 0; c < ch; ++c) warped_l.set(i, j, c, color[c]);
                warped_l.set_valid(i, j, true);
                bilinear_sample(R, i + flowLtoR.dx(i, j) * (1.0 - blend_r),
                                j + flowLtoR.dy(i, j) * (1.0 - blend_r), color);
                for (int c = 0; c < ch; ++c) warped_r.set(i, j, c, color[c]);
                warped_r.set_valid(i, j, true);
            }
    });
    return {std::move(warped_l), std::move(warped_r)};
}

} // namespace flowstitch

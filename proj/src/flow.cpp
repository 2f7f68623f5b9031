#include "flowstitch/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <future>

#include "flowstitch/errors.hpp"
#include "flowstitch/parallel.hpp"

namespace flowstitch {

void FlowParams::validate() const {
    if (levels < 1) throw ContractError("FlowParams: levels must be >= 1");
    if (window_radius < 1) throw ContractError("FlowParams: window_radius must be >= 1");
    if (iterations_per_level < 1) throw ContractError("FlowParams: iterations_per_level must be >= 1");
    if (!(min_eigen_eps > 0.0)) throw ContractError("FlowParams: min_eigen_eps must be > 0");
    if (smoothing_passes < 0) throw ContractError("FlowParams: smoothing_passes must be >= 0");
}

namespace {

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Separable (1,4,6,4,1)/16 smoothing with clamped borders, then take
// even-indexed pixels.
ImageBuf downsample(const ImageBuf& img) {
    const int w = img.width(), h = img.height();
    const float k[5] = {1.f / 16, 4.f / 16, 6.f / 16, 4.f / 16, 1.f / 16};

    ImageBuf tmp(w, h, 1);
    parallel_rows(h, [&](int j0, int j1) {
        for (int j = j0; j < j1; ++j)
            for (int i = 0; i < w; ++i) {
                float acc = 0.f;
                for (int t = -2; t <= 2; ++t)
                    acc += k[t + 2] * img.at(clampi(i + t, 0, w - 1), j, 0);
                tmp.set(i, j, 0, acc);
            }
    });

    const int ow = std::max(1, w / 2), oh = std::max(1, h / 2);
    ImageBuf out(ow, oh, 1);
    parallel_rows(oh, [&](int j0, int j1) {
        for (int j = j0; j < j1; ++j)
            for (int i = 0; i < ow; ++i) {
                float acc = 0.f;
                for (int t = -2; t <= 2; ++t)
                    acc += k[t + 2] * tmp.at(2 * i, clampi(2 * j + t, 0, h - 1), 0);
                out.set(i, j, 0, acc);
            }
    });
    return out;
}

// Window sums via an inclusive 2-D prefix table, clamped at the borders.
class WindowSums {
public:
    WindowSums(int w, int h) : w_(w), h_(h), tab_(static_cast<size_t>(w + 1) * (h + 1), 0.0) {}

    void build(const std::vector<double>& img) {
        // row prefix
        parallel_rows(h_, [&](int j0, int j1) {
            for (int j = j0; j < j1; ++j) {
                double run = 0.0;
                double* row = tab_.data() + static_cast<size_t>(j + 1) * (w_ + 1);
                const double* src = img.data() + static_cast<size_t>(j) * w_;
                row[0] = 0.0;
                for (int i = 0; i < w_; ++i) {
                    run += src[i];
                    row[i + 1] = run;
                }
            }
        });
        // column accumulate, parallel across columns
        parallel_rows(w_ + 1, [&](int i0, int i1) {
            for (int i = i0; i < i1; ++i)
                for (int j = 1; j <= h_; ++j)
                    tab_[static_cast<size_t>(j) * (w_ + 1) + i] +=
                        tab_[static_cast<size_t>(j - 1) * (w_ + 1) + i];
        });
    }

    double sum(int i, int j, int r) const {
        int x0 = clampi(i - r, 0, w_ - 1), x1 = clampi(i + r, 0, w_ - 1);
        int y0 = clampi(j - r, 0, h_ - 1), y1 = clampi(j + r, 0, h_ - 1);
        const size_t s = w_ + 1;
        return tab_[(y1 + 1) * s + x1 + 1] - tab_[(y1 + 1) * s + x0] -
               tab_[y0 * s + x1 + 1] + tab_[y0 * s + x0];
    }

private:
    int w_, h_;
    std::vector<double> tab_;
};

// Bilinear lookup on a grayscale level ignoring validity (levels are dense).
inline float sample_level(const ImageBuf& img, double x, double y) {
    const int w = img.width(), h = img.height();
    x = std::clamp(x, 0.0, static_cast<double>(w - 1));
    y = std::clamp(y, 0.0, static_cast<double>(h - 1));
    int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
    int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
    double fx = x - x0, fy = y - y0;
    return static_cast<float>((1 - fx) * (1 - fy) * img.at(x0, y0, 0) +
                              fx * (1 - fy) * img.at(x1, y0, 0) +
                              (1 - fx) * fy * img.at(x0, y1, 0) +
                              fx * fy * img.at(x1, y1, 0));
}

void box_blur_component(std::vector<float>& comp, int w, int h) {
    std::vector<float> src = comp;
    parallel_rows(h, [&](int j0, int j1) {
        for (int j = j0; j < j1; ++j)
            for (int i = 0; i < w; ++i) {
                double acc = 0.0;
                int n = 0;
                for (int dj = -1; dj <= 1; ++dj)
                    for (int di = -1; di <= 1; ++di) {
                        int x = i + di, y = j + dj;
                        if (x < 0 || x >= w || y < 0 || y >= h) continue;
                        acc += src[static_cast<size_t>(y) * w + x];
                        ++n;
                    }
                comp[static_cast<size_t>(j) * w + i] = static_cast<float>(acc / n);
            }
    });
}

struct LevelFlow {
    int w = 0, h = 0;
    std::vector<float> dx, dy;
    std::vector<uint8_t> ever_ok;
};

LevelFlow upsample_flow(const LevelFlow& coarse, int fw, int fh) {
    LevelFlow fine;
    fine.w = fw;
    fine.h = fh;
    fine.dx.resize(static_cast<size_t>(fw) * fh);
    fine.dy.resize(static_cast<size_t>(fw) * fh);
    fine.ever_ok.resize(static_cast<size_t>(fw) * fh);
    const double sx = static_cast<double>(coarse.w) / fw;
    const double sy = static_cast<double>(coarse.h) / fh;
    parallel_rows(fh, [&](int j0, int j1) {
        for (int j = j0; j < j1; ++j)
            for (int i = 0; i < fw; ++i) {
                double xc = std::clamp((i + 0.5) * sx - 0.5, 0.0, coarse.w - 1.0);
                double yc = std::clamp((j + 0.5) * sy - 0.5, 0.0, coarse.h - 1.0);
                int x0 = static_cast<int>(xc), y0 = static_cast<int>(yc);
                int x1 = std::min(x0 + 1, coarse.w - 1), y1 = std::min(y0 + 1, coarse.h - 1);
                double fx = xc - x0, fy = yc - y0;
                auto lerp = [&](const std::vector<float>& f) {
                    return (1 - fx) * (1 - fy) * f[static_cast<size_t>(y0) * coarse.w + x0] +
                           fx * (1 - fy) * f[static_cast<size_t>(y0) * coarse.w + x1] +
                           (1 - fx) * fy * f[static_cast<size_t>(y1) * coarse.w + x0] +
                           fx * fy * f[static_cast<size_t>(y1) * coarse.w + x1];
                };
                size_t idx = static_cast<size_t>(j) * fw + i;
                fine.dx[idx] = static_cast<float>(2.0 * lerp(coarse.dx));
                fine.dy[idx] = static_cast<float>(2.0 * lerp(coarse.dy));
                int xn = clampi(static_cast<int>(std::lround(xc)), 0, coarse.w - 1);
                int yn = clampi(static_cast<int>(std::lround(yc)), 0, coarse.h - 1);
                fine.ever_ok[idx] = coarse.ever_ok[static_cast<size_t>(yn) * coarse.w + xn];
            }
    });
    return fine;
}

} // namespace

std::vector<ImageBuf> build_pyramid(const ImageBuf& img, int levels) {
    if (img.channels() != 1) throw ContractError("build_pyramid: grayscale input required");
    if (levels < 1) throw ContractError("build_pyramid: levels must be >= 1");

    // shrink depth so the coarsest level stays at least 8x8
    int usable = 1;
    int w = img.width(), h = img.height();
    while (usable < levels && w / 2 >= 8 && h / 2 >= 8) {
        w /= 2;
        h /= 2;
        ++usable;
    }

    std::vector<ImageBuf> pyr;
    pyr.reserve(usable);
    pyr.push_back(img);
    for (int l = 1; l < usable; ++l) pyr.push_back(downsample(pyr.back()));
    return pyr;
}

FlowField dense_pyr_lk(const ImageBuf& from, const ImageBuf& to, const FlowParams& params) {
    params.validate();
    if (from.width() != to.width() || from.height() != to.height())
        throw ContractError("dense_pyr_lk: dimension mismatch");
    if (from.channels() != 1 || to.channels() != 1)
        throw ContractError("dense_pyr_lk: grayscale inputs required");

    std::vector<ImageBuf> pyr_from = build_pyramid(from, params.levels);
    std::vector<ImageBuf> pyr_to = build_pyramid(to, params.levels);
    const int levels = static_cast<int>(std::min(pyr_from.size(), pyr_to.size()));
    const int r = params.window_radius;
    const double win_area = static_cast<double>(2 * r + 1) * (2 * r + 1);
    const double eig_thresh = params.min_eigen_eps * win_area;

    LevelFlow lf;
    for (int lvl = levels - 1; lvl >= 0; --lvl) {
        const ImageBuf& F = pyr_from[lvl];
        const ImageBuf& T = pyr_to[lvl];
        const int w = F.width(), h = F.height();
        const size_t n = static_cast<size_t>(w) * h;

        if (lvl == levels - 1) {
            lf.w = w;
            lf.h = h;
            lf.dx.assign(n, 0.f);
            lf.dy.assign(n, 0.f);
            lf.ever_ok.assign(n, 0);
        } else {
            lf = upsample_flow(lf, w, h);
        }

        // spatial gradients of `from`, central differences with clamped indices
        std::vector<float> gx(n), gy(n);
        parallel_rows(h, [&](int j0, int j1) {
            for (int j = j0; j < j1; ++j)
                for (int i = 0; i < w; ++i) {
                    gx[static_cast<size_t>(j) * w + i] =
                        0.5f * (F.at(clampi(i + 1, 0, w - 1), j, 0) -
                                F.at(clampi(i - 1, 0, w - 1), j, 0));
                    gy[static_cast<size_t>(j) * w + i] =
                        0.5f * (F.at(i, clampi(j + 1, 0, h - 1), 0) -
                                F.at(i, clampi(j - 1, 0, h - 1), 0));
                }
        });

        std::vector<double> pxx(n), pxy(n), pyy(n), pxt(n), pyt(n);
        WindowSums sxx(w, h), sxy(w, h), syy(w, h), sxt(w, h), syt(w, h);
        const float flow_cap = static_cast<float>(std::max(w, h));

        for (int it = 0; it < params.iterations_per_level; ++it) {
            parallel_rows(h, [&](int j0, int j1) {
                for (int j = j0; j < j1; ++j)
                    for (int i = 0; i < w; ++i) {
                        size_t idx = static_cast<size_t>(j) * w + i;
                        float warped = sample_level(T, i + lf.dx[idx], j + lf.dy[idx]);
                        double dt = warped - F.at(i, j, 0);
                        double ix = gx[idx], iy = gy[idx];
                        pxx[idx] = ix * ix;
                        pxy[idx] = ix * iy;
                        pyy[idx] = iy * iy;
                        pxt[idx] = ix * dt;
                        pyt[idx] = iy * dt;
                    }
            });
            sxx.build(pxx);
            sxy.build(pxy);
            syy.build(pyy);
            sxt.build(pxt);
            syt.build(pyt);

            parallel_rows(h, [&](int j0, int j1) {
                for (int j = j0; j < j1; ++j)
                    for (int i = 0; i < w; ++i) {
                        double a = sxx.sum(i, j, r);
                        double b = sxy.sum(i, j, r);
                        double c = syy.sum(i, j, r);
                        double tr = a + c;
                        double det = a * c - b * b;
                        double disc = std::max(0.0, tr * tr - 4.0 * det);
                        double lambda_min = 0.5 * (tr - std::sqrt(disc));
                        size_t idx = static_cast<size_t>(j) * w + i;
                        if (lambda_min < eig_thresh) continue; // keep propagated flow
                        lf.ever_ok[idx] = 1;
                        double bx = sxt.sum(i, j, r);
                        double by = syt.sum(i, j, r);
                        double ux = -(c * bx - b * by) / det;
                        double uy = -(a * by - b * bx) / det;
                        float ndx = lf.dx[idx] + static_cast<float>(ux);
                        float ndy = lf.dy[idx] + static_cast<float>(uy);
                        float mag = std::sqrt(ndx * ndx + ndy * ndy);
                        if (mag > flow_cap) {
                            ndx *= flow_cap / mag;
                            ndy *= flow_cap / mag;
                        }
                        lf.dx[idx] = ndx;
                        lf.dy[idx] = ndy;
                    }
            });
        }

        for (int pass = 0; pass < params.smoothing_passes; ++pass) {
            box_blur_component(lf.dx, w, h);
            box_blur_component(lf.dy, w, h);
        }
    }

    FlowField out(from.width(), from.height());
    const float cap = static_cast<float>(std::max(from.width(), from.height()));
    for (size_t idx = 0; idx < lf.dx.size(); ++idx) {
        float x = lf.dx[idx], y = lf.dy[idx];
        float mag = std::sqrt(x * x + y * y);
        if (mag > cap) {
            x *= cap / mag;
            y *= cap / mag;
        }
        out.vec[idx * 2] = x;
        out.vec[idx * 2 + 1] = y;
        out.valid[idx] = lf.ever_ok[idx];
    }
    return out;
}

std::pair<FlowField, FlowField> bidirectional_flow(const ImageBuf& overlappedL,
                                                   const ImageBuf& overlappedR,
                                                   const FlowParams& params) {
    if (overlappedL.width() != overlappedR.width() ||
        overlappedL.height() != overlappedR.height())
        throw ContractError("bidirectional_flow: dimension mismatch");
    ImageBuf gl = to_gray(overlappedL);
    ImageBuf gr = to_gray(overlappedR);
    // FlowLtoR maps L coordinates into R: from = L, to = R.
    FlowField ltor = dense_pyr_lk(gl, gr, params);
    FlowField rtol = dense_pyr_lk(gr, gl, params);
    return {std::move(ltor), std::move(rtol)};
}

std::vector<float> flow_magnitude(const FlowField& flow) {
    std::vector<float> mag(static_cast<size_t>(flow.width) * flow.height);
    parallel_rows(flow.height, [&](int j0, int j1) {
        for (int j = j0; j < j1; ++j)
            for (int i = 0; i < flow.width; ++i) {
                float x = flow.dx(i, j), y = flow.dy(i, j);
                mag[static_cast<size_t>(j) * flow.width + i] = std::sqrt(x * x + y * y);
            }
    });
    return mag;
}

FlowField embed_flow(const FlowField& flow, int offset_x, int offset_y,
                     int canvas_width, int canvas_height) {
    if (offset_x < 0 || offset_y < 0 || offset_x + flow.width > canvas_width ||
        offset_y + flow.height > canvas_height)
        throw ContractError("embed_flow: crop box does not fit inside the canvas");
    FlowField out(canvas_width, canvas_height);
    for (int j = 0; j < flow.height; ++j)
        for (int i = 0; i < flow.width; ++i) {
            out.set(i + offset_x, j + offset_y, flow.dx(i, j), flow.dy(i, j));
            out.valid[static_cast<size_t>(j + offset_y) * canvas_width + i + offset_x] =
                flow.valid[static_cast<size_t>(j) * flow.width + i];
        }
    return out;
}

void write_flo(const FlowField& flow, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write("PIEH", 4);
    int32_t w = flow.width, h = flow.height;
    f.write(reinterpret_cast<const char*>(&w), 4);
    f.write(reinterpret_cast<const char*>(&h), 4);
    f.write(reinterpret_cast<const char*>(flow.vec.data()),
            static_cast<std::streamsize>(flow.vec.size() * sizeof(float)));
    if (!f) throw IoError("write failed: " + path);
}

FlowField read_flo(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "PIEH", 4) != 0)
        throw FormatError("not a .flo file: " + path);
    int32_t w = 0, h = 0;
    f.read(reinterpret_cast<char*>(&w), 4);
    f.read(reinterpret_cast<char*>(&h), 4);
    if (!f || w < 1 || h < 1 || w > 99999 || h > 99999)
        throw FormatError("illegal .flo dimensions: " + path);
    FlowField flow(w, h);
    f.read(reinterpret_cast<char*>(flow.vec.data()),
           static_cast<std::streamsize>(flow.vec.size() * sizeof(float)));
    if (!f) throw FormatError("truncated .flo file: " + path);
    return flow;
}

} // namespace flowstitch

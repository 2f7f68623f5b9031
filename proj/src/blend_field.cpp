#include "flowstitch/blend_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flowstitch/errors.hpp"
#include "flowstitch/parallel.hpp"
#include "png_io.hpp"

namespace flowstitch {

namespace {

constexpr double kInf = std::numeric_limits<double>::max() / 4.0;

// Felzenszwalb-Huttenlocher 1-D squared distance transform: lower envelope
// of the parabolas y = f[q] + (x - q)^2.
void dt_1d(const double* f, double* out, int n, int* v, double* z) {
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    for (int q = 1; q < n; ++q) {
        double s;
        while (true) {
            s = ((f[q] + static_cast<double>(q) * q) -
                 (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
                (2.0 * q - 2.0 * v[k]);
            if (s <= z[k]) {
                --k;
            } else {
                break;
            }
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        double d = q - v[k];
        out[q] = d * d + f[v[k]];
    }
}

} // namespace

DistanceField distance_transform(const Mask& mask) {
    const int w = mask.width, h = mask.height;
    if (w <= 0 || h <= 0) throw ContractError("distance_transform: empty canvas");
    bool any = std::any_of(mask.v.begin(), mask.v.end(), [](uint8_t b) { return b != 0; });
    if (!any) throw EmptyRegionError("distance_transform: mask has no true pixel");

    DistanceField out;
    out.width = w;
    out.height = h;
    out.d.resize(static_cast<size_t>(w) * h);

    // columns first
    std::vector<double> col(static_cast<size_t>(w) * h);
    parallel_rows(w, [&](int i0, int i1) {
        std::vector<double> f(h), g(h), z(h + 1);
        std::vector<int> v(h);
        for (int i = i0; i < i1; ++i) {
            for (int j = 0; j < h; ++j) f[j] = mask.at(i, j) ? 0.0 : kInf;
            dt_1d(f.data(), g.data(), h, v.data(), z.data());
            for (int j = 0; j < h; ++j) col[static_cast<size_t>(j) * w + i] = g[j];
        }
    });

    // then rows
    parallel_rows(h, [&](int j0, int j1) {
        std::vector<double> g(w), z(w + 1);
        std::vector<int> v(w);
        for (int j = j0; j < j1; ++j) {
            const double* f = col.data() + static_cast<size_t>(j) * w;
            dt_1d(f, g.data(), w, v.data(), z.data());
            for (int i = 0; i < w; ++i)
                out.d[static_cast<size_t>(j) * w + i] = std::sqrt(g[i]);
        }
    });
    return out;
}

BlendField compute_blend(const RegionPartition& partition) {
    const int w = partition.width, h = partition.height;
    BlendField out;
    out.width = w;
    out.height = h;
    out.b.assign(static_cast<size_t>(w) * h, 0.5);

    const bool have1 = partition.count(Region::Area1) > 0;
    const bool have2 = partition.count(Region::Area2) > 0;

    DistanceField lmin, rmin;
    if (have1 && have2 && partition.count(Region::Area3) > 0) {
        Mask m1(w, h), m2(w, h);
        for (size_t k = 0; k < partition.label.size(); ++k) {
            m1.v[k] = partition.label[k] == Region::Area1 ? 1 : 0;
            m2.v[k] = partition.label[k] == Region::Area2 ? 1 : 0;
        }
        lmin = distance_transform(m1);
        rmin = distance_transform(m2);
    }

    parallel_rows(h, [&](int j0, int j1) {
        for (int j = j0; j < j1; ++j)
            for (int i = 0; i < w; ++i) {
                size_t k = static_cast<size_t>(j) * w + i;
                switch (partition.at(i, j)) {
                    case Region::Area1: out.b[k] = 0.0; break;
                    case Region::Area2: out.b[k] = 1.0; break;
                    case Region::Area3: {
                        if (!have1 || !have2) {
                            out.b[k] = 0.5; // degenerate layout, fall back to the else branch
                            break;
                        }
                        double l = lmin.at(i, j), r = rmin.at(i, j);
                        out.b[k] = (l + r > 0.0) ? l / (l + r) : 0.5;
                        break;
                    }
                    case Region::Outside: out.b[k] = 0.5; break;
                }
            }
    });
    return out;
}

void save_blend_png(const BlendField& field, const std::string& path) {
    std::vector<uint8_t> bytes(static_cast<size_t>(field.width) * field.height);
    for (size_t k = 0; k < bytes.size(); ++k)
        bytes[k] = static_cast<uint8_t>(std::lround(std::clamp(field.b[k], 0.0, 1.0) * 255.0));
    detail::write_png(path, field.width, field.height, 1, bytes);
}

} // namespace flowstitch

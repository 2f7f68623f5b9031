#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>

#include "flowstitch/errors.hpp"
#include "flowstitch/flow.hpp"
#include "synthetic.hpp"

using namespace flowstitch;

namespace {

// Independent reference for one pyramid step: direct 2-D convolution with
// the outer product of (1,4,6,4,1)/16, then even-index decimation.
ImageBuf reference_downsample(const ImageBuf& img) {
    const int w = img.width(), h = img.height();
    const double k1[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    ImageBuf smooth(w, h, 1);
    for (int j = 0; j < h; ++j)
        for (int i = 0; i < w; ++i) {
            double acc = 0.0;
            for (int dj = -2; dj <= 2; ++dj)
                for (int di = -2; di <= 2; ++di) {
                    int x = std::clamp(i + di, 0, w - 1);
                    int y = std::clamp(j + dj, 0, h - 1);
                    acc += k1[di + 2] * k1[dj + 2] * img.at(x, y, 0);
                }
            smooth.set(i, j, 0, static_cast<float>(acc));
        }
    ImageBuf out(w / 2, h / 2, 1);
    for (int j = 0; j < h / 2; ++j)
        for (int i = 0; i < w / 2; ++i) out.set(i, j, 0, smooth.at(2 * i, 2 * j, 0));
    return out;
}

double mean_epe(const FlowField& flow, double gt_x, double gt_y, int margin) {
    double acc = 0.0;
    long n = 0;
    for (int j = margin; j < flow.height - margin; ++j)
        for (int i = margin; i < flow.width - margin; ++i) {
            double ex = flow.dx(i, j) - gt_x, ey = flow.dy(i, j) - gt_y;
            acc += std::sqrt(ex * ex + ey * ey);
            ++n;
        }
    return acc / n;
}

} // namespace

TEST_CASE("build_pyramid") {
    SUBCASE("levels=1 returns only the input") {
        ImageBuf img = testutil::smooth_texture(16, 16, 2);
        auto pyr = build_pyramid(img, 1);
        REQUIRE(pyr.size() == 1);
        CHECK(pyr[0].at(3, 3, 0) == img.at(3, 3, 0));
    }
    SUBCASE("constant images stay constant") {
        ImageBuf img(16, 16, 1, 0.5f);
        auto pyr = build_pyramid(img, 2);
        REQUIRE(pyr.size() == 2);
        REQUIRE(pyr[1].width() == 8);
        for (int j = 0; j < 8; ++j)
            for (int i = 0; i < 8; ++i)
                CHECK(pyr[1].at(i, j, 0) == doctest::Approx(0.5));
    }
    SUBCASE("level 1 matches the direct-convolution reference") {
        ImageBuf img = testutil::smooth_texture(16, 16, 11);
        auto pyr = build_pyramid(img, 2);
        ImageBuf ref = reference_downsample(img);
        REQUIRE(pyr[1].width() == ref.width());
        for (int j = 0; j < ref.height(); ++j)
            for (int i = 0; i < ref.width(); ++i)
                CHECK(pyr[1].at(i, j, 0) == doctest::Approx(ref.at(i, j, 0)).epsilon(1e-5));
    }
    SUBCASE("depth shrinks to keep the coarsest level at least 8x8") {
        ImageBuf img = testutil::smooth_texture(20, 20, 3);
        auto pyr = build_pyramid(img, 5);
        CHECK(pyr.size() == 2); // 20 -> 10; 10/2 = 5 would be under 8
        CHECK(pyr.back().width() == 10);
    }
    SUBCASE("color input is rejected") {
        ImageBuf img = testutil::smooth_texture_rgb(16, 16, 4);
        CHECK_THROWS_AS(build_pyramid(img, 2), ContractError);
    }
}

TEST_CASE("dense_pyr_lk zero-motion fixpoint") {
    ImageBuf img = testutil::smooth_texture(48, 48, 21);
    FlowParams p;
    p.levels = 3;
    p.window_radius = 5;
    FlowField flow = dense_pyr_lk(img, img, p);
    float max_norm = 0.0f;
    for (int j = 0; j < flow.height; ++j)
        for (int i = 0; i < flow.width; ++i)
            max_norm = std::max(max_norm, std::hypot(flow.dx(i, j), flow.dy(i, j)));
    CHECK(max_norm <= 1e-3f);
}

TEST_CASE("dense_pyr_lk recovers a (+3,0) translation") {
    ImageBuf from = testutil::smooth_texture(64, 64, 33);
    ImageBuf to = testutil::shift_image(from, 3, 0);
    FlowParams p;
    p.levels = 3;
    p.window_radius = 5;
    p.iterations_per_level = 3;
    FlowField flow = dense_pyr_lk(from, to, p);

    double sum_x = 0.0, sum_y = 0.0;
    long n = 0;
    for (int j = 8; j < 56; ++j)
        for (int i = 8; i < 56; ++i) {
            sum_x += flow.dx(i, j);
            sum_y += flow.dy(i, j);
            ++n;
        }
    CHECK(std::abs(sum_x / n - 3.0) < 0.3);
    CHECK(std::abs(sum_y / n - 0.0) < 0.3);
    CHECK(mean_epe(flow, 3, 0, 8) < 0.3);
}

TEST_CASE("dense_pyr_lk on textureless input falls back to zero and invalid") {
    ImageBuf img(32, 32, 1, 0.7f);
    FlowParams p;
    p.levels = 2;
    FlowField flow = dense_pyr_lk(img, img, p);
    for (int j = 0; j < 32; ++j)
        for (int i = 0; i < 32; ++i) {
            CHECK(flow.dx(i, j) == 0.0f);
            CHECK(flow.dy(i, j) == 0.0f);
            CHECK_FALSE(flow.is_valid(i, j));
        }
}

TEST_CASE("dense_pyr_lk contract checks") {
    ImageBuf a = testutil::smooth_texture(32, 32, 1);
    ImageBuf b = testutil::smooth_texture(16, 32, 1);
    CHECK_THROWS_AS(dense_pyr_lk(a, b, FlowParams{}), ContractError);
    FlowParams bad;
    bad.levels = 0;
    CHECK_THROWS_AS(dense_pyr_lk(a, a, bad), ContractError);
}

TEST_CASE("bidirectional_flow") {
    SUBCASE("identical crops give zero flow both ways") {
        ImageBuf img = testutil::smooth_texture(48, 48, 8);
        FlowParams p;
        p.levels = 3;
        p.window_radius = 5;
        auto [ltor, rtol] = bidirectional_flow(img, img, p);
        for (int j = 0; j < 48; ++j)
            for (int i = 0; i < 48; ++i) {
                CHECK(std::abs(ltor.dx(i, j)) <= 1e-3f);
                CHECK(std::abs(rtol.dx(i, j)) <= 1e-3f);
            }
    }
    SUBCASE("translation pair is approximately antisymmetric") {
        ImageBuf l = testutil::smooth_texture(64, 64, 55);
        ImageBuf r = testutil::shift_image(l, 2, 1);
        FlowParams p;
        p.levels = 3;
        p.window_radius = 5;
        auto [ltor, rtol] = bidirectional_flow(l, r, p);
        double acc = 0.0;
        long n = 0;
        for (int j = 8; j < 56; ++j)
            for (int i = 8; i < 56; ++i) {
                double sx = ltor.dx(i, j) + rtol.dx(i, j);
                double sy = ltor.dy(i, j) + rtol.dy(i, j);
                acc += std::sqrt(sx * sx + sy * sy);
                ++n;
            }
        CHECK(acc / n < 0.5);
        // FlowLtoR maps L into R: content moved by +t, so d ~ +t
        double mean_ltor_x = 0.0;
        for (int j = 8; j < 56; ++j)
            for (int i = 8; i < 56; ++i) mean_ltor_x += ltor.dx(i, j);
        CHECK(mean_ltor_x / n == doctest::Approx(2.0).epsilon(0.25));
    }
}

TEST_CASE("flow_magnitude") {
    FlowField f(5, 4);
    SUBCASE("zero field") {
        auto mag = flow_magnitude(f);
        for (float m : mag) CHECK(m == 0.0f);
    }
    SUBCASE("uniform (3,4) gives 5") {
        for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 5; ++i) f.set(i, j, 3.0f, 4.0f);
        auto mag = flow_magnitude(f);
        for (float m : mag) CHECK(m == doctest::Approx(5.0));
    }
    SUBCASE("random field matches per-pixel recomputation") {
        std::mt19937 rng(17);
        std::uniform_real_distribution<float> uni(-10.0f, 10.0f);
        for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 5; ++i) f.set(i, j, uni(rng), uni(rng));
        auto mag = flow_magnitude(f);
        for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 5; ++i) {
                double expect = std::sqrt(static_cast<double>(f.dx(i, j)) * f.dx(i, j) +
                                          static_cast<double>(f.dy(i, j)) * f.dy(i, j));
                CHECK(std::abs(mag[static_cast<size_t>(j) * 5 + i] - expect) < 1e-6);
            }
    }
}

TEST_CASE(".flo round-trip is bit-identical") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<float> uni(-50.0f, 50.0f);
    FlowField f(23, 17);
    for (int j = 0; j < 17; ++j)
        for (int i = 0; i < 23; ++i) f.set(i, j, uni(rng), uni(rng));

    std::string path = "/tmp/flowstitch_test_roundtrip.flo";
    write_flo(f, path);
    FlowField back = read_flo(path);
    REQUIRE(back.width == 23);
    REQUIRE(back.height == 17);
    CHECK(std::memcmp(back.vec.data(), f.vec.data(), f.vec.size() * sizeof(float)) == 0);
}

TEST_CASE(".flo header layout is bit-exact") {
    FlowField f(2, 1);
    f.set(0, 0, 1.5f, -2.0f);
    std::string path = "/tmp/flowstitch_test_header.flo";
    write_flo(f, path);

    std::ifstream in(path, std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    REQUIRE(bytes.size() == 4 + 4 + 4 + 2 * 1 * 2 * 4);
    CHECK(std::memcmp(bytes.data(), "PIEH", 4) == 0);
    CHECK(bytes[4] == 2);  // width, little-endian
    CHECK(bytes[5] == 0);
    CHECK(bytes[8] == 1);  // height
    float v[4];
    std::memcpy(v, bytes.data() + 12, 16);
    CHECK(v[0] == 1.5f);
    CHECK(v[1] == -2.0f);
}

TEST_CASE("embed_flow places crop flow at the canvas offset") {
    FlowField crop(3, 2);
    crop.set(1, 1, 4.0f, -1.0f);
    FlowField canvas = embed_flow(crop, 5, 7, 20, 15);
    CHECK(canvas.dx(6, 8) == 4.0f);
    CHECK(canvas.dy(6, 8) == -1.0f);
    CHECK(canvas.dx(0, 0) == 0.0f);
    CHECK_THROWS_AS(embed_flow(crop, 19, 0, 20, 15), ContractError);
}

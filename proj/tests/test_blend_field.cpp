#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "flowstitch/blend_field.hpp"
#include "flowstitch/errors.hpp"
#include "flowstitch/image.hpp"

using namespace flowstitch;

namespace {

// O(N^2) nearest-true-pixel scan, the oracle for the exact EDT.
std::vector<double> brute_force_edt(const Mask& mask) {
    std::vector<double> out(static_cast<size_t>(mask.width) * mask.height);
    for (int j = 0; j < mask.height; ++j)
        for (int i = 0; i < mask.width; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (int q = 0; q < mask.height; ++q)
                for (int p = 0; p < mask.width; ++p)
                    if (mask.at(p, q)) {
                        double d = std::hypot(static_cast<double>(p - i),
                                              static_cast<double>(q - j));
                        best = std::min(best, d);
                    }
            out[static_cast<size_t>(j) * mask.width + i] = best;
        }
    return out;
}

RegionPartition strip_partition_10x1() {
    Mask l(10, 1), r(10, 1);
    for (int i = 0; i <= 6; ++i) l.set(i, 0, true);
    for (int i = 4; i <= 9; ++i) r.set(i, 0, true);
    return compute_partition(l, r);
}

} // namespace

TEST_CASE("distance_transform basics") {
    SUBCASE("single seed gives exact Euclidean distances") {
        Mask m(8, 8);
        m.set(0, 0, true);
        DistanceField d = distance_transform(m);
        CHECK(d.at(3, 4) == doctest::Approx(5.0));
        CHECK(d.at(0, 0) == 0.0);
        CHECK(d.at(7, 0) == doctest::Approx(7.0));
    }
    SUBCASE("all-false mask throws") {
        CHECK_THROWS_AS(distance_transform(Mask(4, 4)), EmptyRegionError);
    }
}

TEST_CASE("distance_transform matches brute force on random masks") {
    std::mt19937 rng(123);
    for (int trial = 0; trial < 10; ++trial) {
        int w = 8 + static_cast<int>(rng() % 25);
        int h = 8 + static_cast<int>(rng() % 25);
        Mask m(w, h);
        bool any = false;
        for (auto& v : m.v) {
            v = (rng() % 8) == 0 ? 1 : 0;
            any |= v != 0;
        }
        if (!any) m.set(static_cast<int>(rng() % w), static_cast<int>(rng() % h), true);

        DistanceField d = distance_transform(m);
        auto ref = brute_force_edt(m);
        for (size_t k = 0; k < ref.size(); ++k)
            CHECK(std::abs(d.d[k] - ref[k]) < 1e-6);
    }
}

TEST_CASE("distance_transform is 1-Lipschitz") {
    std::mt19937 rng(7);
    Mask m(20, 16);
    for (auto& v : m.v) v = (rng() % 10) == 0 ? 1 : 0;
    m.set(3, 3, true);
    DistanceField d = distance_transform(m);
    for (int j = 0; j < 16; ++j)
        for (int i = 0; i < 20; ++i) {
            if (i + 1 < 20) CHECK(std::abs(d.at(i + 1, j) - d.at(i, j)) <= 1.0 + 1e-9);
            if (j + 1 < 16) CHECK(std::abs(d.at(i, j + 1) - d.at(i, j)) <= 1.0 + 1e-9);
        }
}

TEST_CASE("compute_blend on the 10x1 strip") {
    BlendField b = compute_blend(strip_partition_10x1());
    for (int i = 0; i <= 3; ++i) CHECK(b.at(i, 0) == 0.0);
    for (int i = 7; i <= 9; ++i) CHECK(b.at(i, 0) == 1.0);
    CHECK(b.at(5, 0) == doctest::Approx(0.5));   // Lmin=2, Rmin=2
    CHECK(b.at(4, 0) == doctest::Approx(0.25));  // Lmin=1, Rmin=3
    CHECK(b.at(6, 0) == doctest::Approx(0.75));
}

TEST_CASE("compute_blend region values") {
    Mask l(12, 8), r(12, 8);
    for (int j = 1; j < 7; ++j)
        for (int i = 0; i < 8; ++i) l.set(i, j, true);
    for (int j = 1; j < 7; ++j)
        for (int i = 5; i < 12; ++i) r.set(i, j, true);
    RegionPartition p = compute_partition(l, r);
    BlendField b = compute_blend(p);

    for (int j = 0; j < 8; ++j)
        for (int i = 0; i < 12; ++i) {
            double v = b.at(i, j);
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            switch (p.at(i, j)) {
                case Region::Area1: CHECK(v == 0.0); break;
                case Region::Area2: CHECK(v == 1.0); break;
                case Region::Outside: CHECK(v == 0.5); break;
                default: break;
            }
        }
}

TEST_CASE("compute_blend is mirror-symmetric") {
    // swap the roles of L and R; the field must complement
    Mask l(16, 6), r(16, 6);
    for (int j = 0; j < 6; ++j) {
        for (int i = 0; i < 10; ++i) l.set(i, j, true);
        for (int i = 6; i < 16; ++i) r.set(i, j, true);
    }
    BlendField b1 = compute_blend(compute_partition(l, r));
    BlendField b2 = compute_blend(compute_partition(r, l));
    for (int j = 0; j < 6; ++j)
        for (int i = 0; i < 16; ++i)
            CHECK(b1.at(i, j) + b2.at(i, j) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("compute_blend transition is monotone on a rectangle layout") {
    Mask l(30, 10), r(30, 10);
    for (int j = 0; j < 10; ++j) {
        for (int i = 0; i < 20; ++i) l.set(i, j, true);
        for (int i = 10; i < 30; ++i) r.set(i, j, true);
    }
    BlendField b = compute_blend(compute_partition(l, r));
    for (int j = 0; j < 10; ++j)
        for (int i = 10; i < 19; ++i)
            CHECK(b.at(i + 1, j) >= b.at(i, j) - 1e-12);
}

TEST_CASE("compute_blend with an empty side falls back to 0.5 in the overlap") {
    Mask l(8, 4), r(8, 4);
    for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 6; ++i) l.set(i, j, true);
    for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 6; ++i) r.set(i, j, true); // L fully inside R: no Area1
    for (int j = 0; j < 4; ++j) r.set(6, j, true);
    RegionPartition p = compute_partition(l, r);
    REQUIRE(p.count(Region::Area1) == 0);
    BlendField b = compute_blend(p);
    for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 6; ++i) CHECK(b.at(i, j) == 0.5);
}

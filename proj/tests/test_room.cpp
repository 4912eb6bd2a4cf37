#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "pnl/room.hpp"

using namespace pnl;

namespace {

const std::vector<SourceSpec> kRoomSources{
    {{-2.65, 1.5, 0.0}}, {{-2.4, -1.2, 0.0}}, {{0.2, -1.5, 0.0}}, {{1.7, -0.2, 0.0}}, {{1.0, 1.2, 0.0}}};

std::vector<Point3> disk_points(int n, std::uint64_t seed) {
    return place_mics_random({-1.0, 0.5, 0.0}, 1.0, n, seed).positions;
}

}  // namespace

TEST(Images, OrderZeroIsTheSource) {
    const SourceSpec s{{0.4, -0.3, 1.1}};
    const auto im = enumerate_images(RoomSpec{}, s, 0);
    ASSERT_EQ(im.size(), 1u);
    EXPECT_EQ(im[0].position, s.position);
    EXPECT_EQ(im[0].amplitude, 1.0);
    EXPECT_EQ(im[0].order, 0);
}

TEST(Images, FirstOrderMirrors) {
    const auto im = enumerate_images(RoomSpec{}, SourceSpec{{0, 0, 0}}, 1);
    ASSERT_EQ(im.size(), 7u);
    int first = 0;
    bool found = false;
    for (const auto& i : im) {
        if (i.order != 1) continue;
        ++first;
        if (i.index == std::array<int, 3>{1, 0, 0}) {
            found = true;
            EXPECT_NEAR(i.position.x, 6.0, 1e-15);
            EXPECT_EQ(i.position.y, 0.0);
            EXPECT_EQ(i.position.z, 0.0);
            EXPECT_EQ(i.amplitude, 0.8);
        }
    }
    EXPECT_EQ(first, 6);
    EXPECT_TRUE(found);
}

TEST(Images, ZeroReflectionLeavesOnlyDirectPath) {
    RoomSpec room;
    room.reflection.fill(0.0);
    const auto im = enumerate_images(room, SourceSpec{{0.5, 0.5, 0.5}}, 3);
    for (const auto& i : im) {
        if (i.order == 0) EXPECT_EQ(i.amplitude, 1.0);
        else EXPECT_EQ(i.amplitude, 0.0);
    }
}

TEST(Images, CanonicalOrderingAndUniqueness) {
    const auto im = enumerate_images(RoomSpec{}, SourceSpec{{0.3, 0.2, -0.1}}, 6);
    std::set<std::array<int, 3>> seen;
    for (std::size_t i = 0; i < im.size(); ++i) {
        const auto& n = im[i].index;
        EXPECT_EQ(std::abs(n[0]) + std::abs(n[1]) + std::abs(n[2]), im[i].order);
        EXPECT_TRUE(seen.insert(n).second);
        if (i > 0) {
            const auto& p = im[i - 1];
            EXPECT_TRUE(p.order < im[i].order || (p.order == im[i].order && p.index < n));
        }
    }
    // Octahedral number: images with |n|_1 <= 6.
    EXPECT_EQ(im.size(), static_cast<std::size_t>((2 * 6 + 1) * (2 * 6 * 6 + 2 * 6 + 3) / 3));
}

TEST(Images, AmplitudeIsProductOfOrderCoefficients) {
    RoomSpec room;
    room.reflection = {0.9, 0.7, 0.6, 0.5, 0.4, 0.3};
    for (const auto& i : enumerate_images(room, SourceSpec{{0.1, 0.2, 0.3}}, 5)) {
        EXPECT_LE(std::abs(i.amplitude), 1.0);
        // Each crossed wall contributes one factor; count them through the axis formula.
        int walls = 0;
        for (int d = 0; d < 3; ++d) walls += std::abs(i.index[static_cast<std::size_t>(d)]);
        EXPECT_EQ(walls, i.order);
        const auto axis = [](int n, double bm, double bp) {
            double a = 1.0;
            for (int j = 1; j <= std::abs(n); ++j) a *= ((j % 2 == 1) == (n > 0)) ? bp : bm;
            return a;
        };
        const double expect = axis(i.index[0], 0.9, 0.7) * axis(i.index[1], 0.6, 0.5) * axis(i.index[2], 0.4, 0.3);
        EXPECT_NEAR(i.amplitude, expect, 1e-15);
    }
}

TEST(Images, MirrorPositionsLieInsideMirroredRooms) {
    const RoomSpec room;
    const SourceSpec s{{0.7, -0.4, 0.9}};
    for (const auto& i : enumerate_images(room, s, 4)) {
        // Folding the image back into the room must recover the source.
        const std::array<double, 3> p{i.position.x, i.position.y, i.position.z};
        const std::array<double, 3> src{s.position.x, s.position.y, s.position.z};
        for (int d = 0; d < 3; ++d) {
            const int n = i.index[static_cast<std::size_t>(d)];
            const double L = room.dimensions[static_cast<std::size_t>(d)];
            const double back = (n % 2 ? -1.0 : 1.0) * (p[static_cast<std::size_t>(d)] - n * L);
            EXPECT_NEAR(back, src[static_cast<std::size_t>(d)], 1e-12);
        }
    }
}

TEST(Simulate, FreeFieldEqualsDirectSum) {
    RoomSpec room;
    room.reflection.fill(0.0);
    const auto pts = disk_points(50, 3);
    const Wavenumber k = Wavenumber::from_frequency(900.0);
    const auto field = simulate_field(room, kRoomSources, pts, k, 10);
    for (std::size_t m = 0; m < pts.size(); ++m) {
        Complex direct{};
        for (const auto& s : kRoomSources) direct += green_free_space(pts[m], s.position, k);
        EXPECT_LE(std::abs(field[m] - direct), 1e-12 * std::abs(direct));
    }
    const std::vector<SourceSpec> one{{{1.0, 1.0, 0.0}}};
    const std::vector<Point3> mic{{-1.0, 0.5, 0.0}};
    EXPECT_EQ(simulate_field(room, one, mic, k, 5)[0], green_free_space(mic[0], one[0].position, k));
}

TEST(Simulate, LinearInStrengths) {
    const auto pts = disk_points(20, 4);
    const Wavenumber k = Wavenumber::from_frequency(500.0);
    std::vector<SourceSpec> a = kRoomSources, b = kRoomSources, mix = kRoomSources;
    const Complex ca{0.3, 1.2}, cb{-0.8, 0.1};
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i].strength = Complex(1.0 + i, -0.5 * i);
        b[i].strength = Complex(0.2 * i, 1.0);
        mix[i].strength = ca * a[i].strength + cb * b[i].strength;
    }
    const auto fa = simulate_field(RoomSpec{}, a, pts, k, 8);
    const auto fb = simulate_field(RoomSpec{}, b, pts, k, 8);
    const auto fm = simulate_field(RoomSpec{}, mix, pts, k, 8);
    for (std::size_t m = 0; m < pts.size(); ++m)
        EXPECT_LE(std::abs(fm[m] - (ca * fa[m] + cb * fb[m])), 1e-12 * std::abs(fm[m]));
}

TEST(Simulate, FreeFieldReciprocity) {
    RoomSpec room;
    room.reflection.fill(0.0);
    const Wavenumber k(7.0);
    const Point3 a{0.3, -0.2, 0.4}, b{-1.1, 0.9, -0.3};
    const std::vector<SourceSpec> sa{{a}}, sb{{b}};
    const std::vector<Point3> pa{a}, pb{b};
    EXPECT_EQ(simulate_field(room, sa, pb, k, 0)[0], simulate_field(room, sb, pa, k, 0)[0]);
}

TEST(Simulate, HelmholtzAwayFromImages) {
    const std::vector<SourceSpec> src{{{1.0, 1.2, 0.0}}};
    const double k = 8.0;
    auto f = [&](const Point3& x) {
        const std::vector<Point3> one{x};
        return simulate_field(RoomSpec{}, src, one, Wavenumber(k), 6)[0];
    };
    const Point3 c{-1.0, 0.5, 0.1};
    auto residual = [&](double h) {
        const Complex lap = (f(c + Point3{h, 0, 0}) + f(c - Point3{h, 0, 0}) + f(c + Point3{0, h, 0}) +
                             f(c - Point3{0, h, 0}) + f(c + Point3{0, 0, h}) + f(c - Point3{0, 0, h}) - 6.0 * f(c)) /
                            (h * h);
        return std::abs(lap + k * k * f(c));
    };
    const double ratio = residual(2e-2) / residual(1e-2);
    EXPECT_GT(ratio, 3.6);
    EXPECT_LT(ratio, 4.4);
}

TEST(Simulate, SingularityAtImage) {
    const std::vector<SourceSpec> src{{{1.0, 1.0, 0.0}}};
    const std::vector<Point3> on{{1.0, 1.0, 0.0}};
    EXPECT_THROW(simulate_field(RoomSpec{}, src, on, Wavenumber(1.0), 2), SingularityError);
}

TEST(Simulate, SourcesMustBeInside) {
    const std::vector<SourceSpec> src{{{3.5, 0.0, 0.0}}};
    const std::vector<Point3> pts{{0, 0, 0}};
    EXPECT_THROW(simulate_field(RoomSpec{}, src, pts, Wavenumber(1.0), 2), ConfigError);
    RoomSpec bad;
    bad.reflection[0] = 1.5;
    EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Mics, CircularRule) {
    EXPECT_NEAR(Wavenumber::from_frequency(2000.0, 343.0).value(), 36.6366, 1e-3);
    EXPECT_EQ(circular_mic_count(2000.0, 1.0, 343.0), 75);
    const auto a = place_mics_circular({0, 0, 0}, 1.0, 4);
    const std::vector<Point3> expect{{1, 0, 0}, {0, 1, 0}, {-1, 0, 0}, {0, -1, 0}};
    for (std::size_t i = 0; i < 4; ++i) EXPECT_LT(distance(a.positions[i], expect[i]), 1e-15);
    const Point3 c{-1.0, 0.5, 0.0};
    for (const auto& p : place_mics_circular(c, 1.0, 75).positions) EXPECT_NEAR(distance(p, c), 1.0, 1e-12);
}

TEST(Mics, RandomDeterministicInsideAndSeparated) {
    const Point3 c{-1.0, 0.5, 0.0};
    const auto a = place_mics_random(c, 1.0, 200, 42);
    const auto b = place_mics_random(c, 1.0, 200, 42);
    EXPECT_EQ(a.positions, b.positions);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_LE(distance(a.positions[i], c), 1.0);
        EXPECT_EQ(a.positions[i].z, 0.0);
        for (std::size_t j = i + 1; j < a.size(); ++j) EXPECT_GE(distance(a.positions[i], a.positions[j]), 0.01);
    }
    EXPECT_THROW(place_mics_random(c, 0.01, 50, 1), ConfigError);
}

TEST(Mics, RandomMeanRadius) {
    const Point3 c{0, 0, 0};
    const auto a = place_mics_random(c, 2.0, 10000, 7);
    double sum = 0.0;
    for (const auto& p : a.positions) sum += distance(p, c);
    EXPECT_NEAR(sum / 10000.0, 2.0 * 2.0 / 3.0, 0.01 * 4.0 / 3.0);
}

TEST(Noise, InfiniteSnrIsIdentity) {
    const std::vector<Complex> s{{1, 2}, {3, -1}};
    EXPECT_EQ(add_noise(s, std::numeric_limits<double>::infinity(), 3), s);
    const std::vector<Complex> zero(4);
    EXPECT_THROW(add_noise(zero, 20.0, 1), ConfigError);
}

TEST(Noise, EmpiricalSnrAndCircularity) {
    std::vector<Complex> s(64);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::polar(0.5 + 0.01 * i, 0.3 * i);
    double power = 0.0;
    for (const auto& v : s) power += std::norm(v);
    power /= s.size();
    double noise = 0.0, re2 = 0.0, im2 = 0.0;
    const int redraws = 10000;
    for (int r = 0; r < redraws; ++r) {
        const auto n = add_noise(s, 20.0, static_cast<std::uint64_t>(r));
        for (std::size_t i = 0; i < s.size(); ++i) {
            const Complex e = n[i] - s[i];
            noise += std::norm(e);
            re2 += e.real() * e.real();
            im2 += e.imag() * e.imag();
        }
    }
    const double count = static_cast<double>(redraws) * s.size();
    const double snr = 10.0 * std::log10(power / (noise / count));
    EXPECT_NEAR(snr, 20.0, 0.1);
    const double sigma2 = power / 100.0;
    EXPECT_NEAR(re2 / count, sigma2 / 2, 0.01 * sigma2);
    EXPECT_NEAR(im2 / count, sigma2 / 2, 0.01 * sigma2);
    EXPECT_EQ(add_noise(s, 20.0, 5), add_noise(s, 20.0, 5));
}

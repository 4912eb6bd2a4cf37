#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pnl/harmonics.hpp"
#include "pnl/room.hpp"

using namespace pnl;

namespace {

Observations circular_obs(const Point3& c, double R, int q, const std::function<Complex(const Point3&)>& f) {
    Observations obs;
    obs.positions = place_mics_circular(c, R, q).positions;
    for (const auto& p : obs.positions) obs.pressures.push_back(f(p));
    return obs;
}

}  // namespace

TEST(Bessel, Values) {
    EXPECT_EQ(bessel_j(0, 0.0), 1.0);
    EXPECT_EQ(bessel_j(1, 0.0), 0.0);
    EXPECT_NEAR(bessel_j(0, 2.404825557695772768621632), 0.0, 1e-10);
    EXPECT_NEAR(bessel_j(5, 10.0), -0.23406152818679364044, 1e-12);
    EXPECT_NEAR(bessel_j(1, 16.47), 0.00012378553915760093991, 1e-13);
    EXPECT_NEAR(bessel_j(-5, 10.0), 0.23406152818679364044, 1e-12);
}

TEST(Bessel, AgreesWithStandardLibrary) {
    for (int n = 0; n <= 100; n += 3)
        for (double x = 0.05; x <= 100.0; x += 1.37) {
            const double ref = std::cyl_bessel_j(static_cast<double>(n), x);
            const double got = bessel_j(n, x);
            EXPECT_NEAR(got, ref, 1e-12 * std::max(1.0, std::abs(ref))) << "n=" << n << " x=" << x;
        }
}

TEST(Harmonics, ExactJ0Recovery) {
    const Point3 c{-1.0, 0.5, 0.0};
    const double k = 7.3;
    const int N = truncation_order(Wavenumber(k), 1.0);
    const auto obs = circular_obs(c, 1.0, 2 * N + 1, [&](const Point3& p) {
        return Complex(bessel_j(0, k * std::hypot(p.x - c.x, p.y - c.y)), 0.0);
    });
    const HarmonicModel m = fit_harmonics(obs, Wavenumber(k), c, N, 0.0);
    EXPECT_NEAR(std::abs(m.coefficient(0) - 1.0), 0.0, 1e-10);
    for (int n = -N; n <= N; ++n)
        if (n != 0) {
            EXPECT_LE(std::abs(m.coefficient(n)), 1e-10);
        }
}

TEST(Harmonics, RandomCoefficientRoundTrip) {
    const Point3 c{0.2, -0.1, 0.3};
    const double k = 9.1;  // kR away from Bessel zeros
    const int N = truncation_order(Wavenumber(k), 1.0);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    HarmonicModel truth{Wavenumber(k), c, N, {}};
    for (int n = -N; n <= N; ++n) truth.coefficients.emplace_back(g(rng), g(rng));
    Observations obs;
    obs.positions = place_mics_circular(c, 1.0, 2 * N + 1).positions;
    obs.pressures = eval_harmonics(truth, obs.positions);
    const HarmonicModel fit = fit_harmonics(obs, Wavenumber(k), c, N, 0.0);
    double err = 0.0, ref = 0.0;
    for (int n = -N; n <= N; ++n) {
        err += std::norm(fit.coefficient(n) - truth.coefficient(n));
        ref += std::norm(truth.coefficient(n));
    }
    EXPECT_LE(std::sqrt(err / ref), 1e-8);
    const auto back = eval_harmonics(fit, obs.positions);
    for (std::size_t q = 0; q < obs.size(); ++q) EXPECT_LE(std::abs(back[q] - obs.pressures[q]), 1e-8);
}

TEST(Harmonics, BesselZeroIsRankDeficient) {
    const Point3 c{0, 0, 0};
    const double k = 2.404825557695772768621632;  // J0(kR) = 0 at R = 1
    const int N = truncation_order(Wavenumber(k), 1.0);
    const auto obs = circular_obs(c, 1.0, 2 * N + 1, [](const Point3& p) { return Complex(p.x, p.y); });
    try {
        fit_harmonics(obs, Wavenumber(k), c, N, 0.0);
        FAIL() << "expected rank deficiency";
    } catch (const RankDeficiencyError& e) {
        EXPECT_GT(e.condition(), 1e12);
    }
    // The default regularization keeps the fit solvable.
    HarmonicFitInfo info;
    EXPECT_NO_THROW(fit_harmonics(obs, Wavenumber(k), c, N, std::nullopt, &info));
    EXPECT_LE(info.condition, 1e12);
}

TEST(Harmonics, EvalBasics) {
    HarmonicModel m{Wavenumber(5.0), {1, 1, 0}, 3, std::vector<Complex>(7)};
    const std::vector<Point3> pts{{1, 1, 0}, {1.3, 0.8, 0}};
    for (const auto& v : eval_harmonics(m, pts)) EXPECT_EQ(v, Complex(0, 0));
    m.coefficients[3] = 1.0;
    const auto v = eval_harmonics(m, pts);
    EXPECT_NEAR(v[0].real(), 1.0, 1e-15);
    EXPECT_NEAR(v[0].imag(), 0.0, 1e-15);
    const std::vector<Point3> off{{1, 1, 0.5}};
    EXPECT_THROW(eval_harmonics(m, off), ConfigError);
}

TEST(Harmonics, ResidualNonIncreasingInOrder) {
    const Point3 c{0, 0, 0};
    const double k = 6.0;
    const std::vector<SourceSpec> src{{{2.0, 1.5, 0.0}}};
    Observations obs;
    obs.positions = place_mics_random(c, 1.0, 40, 9).positions;
    obs.pressures = simulate_field(RoomSpec{}, src, obs.positions, Wavenumber(k), 2);
    double prev = std::numeric_limits<double>::infinity();
    for (int N = 0; N <= 12; ++N) {
        const HarmonicModel m = fit_harmonics(obs, Wavenumber(k), c, N, 0.0);
        const auto fit = eval_harmonics(m, obs.positions);
        double r = 0.0;
        for (std::size_t q = 0; q < obs.size(); ++q) r += std::norm(fit[q] - obs.pressures[q]);
        EXPECT_LE(r, prev * (1 + 1e-9) + 1e-24);
        prev = r;
    }
}

TEST(Harmonics, InputValidation) {
    Observations obs{{{1, 0, 0.2}}, {Complex(1, 0)}};
    EXPECT_THROW(fit_harmonics(obs, Wavenumber(1.0), {0, 0, 0}, 1), ConfigError);
    EXPECT_THROW(fit_harmonics(Observations{}, Wavenumber(1.0), {0, 0, 0}, 1), ConfigError);
    Observations ok{{{1, 0, 0}}, {Complex(1, 0)}};
    EXPECT_THROW(fit_harmonics(ok, Wavenumber(1.0), {0, 0, 0}, 1, -1.0), ConfigError);
}

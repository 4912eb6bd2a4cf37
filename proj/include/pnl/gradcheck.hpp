#pragma once

// Finite-difference verification of the analytic point neuron gradients.
//
// The reference cost here is evaluated in long double straight from its
// definition and shares no code with point_neuron.hpp's kernel table, so a
// mistake in the analytic path cannot cancel against the oracle.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pnl/point_neuron.hpp"

namespace pnl {

struct GradcheckOptions {
    double rel_tolerance = 1e-6;
    double abs_tolerance = 1e-9;
    /// Below this gradient magnitude the absolute tolerance applies.
    double small_gradient = 1e-3;
    double weight_step = 1e-6;
    double bias_step = 1e-5;
    /// Flip the sign of the analytic bias gradient (mutation check for the harness itself).
    bool inject_sign_flip = false;
};

struct GradcheckInstance {
    PointNeuronModel model;
    Observations obs;
    double lambda = 0.0;
};

struct GradcheckResult {
    int trials = 0;
    int failures = 0;
    double worst_weight_error = 0.0;
    double worst_bias_error = 0.0;
    std::vector<std::string> failure_lines;

    bool passed() const { return failures == 0; }
};

namespace oracle {

using LComplex = std::complex<long double>;

inline long double reference_cost(const PointNeuronModel& m, const Observations& obs, long double lambda) {
    const long double k = m.k.value();
    long double data = 0.0L;
    for (std::size_t q = 0; q < obs.size(); ++q) {
        LComplex sum{};
        for (std::size_t v = 0; v < m.size(); ++v) {
            const auto& b = m.biases[v];
            const auto& x = obs.positions[q];
            const long double bx = b.x, by = b.y, bz = b.z;
            const long double rx = bx - m.reference.x, ry = by - m.reference.y, rz = bz - m.reference.z;
            const long double d = std::sqrt(rx * rx + ry * ry + rz * rz);
            const long double ox = bx - x.x, oy = by - x.y, oz = bz - x.z;
            const long double dq = std::sqrt(ox * ox + oy * oy + oz * oz);
            const long double phase = k * (dq - d);
            const LComplex w{m.weights[v].real(), m.weights[v].imag()};
            sum += w * LComplex{d / dq * std::cos(phase), d / dq * std::sin(phase)};
        }
        const LComplex r = sum - LComplex{obs.pressures[q].real(), obs.pressures[q].imag()};
        data += std::norm(r);
    }
    long double l1 = 0.0L;
    for (const auto& w : m.weights) l1 += std::abs(LComplex{w.real(), w.imag()});
    return data + lambda * l1;
}

// Fourth-order central difference of f along one scalar parameter.
template <typename F>
long double central_difference(F&& f, double h) {
    const long double fp1 = f(h), fm1 = f(-h), fp2 = f(2 * h), fm2 = f(-2 * h);
    return (8.0L * (fp1 - fm1) - (fp2 - fm2)) / (12.0L * h);
}

/// dL/dw* = (dL/dRe w + i dL/dIm w) / 2
inline Complex weight_gradient(const GradcheckInstance& inst, std::size_t v, double h) {
    auto along = [&](Complex dir) {
        return central_difference(
            [&](double t) {
                PointNeuronModel m = inst.model;
                m.weights[v] += t * dir;
                return reference_cost(m, inst.obs, inst.lambda);
            },
            h);
    };
    const long double dre = along({1.0, 0.0});
    const long double dim = along({0.0, 1.0});
    return {static_cast<double>(0.5L * dre), static_cast<double>(0.5L * dim)};
}

inline Point3 bias_gradient(const GradcheckInstance& inst, std::size_t v, double h) {
    auto along = [&](int axis) {
        return static_cast<double>(central_difference(
            [&](double t) {
                PointNeuronModel m = inst.model;
                (axis == 0 ? m.biases[v].x : axis == 1 ? m.biases[v].y : m.biases[v].z) += t;
                return reference_cost(m, inst.obs, inst.lambda);
            },
            h));
    };
    return {along(0), along(1), along(2)};
}

}  // namespace oracle

/// Random instance: V, Q in 1..8, k in [1, 40], lambda in {0, 1e-3, 1}. Biases
/// stay at least 0.3 m from every microphone and from the reference point and
/// weight magnitudes at least 0.1, away from the l1 kink.
inline GradcheckInstance random_gradcheck_instance(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> count(1, 8);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> sym(-1.0, 1.0);
    const double lambdas[] = {0.0, 1e-3, 1.0};

    GradcheckInstance inst;
    const int V = count(rng);
    const int Q = count(rng);
    inst.lambda = lambdas[std::uniform_int_distribution<int>(0, 2)(rng)];
    inst.model.k = Wavenumber(1.0 + 39.0 * unit(rng));
    inst.model.reference = {0.0, 0.0, 0.0};
    for (int q = 0; q < Q; ++q) {
        inst.obs.positions.push_back({sym(rng), sym(rng), 0.5 * sym(rng)});
        inst.obs.pressures.push_back(std::polar(unit(rng), 6.283185307179586 * unit(rng)));
    }
    auto clear = [&](const Point3& b) {
        if (b.norm() < 0.3) return false;
        for (const auto& x : inst.obs.positions)
            if (distance(b, x) < 0.3) return false;
        return true;
    };
    while (static_cast<int>(inst.model.biases.size()) < V) {
        const Point3 b{2.5 * sym(rng), 2.5 * sym(rng), 1.0 * sym(rng)};
        if (!clear(b)) continue;
        inst.model.biases.push_back(b);
        inst.model.weights.push_back(std::polar(0.1 + 0.9 * unit(rng), 6.283185307179586 * unit(rng)));
    }
    return inst;
}

namespace detail {
inline bool gradient_close(double err, double reference_magnitude, const GradcheckOptions& o) {
    if (reference_magnitude < o.small_gradient) return err <= o.abs_tolerance;
    return err <= o.rel_tolerance * reference_magnitude;
}
}  // namespace detail

/// Compares grad_weight and grad_bias with the finite-difference oracle on one instance.
inline bool check_instance(const GradcheckInstance& inst, const GradcheckOptions& opt, GradcheckResult& result,
                           int trial) {
    bool ok = true;
    const Gradients g = gradients(inst.model, inst.obs, inst.lambda, 0.0);
    for (std::size_t v = 0; v < inst.model.size(); ++v) {
        const Complex fd_w = oracle::weight_gradient(inst, v, opt.weight_step);
        const double err_w = std::abs(g.weight[v] - fd_w);
        const double mag_w = std::abs(fd_w);
        result.worst_weight_error = std::max(result.worst_weight_error, mag_w < opt.small_gradient ? err_w : err_w / mag_w);

        Point3 analytic_b = g.bias[v];
        if (opt.inject_sign_flip) analytic_b = -1.0 * analytic_b;
        const Point3 fd_b = oracle::bias_gradient(inst, v, opt.bias_step);
        const double err_b = (analytic_b - fd_b).norm();
        const double mag_b = fd_b.norm();
        result.worst_bias_error = std::max(result.worst_bias_error, mag_b < opt.small_gradient ? err_b : err_b / mag_b);

        const bool w_ok = detail::gradient_close(err_w, mag_w, opt);
        const bool b_ok = detail::gradient_close(err_b, mag_b, opt);
        if (!w_ok || !b_ok) {
            std::ostringstream os;
            os << "trial " << trial << " neuron " << v << ": weight err " << err_w << " (|g| " << mag_w
               << "), bias err " << err_b << " (|g| " << mag_b << "), k " << inst.model.k.value() << ", lambda "
               << inst.lambda;
            result.failure_lines.push_back(os.str());
            ok = false;
        }
    }
    return ok;
}

inline GradcheckResult run_gradcheck(std::uint64_t seed, int trials, const GradcheckOptions& opt = {}) {
    GradcheckResult result;
    std::mt19937_64 rng(seed);
    for (int t = 0; t < trials; ++t) {
        const GradcheckInstance inst = random_gradcheck_instance(rng);
        ++result.trials;
        if (!check_instance(inst, opt, result, t)) ++result.failures;
    }
    return result;
}

}  // namespace pnl

#pragma once

// Point neuron network: V point neuron units with complex weights w_v and
// biases b_v (virtual source positions), fully connected to one output.
//
//     P(x) = sum_v w_v * (D_v / D_v(x)) * exp(i k (D_v(x) - D_v))
//
// with D_v = |b_v - ref| and D_v(x) = |b_v - x|. Training minimizes
//
//     L = sum_q |P(x_q) - P_q|^2 + lambda * sum_v |w_v|
//
// by plain gradient descent using the Wirtinger gradient dL/dw_v* for the
// weights and the real gradient dL/db_v for the biases. Every model is a sum
// of free-space Green functions, so it satisfies the Helmholtz equation
// away from its biases without any constraint term.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pnl/acoustics_core.hpp"
#include "pnl/errors.hpp"
#include "pnl/field.hpp"

namespace pnl {

inline constexpr double kDefaultRelocationEps = 0.05;

struct PointNeuronModel {
    Wavenumber k;
    std::vector<Complex> weights;
    std::vector<Point3> biases;
    /// Point the neuron normalization distance D_v is measured from.
    Point3 reference{};

    std::size_t size() const { return weights.size(); }

    void validate() const {
        if (weights.empty()) throw ConfigError("point neuron model needs at least one neuron");
        if (weights.size() != biases.size()) throw ConfigError("weights and biases differ in length");
        if (!(k.value() > 0.0)) throw ConfigError("model wavenumber must be positive");
        for (const auto& b : biases)
            if (!b.finite()) throw ConfigError("non-finite bias");
        for (const auto& w : weights)
            if (!std::isfinite(w.real()) || !std::isfinite(w.imag())) throw ConfigError("non-finite weight");
    }
};

struct TrainConfig {
    /// Shared step size for weights and biases.
    double learning_rate = 3e-2;
    /// Optional per-group overrides of learning_rate.
    std::optional<double> weight_learning_rate;
    std::optional<double> bias_learning_rate;
    double l1_weight = 1e-3;
    int max_iterations = 20000;
    double relocation_eps = kDefaultRelocationEps;
    /// Stop when the relative loss change over stop_window iterations drops below this.
    double stop_tolerance = 1e-8;
    int stop_window = 50;
    std::uint64_t rng_seed = 0;

    double weight_rate() const { return weight_learning_rate.value_or(learning_rate); }
    double bias_rate() const { return bias_learning_rate.value_or(learning_rate); }

    void validate() const {
        if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
        if (weight_learning_rate && !(*weight_learning_rate >= 0.0))
            throw ConfigError("weight_learning_rate must be >= 0");
        if (bias_learning_rate && !(*bias_learning_rate >= 0.0)) throw ConfigError("bias_learning_rate must be >= 0");
        if (!(l1_weight >= 0.0) || !std::isfinite(l1_weight)) throw ConfigError("l1_weight must be in [0, inf)");
        if (max_iterations <= 0) throw ConfigError("max_iterations must be > 0");
        if (!(relocation_eps > 0.0)) throw ConfigError("relocation_eps must be > 0");
        if (!(stop_tolerance >= 0.0)) throw ConfigError("stop_tolerance must be >= 0");
        if (stop_window <= 0) throw ConfigError("stop_window must be > 0");
    }
};

/// Planar square region hosting the virtual sources, with a disk (the target
/// region) carved out of it.
struct InitRegion {
    Point3 center{};
    double width = 9.0;
    double depth = 9.0;
    double exclusion_radius = 0.0;
    /// Minimum distance from the model reference point.
    double clearance = kDefaultRelocationEps;

    bool admissible(const Point3& p, const Point3& reference) const {
        const double dx = p.x - center.x;
        const double dy = p.y - center.y;
        return std::hypot(dx, dy) > exclusion_radius && distance(p, reference) > clearance;
    }
};

struct RelocationEvent {
    int iteration = 0;
    std::size_t neuron = 0;
    Point3 from;
    Point3 to;
};

struct LossRecord {
    int iteration = 0;
    double total = 0.0;
    double data = 0.0;
    double l1 = 0.0;
    double best_total = 0.0;
};

struct LossHistory {
    std::vector<LossRecord> records;
    std::vector<RelocationEvent> relocations;
};

struct LossTerms {
    double data = 0.0;
    /// sum_v |w_v|, not yet scaled by lambda
    double l1 = 0.0;
    double total(double lambda) const { return data + lambda * l1; }
};

struct Gradients {
    std::vector<Complex> weight;  // dL/dw_v*
    std::vector<Point3> bias;     // dL/db_v
    LossTerms loss;
};

// ---------------------------------------------------------------------------

inline Complex forward(const PointNeuronModel& model, const Point3& x) {
    Complex sum{0.0, 0.0};
    for (std::size_t v = 0; v < model.size(); ++v)
        sum += model.weights[v] * point_neuron_eval(x, model.biases[v], model.k, model.reference);
    return sum;
}

inline std::vector<Complex> forward(const PointNeuronModel& model, std::span<const Point3> xs) {
    std::vector<Complex> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(forward(model, x));
    return out;
}

inline double l1_norm(std::span<const Complex> w) {
    double s = 0.0;
    for (const auto& c : w) s += std::abs(c);
    return s;
}

inline LossTerms loss_terms(const PointNeuronModel& model, const Observations& obs) {
    LossTerms t;
    for (std::size_t q = 0; q < obs.size(); ++q) t.data += std::norm(forward(model, obs.positions[q]) - obs.pressures[q]);
    t.l1 = l1_norm(model.weights);
    return t;
}

inline double cost(const PointNeuronModel& model, const Observations& obs, double lambda) {
    return loss_terms(model, obs).total(lambda);
}

namespace detail {

// Kernel values and distances for every (mic, neuron) pair, mic-major.
struct KernelTable {
    std::size_t neurons = 0;
    std::vector<double> d_ref;     // V
    std::vector<double> d_obs;     // Q*V
    std::vector<Complex> kernel;   // Q*V
    std::vector<Complex> residual; // Q

    Complex K(std::size_t q, std::size_t v) const { return kernel[q * neurons + v]; }
    double Dq(std::size_t q, std::size_t v) const { return d_obs[q * neurons + v]; }
};

inline KernelTable tabulate(const PointNeuronModel& model, const Observations& obs, double min_distance) {
    const std::size_t V = model.size();
    const std::size_t Q = obs.size();
    const double k = model.k.value();
    KernelTable t;
    t.neurons = V;
    t.d_ref.resize(V);
    t.d_obs.resize(Q * V);
    t.kernel.resize(Q * V);
    t.residual.assign(Q, Complex{});
    for (std::size_t v = 0; v < V; ++v) {
        t.d_ref[v] = distance(model.biases[v], model.reference);
        if (!(t.d_ref[v] >= min_distance) || !(t.d_ref[v] > 0.0))
            throw DegenerateGeometryError("neuron " + std::to_string(v) + " within " + std::to_string(min_distance) +
                                          " m of the reference point");
    }
    for (std::size_t q = 0; q < Q; ++q) {
        Complex sum{};
        for (std::size_t v = 0; v < V; ++v) {
            const double dq = distance(model.biases[v], obs.positions[q]);
            if (!(dq >= min_distance) || !(dq > 0.0))
                throw DegenerateGeometryError("neuron " + std::to_string(v) + " within " +
                                              std::to_string(min_distance) + " m of microphone " + std::to_string(q));
            const Complex kv = std::polar(t.d_ref[v] / dq, k * (dq - t.d_ref[v]));
            t.d_obs[q * V + v] = dq;
            t.kernel[q * V + v] = kv;
            sum += model.weights[v] * kv;
        }
        t.residual[q] = sum - obs.pressures[q];
    }
    return t;
}

inline Complex l1_subgradient(const Complex& w) {
    const double m = std::abs(w);
    if (m == 0.0) return {0.0, 0.0};  // theta undefined at the kink
    return 0.5 * w / m;
}

inline Complex weight_gradient(const PointNeuronModel& model, const KernelTable& t, double lambda, std::size_t v) {
    Complex g{};
    for (std::size_t q = 0; q < t.residual.size(); ++q) g += t.residual[q] * std::conj(t.K(q, v));
    return g + lambda * l1_subgradient(model.weights[v]);
}

inline Point3 bias_gradient(const PointNeuronModel& model, const Observations& obs, const KernelTable& t,
                            std::size_t v) {
    const Complex ik{0.0, model.k.value()};
    const Point3 b = model.biases[v];
    const Point3 from_ref = b - model.reference;
    const double D = t.d_ref[v];
    const Complex ref_term = -(ik * D - 1.0) / (D * D);
    double gx = 0.0, gy = 0.0, gz = 0.0;
    for (std::size_t q = 0; q < obs.size(); ++q) {
        const double Dq = t.Dq(q, v);
        const Complex obs_term = (ik * Dq - 1.0) / (Dq * Dq);
        const Complex common = std::conj(t.residual[q]) * model.weights[v] * t.K(q, v);
        const Point3 from_mic = b - obs.positions[q];
        gx += 2.0 * (common * (ref_term * from_ref.x + obs_term * from_mic.x)).real();
        gy += 2.0 * (common * (ref_term * from_ref.y + obs_term * from_mic.y)).real();
        gz += 2.0 * (common * (ref_term * from_ref.z + obs_term * from_mic.z)).real();
    }
    return {gx, gy, gz};
}

inline LossTerms terms_from(const PointNeuronModel& model, const KernelTable& t) {
    LossTerms lt;
    for (const auto& r : t.residual) lt.data += std::norm(r);
    lt.l1 = l1_norm(model.weights);
    return lt;
}

}  // namespace detail

/// dL/dw_v*, the Wirtinger gradient of the cost with respect to the conjugate weight.
inline Complex grad_weight(const PointNeuronModel& model, const Observations& obs, double lambda, std::size_t v,
                           double min_distance = kDefaultRelocationEps) {
    if (v >= model.size()) throw ConfigError("grad_weight: neuron index out of range");
    const auto t = detail::tabulate(model, obs, min_distance);
    return detail::weight_gradient(model, t, lambda, v);
}

/// (dL/dB^x_v, dL/dB^y_v, dL/dB^z_v). The l1 term does not depend on the biases.
inline Point3 grad_bias(const PointNeuronModel& model, const Observations& obs, std::size_t v,
                        double min_distance = kDefaultRelocationEps) {
    if (v >= model.size()) throw ConfigError("grad_bias: neuron index out of range");
    const auto t = detail::tabulate(model, obs, min_distance);
    return detail::bias_gradient(model, obs, t, v);
}

/// All weight and bias gradients plus the loss, from one kernel tabulation.
inline Gradients gradients(const PointNeuronModel& model, const Observations& obs, double lambda,
                           double min_distance = kDefaultRelocationEps) {
    const auto t = detail::tabulate(model, obs, min_distance);
    Gradients g;
    g.weight.resize(model.size());
    g.bias.resize(model.size());
    for (std::size_t v = 0; v < model.size(); ++v) {
        g.weight[v] = detail::weight_gradient(model, t, lambda, v);
        g.bias[v] = detail::bias_gradient(model, obs, t, v);
    }
    g.loss = detail::terms_from(model, t);
    return g;
}

// ---------------------------------------------------------------------------
// Initialization and relocation

inline Point3 sample_region(const InitRegion& region, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ux(-0.5 * region.width, 0.5 * region.width);
    std::uniform_real_distribution<double> uy(-0.5 * region.depth, 0.5 * region.depth);
    const double x = ux(rng);
    const double y = uy(rng);
    return {region.center.x + x, region.center.y + y, region.center.z};
}

inline bool is_degenerate(const Point3& b, const Point3& reference, std::span<const Point3> mics, double eps) {
    if (!(distance(b, reference) >= eps)) return true;
    for (const auto& m : mics)
        if (!(distance(b, m) >= eps)) return true;
    return false;
}

/// Moves every neuron closer than relocation_eps to a microphone or to the
/// reference point onto a fresh random position of the initialization region.
inline PointNeuronModel relocate_degenerate(const PointNeuronModel& model, const Observations& obs,
                                            double relocation_eps, const InitRegion& region, std::mt19937_64& rng,
                                            std::vector<RelocationEvent>* log = nullptr, int iteration = 0) {
    constexpr int kMaxAttempts = 1000;
    PointNeuronModel out = model;
    const std::span<const Point3> mics(obs.positions);
    for (std::size_t v = 0; v < out.size(); ++v) {
        if (!is_degenerate(out.biases[v], out.reference, mics, relocation_eps)) continue;
        bool placed = false;
        for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
            const Point3 candidate = sample_region(region, rng);
            if (!region.admissible(candidate, out.reference)) continue;
            if (is_degenerate(candidate, out.reference, mics, relocation_eps)) continue;
            if (log) log->push_back({iteration, v, out.biases[v], candidate});
            out.biases[v] = candidate;
            placed = true;
        }
        if (!placed)
            throw ConfigError("relocate_degenerate: no admissible position found for neuron " + std::to_string(v) +
                              " after 1000 attempts");
    }
    return out;
}

/// Bias positions on the coarsest uniform square mesh over the region that
/// has at least `count` admissible nodes; `count` of them are taken, evenly
/// spread in row-major order.
inline std::vector<Point3> mesh_biases(std::size_t count, const InitRegion& region, const Point3& reference) {
    if (count == 0) throw ConfigError("mesh_biases: need at least one neuron");
    constexpr std::size_t kMaxSide = 4096;
    for (std::size_t n = 1; n <= kMaxSide; ++n) {
        std::vector<Point3> nodes;
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t i = 0; i < n; ++i) {
                const double fx = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1) - 0.5;
                const double fy = n == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(n - 1) - 0.5;
                const Point3 p{region.center.x + fx * region.width, region.center.y + fy * region.depth,
                               region.center.z};
                if (region.admissible(p, reference)) nodes.push_back(p);
            }
        }
        if (nodes.size() < count) continue;
        std::vector<Point3> picked;
        picked.reserve(count);
        for (std::size_t i = 0; i < count; ++i) picked.push_back(nodes[i * nodes.size() / count]);
        return picked;
    }
    throw ConfigError("init region too small to host " + std::to_string(count) + " neurons");
}

/// Weights with |w| uniform in [0, weight_scale] and uniform phase; biases on the region mesh.
inline PointNeuronModel init_model(Wavenumber k, std::size_t neurons, const InitRegion& region, std::mt19937_64& rng,
                                   double weight_scale = 1.0, const Point3& reference = {}) {
    if (neurons == 0) throw ConfigError("init_model: V must be >= 1");
    if (!(k.value() > 0.0)) throw ConfigError("init_model: wavenumber must be positive");
    if (!(weight_scale >= 0.0 && weight_scale <= 1.0)) throw ConfigError("init_model: weight_scale must be in [0, 1]");
    PointNeuronModel m;
    m.k = k;
    m.reference = reference;
    m.biases = mesh_biases(neurons, region, reference);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    m.weights.reserve(neurons);
    for (std::size_t v = 0; v < neurons; ++v) {
        const double mag = weight_scale * unit(rng);
        const double phase = 2.0 * std::numbers::pi * unit(rng);
        m.weights.push_back(std::polar(mag, phase));
    }
    return m;
}

/// Linear interpolation of the neuron count between two (frequency, V) anchors.
struct NeuronSchedule {
    double f_low = 100.0;
    double v_low = 25.0;
    double f_high = 2000.0;
    double v_high = 465.0;

    std::size_t count(double frequency_hz) const {
        const double t = (frequency_hz - f_low) / (f_high - f_low);
        const double v = std::round(v_low + t * (v_high - v_low));
        return static_cast<std::size_t>(std::max(1.0, v));
    }
};

// ---------------------------------------------------------------------------
// Training

/// One gradient-descent update of all weights and biases, followed by relocation.
inline PointNeuronModel step(const PointNeuronModel& model, const Observations& obs, const TrainConfig& cfg,
                             const InitRegion& region, std::mt19937_64& rng,
                             std::vector<RelocationEvent>* log = nullptr, int iteration = 0,
                             LossTerms* loss_before = nullptr) {
    PointNeuronModel cur = relocate_degenerate(model, obs, cfg.relocation_eps, region, rng, log, iteration);
    const Gradients g = gradients(cur, obs, cfg.l1_weight, cfg.relocation_eps);
    if (loss_before) *loss_before = g.loss;
    const double xw = cfg.weight_rate();
    const double xb = cfg.bias_rate();
    for (std::size_t v = 0; v < cur.size(); ++v) {
        cur.weights[v] -= xw * g.weight[v];
        cur.biases[v] -= xb * g.bias[v];
    }
    return relocate_degenerate(cur, obs, cfg.relocation_eps, region, rng, log, iteration);
}

struct TrainResult {
    PointNeuronModel model;  // lowest-loss iterate
    LossHistory history;
    double best_loss = std::numeric_limits<double>::infinity();
    int iterations = 0;
};

/// Gradient descent until max_iterations or until the loss stalls; returns the best iterate.
inline TrainResult train(const Observations& obs, const PointNeuronModel& initial, const TrainConfig& cfg,
                         const InitRegion& region) {
    cfg.validate();
    obs.validate();
    initial.validate();
    std::mt19937_64 rng(cfg.rng_seed);

    TrainResult result;
    PointNeuronModel cur = relocate_degenerate(initial, obs, cfg.relocation_eps, region, rng,
                                               &result.history.relocations, 0);
    result.model = cur;
    auto& records = result.history.records;
    records.reserve(static_cast<std::size_t>(cfg.max_iterations) + 1);

    auto record = [&](int it, const LossTerms& lt, const PointNeuronModel& m) {
        const double total = lt.total(cfg.l1_weight);
        if (!std::isfinite(total)) throw NumericError("non-finite loss at iteration " + std::to_string(it));
        if (total < result.best_loss) {
            result.best_loss = total;
            result.model = m;
        }
        records.push_back({it, total, lt.data, lt.l1, result.best_loss});
    };

    for (int it = 0; it < cfg.max_iterations; ++it) {
        LossTerms before;
        // cur is never degenerate here, so `before` is exactly its loss.
        PointNeuronModel next = step(cur, obs, cfg, region, rng, &result.history.relocations, it, &before);
        record(it, before, cur);
        cur = std::move(next);
        result.iterations = it + 1;
        const auto n = records.size();
        const auto w = static_cast<std::size_t>(cfg.stop_window);
        if (n > w) {
            const double old_loss = records[n - 1 - w].total;
            const double change = std::abs(old_loss - records[n - 1].total);
            if (change <= cfg.stop_tolerance * std::abs(old_loss)) break;
        }
    }
    LossTerms last = loss_terms(cur, obs);
    record(result.iterations, last, cur);
    return result;
}

}  // namespace pnl

#pragma once

// Physical kernels shared by every other module: the free-space Green
// function, the zeroth-order spherical Hankel function and the point neuron
// unit.
//
// Neuron convention. The point neuron unit is evaluated as
//
//     PN(x | b, k) = (D / D_x) * exp(i k (D_x - D)),   D = |b - ref|, D_x = |b - x|
//
// i.e. the normalized Green function *without* the 1/(4 pi) factor. That
// constant is absorbed into the learned weight, which keeps the forward model
// consistent with the weight and bias gradients in point_neuron.hpp. The
// reference point `ref` defaults to the coordinate origin.

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "pnl/errors.hpp"

namespace pnl {

using Complex = std::complex<double>;

inline constexpr double kDefaultSoundSpeed = 343.0;
inline constexpr double kDefaultSingularityEps = 1e-9;

/// Position in meters, room Cartesian coordinates.
struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Point3& operator+=(const Point3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    constexpr Point3& operator-=(const Point3& o) {
        x -= o.x;
        y -= o.y;
        z -= o.z;
        return *this;
    }
    friend constexpr Point3 operator+(Point3 a, const Point3& b) { return a += b; }
    friend constexpr Point3 operator-(Point3 a, const Point3& b) { return a -= b; }
    friend constexpr Point3 operator*(double s, const Point3& p) { return {s * p.x, s * p.y, s * p.z}; }
    friend constexpr bool operator==(const Point3&, const Point3&) = default;

    double norm() const { return std::sqrt(x * x + y * y + z * z); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline double distance(const Point3& a, const Point3& b) { return (a - b).norm(); }

inline std::string to_string(const Point3& p) {
    std::ostringstream os;
    os << '(' << p.x << ", " << p.y << ", " << p.z << ')';
    return os.str();
}

/// Angular wavenumber k = 2 pi f / c in rad/m.
class Wavenumber {
public:
    constexpr Wavenumber() = default;
    explicit Wavenumber(double k) : k_(k) {
        if (!std::isfinite(k)) throw ConfigError("wavenumber must be finite");
    }

    static Wavenumber from_frequency(double frequency_hz, double sound_speed = kDefaultSoundSpeed) {
        if (!(sound_speed > 0.0)) throw ConfigError("sound speed must be positive");
        if (!(frequency_hz > 0.0)) throw ConfigError("frequency must be positive");
        return Wavenumber(2.0 * std::numbers::pi * frequency_hz / sound_speed);
    }

    constexpr double value() const { return k_; }
    constexpr Wavenumber operator-() const {
        Wavenumber w;
        w.k_ = -k_;
        return w;
    }

private:
    double k_ = 0.0;
};

/// exp(i k r) / (4 pi r), r = |x - y|.
inline Complex green_free_space(const Point3& x, const Point3& y, Wavenumber k,
                                double singularity_eps = kDefaultSingularityEps) {
    const double r = distance(x, y);
    if (!(r > singularity_eps)) {
        throw SingularityError("green_free_space: observer within " + std::to_string(singularity_eps) +
                               " m of source " + to_string(y));
    }
    return std::polar(1.0 / (4.0 * std::numbers::pi * r), k.value() * r);
}

/// h0^(1)(r) = exp(i r) / (i r).
inline Complex spherical_hankel0(double r, double singularity_eps = kDefaultSingularityEps) {
    if (!(r > singularity_eps)) throw SingularityError("spherical_hankel0: argument at or below singularity threshold");
    // exp(ir)/(ir) = (sin r - i cos r) / r
    return {std::sin(r) / r, -std::cos(r) / r};
}

/// Point neuron output for input x and bias (virtual source position) b.
inline Complex point_neuron_eval(const Point3& x, const Point3& b, Wavenumber k, const Point3& reference = {},
                                 double singularity_eps = kDefaultSingularityEps) {
    const double d_ref = distance(b, reference);
    const double d_obs = distance(b, x);
    if (!(d_ref > singularity_eps)) {
        throw SingularityError("point_neuron_eval: bias " + to_string(b) + " coincides with the reference point");
    }
    if (!(d_obs > singularity_eps)) {
        throw SingularityError("point_neuron_eval: input " + to_string(x) + " coincides with bias");
    }
    return std::polar(d_ref / d_obs, k.value() * (d_obs - d_ref));
}

}  // namespace pnl

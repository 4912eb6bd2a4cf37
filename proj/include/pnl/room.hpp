#pragma once

// Shoebox room simulation with the image source method, evaluated directly
// in the frequency domain as a sum of free-space Green functions, plus
// microphone placement and measurement noise.
//
// The room is centered on the coordinate origin; wall d- sits at -L_d/2 and
// wall d+ at +L_d/2. Along one axis the image with integer index n lies at
// n*L + (-1)^n * s and has hit the + wall ceil(n/2) times and the - wall
// floor(n/2) times for n > 0 (mirrored for n < 0).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pnl/acoustics_core.hpp"
#include "pnl/errors.hpp"
#include "pnl/field.hpp"

namespace pnl {

struct RoomSpec {
    std::array<double, 3> dimensions{6.0, 4.0, 4.0};
    /// (x-, x+, y-, y+, z-, z+)
    std::array<double, 6> reflection{0.8, 0.8, 0.8, 0.8, 0.0, 0.0};

    void validate() const {
        for (double d : dimensions)
            if (!(d > 0.0) || !std::isfinite(d)) throw ConfigError("room dimensions must be positive");
        for (double b : reflection)
            if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("reflection coefficients must lie in [0, 1]");
    }

    bool contains(const Point3& p) const {
        const std::array<double, 3> c{p.x, p.y, p.z};
        for (int d = 0; d < 3; ++d)
            if (!(std::abs(c[d]) < 0.5 * dimensions[d])) return false;
        return true;
    }
};

struct SourceSpec {
    Point3 position;
    Complex strength{1.0, 0.0};
};

struct ImageSource {
    Point3 position;
    double amplitude = 1.0;
    int order = 0;
    std::array<int, 3> index{0, 0, 0};
};

enum class Placement { circular, random };

inline std::string to_string(Placement p) { return p == Placement::circular ? "circular" : "random"; }

inline Placement parse_placement(const std::string& s) {
    if (s == "circular") return Placement::circular;
    if (s == "random") return Placement::random;
    throw ConfigError("unknown microphone placement '" + s + "'");
}

struct MicArray {
    std::vector<Point3> positions;
    Placement placement = Placement::circular;
    std::uint64_t seed = 0;

    std::size_t size() const { return positions.size(); }
};

namespace detail {

inline double image_coordinate(int n, double length, double source) {
    return n * length + ((n % 2) ? -source : source);
}

/// beta_minus^(hits on - wall) * beta_plus^(hits on + wall)
inline double axis_amplitude(int n, double beta_minus, double beta_plus) {
    const int an = std::abs(n);
    const int first = (an + 1) / 2;  // wall met first
    const int second = an / 2;
    if (n > 0) return std::pow(beta_plus, first) * std::pow(beta_minus, second);
    return std::pow(beta_minus, first) * std::pow(beta_plus, second);
}

}  // namespace detail

/// All images with |nx|+|ny|+|nz| <= max_order, ordered by order and then by
/// (nx, ny, nz) lexicographically.
inline std::vector<ImageSource> enumerate_images(const RoomSpec& room, const SourceSpec& src, int max_order) {
    room.validate();
    if (max_order < 0) throw ConfigError("max_order must be >= 0");
    const auto& L = room.dimensions;
    const auto& b = room.reflection;
    const std::array<double, 3> s{src.position.x, src.position.y, src.position.z};
    std::vector<ImageSource> out;
    for (int order = 0; order <= max_order; ++order) {
        for (int nx = -order; nx <= order; ++nx) {
            const int rest = order - std::abs(nx);
            for (int ny = -rest; ny <= rest; ++ny) {
                const int az = rest - std::abs(ny);
                for (int nz = -az; nz <= az; nz += (az == 0 ? 1 : 2 * az)) {
                    const std::array<int, 3> n{nx, ny, nz};
                    ImageSource im;
                    im.order = order;
                    im.index = n;
                    im.position = {detail::image_coordinate(nx, L[0], s[0]), detail::image_coordinate(ny, L[1], s[1]),
                                   detail::image_coordinate(nz, L[2], s[2])};
                    im.amplitude = detail::axis_amplitude(nx, b[0], b[1]) * detail::axis_amplitude(ny, b[2], b[3]) *
                                   detail::axis_amplitude(nz, b[4], b[5]);
                    out.push_back(im);
                }
            }
        }
    }
    return out;
}

inline void validate_sources(const RoomSpec& room, std::span<const SourceSpec> sources) {
    for (const auto& s : sources)
        if (!room.contains(s.position)) throw ConfigError("source " + to_string(s.position) + " is not inside the room");
}

/// Pressure at each point: sum over sources and their images of
/// amplitude * strength * G(x | image, k). Zero-amplitude images are skipped.
inline std::vector<Complex> simulate_field(const RoomSpec& room, std::span<const SourceSpec> sources,
                                           std::span<const Point3> points, Wavenumber k, int max_order) {
    room.validate();
    validate_sources(room, sources);
    struct Weighted {
        Point3 position;
        Complex gain;
    };
    std::vector<Weighted> images;
    for (const auto& src : sources)
        for (const auto& im : enumerate_images(room, src, max_order))
            if (im.amplitude != 0.0) images.push_back({im.position, im.amplitude * src.strength});

    std::vector<Complex> out(points.size());
    for (std::size_t m = 0; m < points.size(); ++m) {
        Complex sum{};
        for (const auto& im : images) sum += im.gain * green_free_space(points[m], im.position, k);
        out[m] = sum;
    }
    return out;
}

inline FieldSamples simulate_samples(const RoomSpec& room, std::span<const SourceSpec> sources,
                                     std::span<const Point3> points, double frequency_hz, double sound_speed,
                                     int max_order) {
    FieldSamples fs;
    fs.frequency_hz = frequency_hz;
    fs.k = Wavenumber::from_frequency(frequency_hz, sound_speed);
    fs.points.assign(points.begin(), points.end());
    fs.values = simulate_field(room, sources, points, fs.k, max_order);
    return fs;
}

/// Q = 2N + 1 with N = ceil(k_max R).
inline int circular_mic_count(double f_max_hz, double radius, double sound_speed = kDefaultSoundSpeed) {
    const double k = Wavenumber::from_frequency(f_max_hz, sound_speed).value();
    return 2 * static_cast<int>(std::ceil(k * radius)) + 1;
}

inline MicArray place_mics_circular(const Point3& center, double radius, int count) {
    if (count < 1) throw ConfigError("place_mics_circular: Q must be >= 1");
    if (!(radius > 0.0)) throw ConfigError("place_mics_circular: radius must be positive");
    MicArray a;
    a.placement = Placement::circular;
    a.positions.reserve(static_cast<std::size_t>(count));
    for (int q = 0; q < count; ++q) {
        const double phi = 2.0 * std::numbers::pi * q / count;
        a.positions.push_back({center.x + radius * std::cos(phi), center.y + radius * std::sin(phi), center.z});
    }
    return a;
}

inline constexpr double kMinMicSeparation = 0.01;

/// Area-uniform random points on the disk, at least 1 cm apart.
inline MicArray place_mics_random(const Point3& center, double radius, int count, std::uint64_t seed) {
    if (count < 1) throw ConfigError("place_mics_random: Q must be >= 1");
    if (!(radius > 0.0)) throw ConfigError("place_mics_random: radius must be positive");
    constexpr int kMaxAttempts = 100000;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    MicArray a;
    a.placement = Placement::random;
    a.seed = seed;
    int attempts = 0;
    while (static_cast<int>(a.positions.size()) < count) {
        if (++attempts > kMaxAttempts)
            throw ConfigError("place_mics_random: could not place " + std::to_string(count) +
                              " microphones with 1 cm separation");
        const double r = radius * std::sqrt(unit(rng));
        const double phi = 2.0 * std::numbers::pi * unit(rng);
        const Point3 p{center.x + r * std::cos(phi), center.y + r * std::sin(phi), center.z};
        const bool crowded = std::any_of(a.positions.begin(), a.positions.end(),
                                         [&](const Point3& o) { return distance(o, p) < kMinMicSeparation; });
        if (!crowded) a.positions.push_back(p);
    }
    return a;
}

/// Circularly-symmetric complex Gaussian noise with one variance for all
/// samples: mean |p|^2 / sigma^2 = 10^(snr_db / 10). snr_db = +inf adds nothing.
inline std::vector<Complex> add_noise(std::span<const Complex> samples, double snr_db, std::uint64_t seed) {
    std::vector<Complex> out(samples.begin(), samples.end());
    if (std::isinf(snr_db) && snr_db > 0.0) return out;
    if (std::isnan(snr_db)) throw ConfigError("add_noise: SNR is NaN");
    double power = 0.0;
    for (const auto& s : samples) power += std::norm(s);
    if (samples.empty() || power == 0.0) throw ConfigError("add_noise: SNR undefined for an all-zero signal");
    power /= static_cast<double>(samples.size());
    const double variance = power / std::pow(10.0, snr_db / 10.0);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5 * variance));
    for (auto& s : out) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        s += Complex{re, im};
    }
    return out;
}

inline FieldSamples add_noise(const FieldSamples& samples, double snr_db, std::uint64_t seed) {
    FieldSamples out = samples;
    out.values = add_noise(samples.values, snr_db, seed);
    return out;
}

}  // namespace pnl

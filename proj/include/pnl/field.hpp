#pragma once

#include <cstddef>
#include <vector>

#include "pnl/acoustics_core.hpp"
#include "pnl/errors.hpp"

namespace pnl {

/// Complex pressures at a list of points, one wavenumber.
struct FieldSamples {
    double frequency_hz = 0.0;
    Wavenumber k;
    std::vector<Point3> points;
    std::vector<Complex> values;

    std::size_t size() const { return points.size(); }
};

/// Microphone positions and the pressures measured there.
struct Observations {
    std::vector<Point3> positions;
    std::vector<Complex> pressures;

    std::size_t size() const { return positions.size(); }

    void validate() const {
        if (positions.empty()) throw ConfigError("observations: need at least one microphone");
        if (positions.size() != pressures.size()) throw ConfigError("observations: positions/pressures length mismatch");
        for (std::size_t i = 0; i < positions.size(); ++i)
            for (std::size_t j = i + 1; j < positions.size(); ++j)
                if (positions[i] == positions[j])
                    throw ConfigError("observations: duplicate microphone position " + to_string(positions[i]));
    }
};

inline Observations to_observations(const FieldSamples& s) { return {s.points, s.values}; }

}  // namespace pnl

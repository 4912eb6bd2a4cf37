#pragma once

// Scenario files: the simulated room, its sources, the target region and the
// microphone setup. JSON on disk; every field has a default matching the
// reverberant-room experiment (6 x 4 x 4 m room, five unit sources, R = 1 m
// target disk centered at (-1, 0.5, 0), 75 mics, 100..2000 Hz, 20 dB SNR).

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pnl/errors.hpp"
#include "pnl/io.hpp"
#include "pnl/metrics.hpp"
#include "pnl/room.hpp"

namespace pnl {

inline std::vector<double> frequency_range(double start, double stop, double step) {
    if (!(step > 0.0) || !(stop >= start) || !(start > 0.0)) throw ConfigError("invalid frequency range");
    std::vector<double> out;
    const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(start + static_cast<double>(i) * step);
    return out;
}

struct Scenario {
    RoomSpec room;
    std::vector<SourceSpec> sources{
        {{-2.65, 1.5, 0.0}}, {{-2.4, -1.2, 0.0}}, {{0.2, -1.5, 0.0}}, {{1.7, -0.2, 0.0}}, {{1.0, 1.2, 0.0}}};
    Point3 target_center{-1.0, 0.5, 0.0};
    double target_radius = 1.0;
    Placement placement = Placement::circular;
    int mic_count = 75;
    std::vector<double> frequencies = frequency_range(100.0, 2000.0, 100.0);
    double sound_speed = kDefaultSoundSpeed;
    /// +inf means no noise
    double snr_db = 20.0;
    int max_order = 30;
    double grid_spacing = 0.053;
    GridRegistration grid_registration = GridRegistration::cell_centered;
    /// Evaluate (and map) the field out to this radius; points beyond target_radius are labeled.
    std::optional<double> extrapolation_radius;
    std::uint64_t seed = 0;

    void validate() const {
        room.validate();
        if (sources.empty()) throw ConfigError("scenario: at least one source required");
        validate_sources(room, sources);
        if (!(target_radius > 0.0)) throw ConfigError("scenario: target radius must be positive");
        if (mic_count < 1) throw ConfigError("scenario: mic count must be >= 1");
        if (frequencies.empty()) throw ConfigError("scenario: frequency list is empty");
        for (double f : frequencies)
            if (!(f > 0.0)) throw ConfigError("scenario: frequencies must be positive");
        if (!(sound_speed > 0.0)) throw ConfigError("scenario: sound speed must be positive");
        if (std::isnan(snr_db)) throw ConfigError("scenario: snr_db is NaN");
        if (max_order < 0) throw ConfigError("scenario: max_order must be >= 0");
        if (!(grid_spacing > 0.0)) throw ConfigError("scenario: grid spacing must be positive");
        if (extrapolation_radius && !(*extrapolation_radius >= target_radius))
            throw ConfigError("scenario: extrapolation_radius must be >= target radius");
        for (const auto& s : sources)
            if (distance(s.position, target_center) <= target_radius)
                throw ConfigError("scenario: source " + to_string(s.position) + " lies inside the target region");
    }
};

namespace json_detail {

using nlohmann::json;

inline Point3 point(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 3) throw ConfigError(what + ": expected [x, y, z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json point(const Point3& p) { return json::array({p.x, p.y, p.z}); }

/// A number, or the string "none" / null for "no noise".
inline double snr(const json& j) {
    if (j.is_null()) return std::numeric_limits<double>::infinity();
    if (j.is_string()) {
        if (j.get<std::string>() == "none") return std::numeric_limits<double>::infinity();
        throw ConfigError("snr_db: expected a number or \"none\"");
    }
    return j.get<double>();
}

inline json snr(double v) { return std::isinf(v) ? json("none") : json(v); }

inline std::vector<double> frequencies(const json& j) {
    if (j.is_array()) return j.get<std::vector<double>>();
    if (j.is_object()) return frequency_range(j.at("start").get<double>(), j.at("stop").get<double>(), j.at("step").get<double>());
    throw ConfigError("frequencies: expected a list or {start, stop, step}");
}

}  // namespace json_detail

inline Scenario scenario_from_json(const nlohmann::json& j) {
    using namespace json_detail;
    Scenario s;
    try {
        if (j.contains("room")) {
            const auto& r = j.at("room");
            if (r.contains("dimensions")) {
                const auto d = r.at("dimensions").get<std::vector<double>>();
                if (d.size() != 3) throw ConfigError("room.dimensions: expected three values");
                s.room.dimensions = {d[0], d[1], d[2]};
            }
            if (r.contains("reflection")) {
                const auto b = r.at("reflection").get<std::vector<double>>();
                if (b.size() != 6) throw ConfigError("room.reflection: expected six values");
                for (int i = 0; i < 6; ++i) s.room.reflection[static_cast<std::size_t>(i)] = b[static_cast<std::size_t>(i)];
            }
        }
        if (j.contains("sources")) {
            s.sources.clear();
            for (const auto& src : j.at("sources")) {
                SourceSpec spec;
                spec.position = point(src.at("position"), "source.position");
                if (src.contains("strength")) {
                    const auto st = src.at("strength");
                    spec.strength = st.is_array() ? Complex{st.at(0).get<double>(), st.at(1).get<double>()}
                                                  : Complex{st.get<double>(), 0.0};
                }
                s.sources.push_back(spec);
            }
        }
        if (j.contains("target")) {
            const auto& t = j.at("target");
            if (t.contains("center")) s.target_center = point(t.at("center"), "target.center");
            if (t.contains("radius")) s.target_radius = t.at("radius").get<double>();
        }
        if (j.contains("mics")) {
            const auto& m = j.at("mics");
            if (m.contains("placement")) s.placement = parse_placement(m.at("placement").get<std::string>());
            if (m.contains("count")) s.mic_count = m.at("count").get<int>();
        }
        if (j.contains("frequencies")) s.frequencies = frequencies(j.at("frequencies"));
        if (j.contains("sound_speed")) s.sound_speed = j.at("sound_speed").get<double>();
        if (j.contains("snr_db")) s.snr_db = snr(j.at("snr_db"));
        if (j.contains("max_order")) s.max_order = j.at("max_order").get<int>();
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            if (g.contains("spacing")) s.grid_spacing = g.at("spacing").get<double>();
            if (g.contains("registration")) {
                const auto r = g.at("registration").get<std::string>();
                if (r == "cell_centered") s.grid_registration = GridRegistration::cell_centered;
                else if (r == "node_centered") s.grid_registration = GridRegistration::node_centered;
                else throw ConfigError("grid.registration: expected cell_centered or node_centered");
            }
            if (g.contains("extrapolation_radius") && !g.at("extrapolation_radius").is_null())
                s.extrapolation_radius = g.at("extrapolation_radius").get<double>();
        }
        if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
    s.validate();
    return s;
}

inline nlohmann::json scenario_to_json(const Scenario& s) {
    using namespace json_detail;
    json j;
    j["room"]["dimensions"] = s.room.dimensions;
    j["room"]["reflection"] = s.room.reflection;
    j["sources"] = json::array();
    for (const auto& src : s.sources)
        j["sources"].push_back({{"position", point(src.position)}, {"strength", {src.strength.real(), src.strength.imag()}}});
    j["target"] = {{"center", point(s.target_center)}, {"radius", s.target_radius}};
    j["mics"] = {{"placement", to_string(s.placement)}, {"count", s.mic_count}};
    j["frequencies"] = s.frequencies;
    j["sound_speed"] = s.sound_speed;
    j["snr_db"] = snr(s.snr_db);
    j["max_order"] = s.max_order;
    j["grid"] = {{"spacing", s.grid_spacing},
                 {"registration", s.grid_registration == GridRegistration::cell_centered ? "cell_centered" : "node_centered"},
                 {"extrapolation_radius", s.extrapolation_radius ? json(*s.extrapolation_radius) : json(nullptr)}};
    j["seed"] = s.seed;
    return j;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io::read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
    return scenario_from_json(j);
}

/// Evaluation grid of a scenario and, per point, whether it lies inside the target region.
struct EvalGrid {
    std::vector<Point3> points;
    std::vector<bool> in_region;
};

inline EvalGrid scenario_grid(const Scenario& s) {
    const double radius = s.extrapolation_radius.value_or(s.target_radius);
    EvalGrid g;
    g.points = make_eval_grid(s.target_center, radius, s.grid_spacing, s.grid_registration);
    const double r2 = s.target_radius * s.target_radius * (1.0 + 1e-12);
    for (const auto& p : g.points) {
        const double dx = p.x - s.target_center.x;
        const double dy = p.y - s.target_center.y;
        g.in_region.push_back(dx * dx + dy * dy <= r2);
    }
    return g;
}

}  // namespace pnl

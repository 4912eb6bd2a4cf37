#pragma once

// Experiment orchestration: simulate observations, train point-neuron models
// and fit the harmonics baseline per frequency, evaluate against ground
// truth, and sweep microphone counts and noise levels.
//
// Output layout under the output directory:
//   data/seed_<s>/obs_f<f>.txt, obs_clean_f<f>.txt, truth_f<f>.txt
//   checkpoints/<method>_f<f>_seed<s>.txt (+ .loss.csv, .reloc.csv, .failed)
//   metrics.csv, nse/<method>_f<f>_seed<s>.txt
//   sweep_runs.csv, sweep_summary.csv
//   manifest_<command>.json

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "pnl/errors.hpp"
#include "pnl/harmonics.hpp"
#include "pnl/io.hpp"
#include "pnl/metrics.hpp"
#include "pnl/point_neuron.hpp"
#include "pnl/rng.hpp"
#include "pnl/room.hpp"
#include "pnl/scenario.hpp"

namespace pnl {

inline constexpr const char* kVersion = "0.1.0";

enum class Method { point_neuron, harmonics };

inline std::string to_string(Method m) { return m == Method::point_neuron ? "point_neuron" : "harmonics"; }

inline Method parse_method(const std::string& s) {
    if (s == "point_neuron") return Method::point_neuron;
    if (s == "harmonics") return Method::harmonics;
    throw ConfigError("unknown method '" + s + "' (expected point_neuron or harmonics)");
}

enum class ReferencePoint { origin, target_center };

struct PointNeuronSettings {
    /// Fixed neuron count; otherwise the schedule decides per frequency.
    std::optional<std::size_t> neurons;
    NeuronSchedule schedule;
    double init_weight_scale = 1.0;
    double init_width = 9.0;
    double init_depth = 9.0;
    /// Virtual sources start at least this far outside the target disk.
    double exclusion_margin = 0.0;
    ReferencePoint reference = ReferencePoint::origin;
};

struct HarmonicSettings {
    std::optional<double> tikhonov;
    std::optional<int> order;
};

struct ExperimentConfig {
    Scenario scenario;
    std::vector<Method> methods{Method::point_neuron};
    std::vector<double> frequencies;
    std::vector<std::uint64_t> seeds{0};
    std::vector<int> q_list;
    std::vector<double> snr_list;
    std::optional<Placement> placement;
    TrainConfig train;
    PointNeuronSettings point_neuron;
    HarmonicSettings harmonics;
    std::vector<double> nse_frequencies{900.0};
    /// 0 picks the hardware concurrency.
    int workers = 0;
    std::filesystem::path data_dir;

    Placement effective_placement() const { return placement.value_or(scenario.placement); }
    std::vector<int> effective_q() const { return q_list.empty() ? std::vector<int>{scenario.mic_count} : q_list; }
    std::vector<double> effective_snr() const {
        return snr_list.empty() ? std::vector<double>{scenario.snr_db} : snr_list;
    }

    void validate() const {
        scenario.validate();
        train.validate();
        if (methods.empty()) throw ConfigError("config: method list is empty");
        if (frequencies.empty()) throw ConfigError("config: frequency list is empty");
        if (seeds.empty()) throw ConfigError("config: seed list is empty");
        for (double f : frequencies)
            if (!(f > 0.0)) throw ConfigError("config: frequencies must be positive");
        for (int q : q_list)
            if (q < 1) throw ConfigError("config: Q values must be >= 1");
        for (double s : snr_list)
            if (std::isnan(s)) throw ConfigError("config: SNR values must not be NaN");
        auto unique = [](auto v, const char* what) {
            std::sort(v.begin(), v.end());
            if (std::adjacent_find(v.begin(), v.end()) != v.end())
                throw ConfigError(std::string("config: duplicate entries in ") + what);
        };
        unique(methods, "methods");
        unique(frequencies, "frequencies");
        unique(seeds, "seeds");
        unique(q_list, "q_list");
        unique(snr_list, "snr_list");
        const auto& pn = point_neuron;
        if (pn.neurons && *pn.neurons == 0) throw ConfigError("config: point_neuron.neurons must be >= 1");
        if (!(pn.init_weight_scale >= 0.0 && pn.init_weight_scale <= 1.0))
            throw ConfigError("config: init_weight_scale must lie in [0, 1]");
        if (!(pn.init_width > 0.0) || !(pn.init_depth > 0.0)) throw ConfigError("config: init region must be non-empty");
        if (!(pn.exclusion_margin >= 0.0)) throw ConfigError("config: exclusion_margin must be >= 0");
        if (harmonics.tikhonov && !(*harmonics.tikhonov >= 0.0)) throw ConfigError("config: tikhonov must be >= 0");
        if (harmonics.order && *harmonics.order < 0) throw ConfigError("config: harmonic order must be >= 0");
        if (workers < 0) throw ConfigError("config: workers must be >= 0");
    }
};

inline ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    ExperimentConfig c;
    try {
        if (j.contains("scenario")) {
            const auto& s = j.at("scenario");
            if (s.is_string()) {
                std::filesystem::path p = s.get<std::string>();
                if (p.is_relative()) p = base_dir / p;
                c.scenario = load_scenario(p);
            } else {
                c.scenario = scenario_from_json(s);
            }
        }
        c.frequencies = c.scenario.frequencies;
        if (j.contains("methods")) {
            c.methods.clear();
            for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
        }
        if (j.contains("frequencies")) c.frequencies = json_detail::frequencies(j.at("frequencies"));
        if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        if (j.contains("q_list")) c.q_list = j.at("q_list").get<std::vector<int>>();
        if (j.contains("snr_list")) {
            const auto& l = j.at("snr_list");
            if (!l.is_array() || l.empty()) throw ConfigError("config: snr_list must be a non-empty list");
            for (const auto& v : l) c.snr_list.push_back(json_detail::snr(v));
        }
        if (j.contains("q_list") && c.q_list.empty()) throw ConfigError("config: q_list must be a non-empty list");
        if (j.contains("placement")) c.placement = parse_placement(j.at("placement").get<std::string>());
        if (j.contains("train")) {
            const auto& t = j.at("train");
            auto& tc = c.train;
            if (t.contains("learning_rate")) tc.learning_rate = t.at("learning_rate").get<double>();
            if (t.contains("weight_learning_rate")) tc.weight_learning_rate = t.at("weight_learning_rate").get<double>();
            if (t.contains("bias_learning_rate")) tc.bias_learning_rate = t.at("bias_learning_rate").get<double>();
            if (t.contains("l1_weight")) tc.l1_weight = t.at("l1_weight").get<double>();
            if (t.contains("max_iterations")) tc.max_iterations = t.at("max_iterations").get<int>();
            if (t.contains("relocation_eps")) tc.relocation_eps = t.at("relocation_eps").get<double>();
            if (t.contains("stop_tolerance")) tc.stop_tolerance = t.at("stop_tolerance").get<double>();
            if (t.contains("stop_window")) tc.stop_window = t.at("stop_window").get<int>();
        }
        if (j.contains("point_neuron")) {
            const auto& p = j.at("point_neuron");
            auto& pn = c.point_neuron;
            if (p.contains("neurons") && !p.at("neurons").is_null()) pn.neurons = p.at("neurons").get<std::size_t>();
            if (p.contains("schedule")) {
                const auto& s = p.at("schedule");
                pn.schedule = {s.at("f_low").get<double>(), s.at("v_low").get<double>(), s.at("f_high").get<double>(),
                               s.at("v_high").get<double>()};
            }
            if (p.contains("init_weight_scale")) pn.init_weight_scale = p.at("init_weight_scale").get<double>();
            if (p.contains("init_width")) pn.init_width = p.at("init_width").get<double>();
            if (p.contains("init_depth")) pn.init_depth = p.at("init_depth").get<double>();
            if (p.contains("exclusion_margin")) pn.exclusion_margin = p.at("exclusion_margin").get<double>();
            if (p.contains("reference")) {
                const auto r = p.at("reference").get<std::string>();
                if (r == "origin") pn.reference = ReferencePoint::origin;
                else if (r == "target_center") pn.reference = ReferencePoint::target_center;
                else throw ConfigError("config: point_neuron.reference must be origin or target_center");
            }
        }
        if (j.contains("harmonics")) {
            const auto& h = j.at("harmonics");
            if (h.contains("tikhonov") && !h.at("tikhonov").is_null()) c.harmonics.tikhonov = h.at("tikhonov").get<double>();
            if (h.contains("order") && !h.at("order").is_null()) c.harmonics.order = h.at("order").get<int>();
        }
        if (j.contains("nse_frequencies")) c.nse_frequencies = j.at("nse_frequencies").get<std::vector<double>>();
        if (j.contains("workers")) c.workers = j.at("workers").get<int>();
        if (j.contains("data_dir")) {
            std::filesystem::path p = j.at("data_dir").get<std::string>();
            c.data_dir = p.is_relative() ? base_dir / p : p;
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io::read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
    return config_from_json(j, path.parent_path());
}

/// Canonical JSON of everything that influences results (not workers or paths).
inline nlohmann::json config_to_json(const ExperimentConfig& c) {
    using nlohmann::json;
    json j;
    j["scenario"] = scenario_to_json(c.scenario);
    j["methods"] = json::array();
    for (auto m : c.methods) j["methods"].push_back(to_string(m));
    j["frequencies"] = c.frequencies;
    j["seeds"] = c.seeds;
    j["q_list"] = c.effective_q();
    j["snr_list"] = json::array();
    for (double s : c.effective_snr()) j["snr_list"].push_back(json_detail::snr(s));
    j["placement"] = to_string(c.effective_placement());
    const auto& t = c.train;
    j["train"] = {{"learning_rate", t.learning_rate}, {"weight_learning_rate", t.weight_rate()},
                  {"bias_learning_rate", t.bias_rate()}, {"l1_weight", t.l1_weight},
                  {"max_iterations", t.max_iterations}, {"relocation_eps", t.relocation_eps},
                  {"stop_tolerance", t.stop_tolerance}, {"stop_window", t.stop_window}};
    const auto& p = c.point_neuron;
    j["point_neuron"] = {{"neurons", p.neurons ? json(*p.neurons) : json(nullptr)},
                         {"schedule", {{"f_low", p.schedule.f_low}, {"v_low", p.schedule.v_low},
                                       {"f_high", p.schedule.f_high}, {"v_high", p.schedule.v_high}}},
                         {"init_weight_scale", p.init_weight_scale}, {"init_width", p.init_width},
                         {"init_depth", p.init_depth}, {"exclusion_margin", p.exclusion_margin},
                         {"reference", p.reference == ReferencePoint::origin ? "origin" : "target_center"}};
    j["harmonics"] = {{"tikhonov", c.harmonics.tikhonov ? json(*c.harmonics.tikhonov) : json(nullptr)},
                      {"order", c.harmonics.order ? json(*c.harmonics.order) : json(nullptr)}};
    j["nse_frequencies"] = c.nse_frequencies;
    return j;
}

inline std::string config_hash(const ExperimentConfig& c) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config_to_json(c).dump())));
    return buf;
}

// ---------------------------------------------------------------------------
// Worker pool

inline int resolve_workers(int requested) {
    if (requested > 0) return requested;
    return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

/// Runs body(i) for i in [0, n) on up to `workers` threads. The first
/// exception thrown by any body is rethrown after all threads finish.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body) {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    const auto threads = static_cast<std::size_t>(std::max(1, workers));
    if (threads == 1 || n <= 1) {
        run();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < std::min(threads, n); ++t) pool.emplace_back(run);
    }
    if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Pipeline pieces

inline MicArray make_mics(const Scenario& s, Placement placement, int q, std::uint64_t seed) {
    if (placement == Placement::circular) return place_mics_circular(s.target_center, s.target_radius, q);
    return place_mics_random(s.target_center, s.target_radius, q, derive_seed(seed, "mics"));
}

inline FieldSamples simulate_at(const Scenario& s, std::span<const Point3> points, double frequency_hz) {
    return simulate_samples(s.room, s.sources, points, frequency_hz, s.sound_speed, s.max_order);
}

/// Clean and noisy microphone samples for one (frequency, seed).
struct MicData {
    MicArray mics;
    FieldSamples clean;
    FieldSamples noisy;
};

inline MicData simulate_mics(const Scenario& s, Placement placement, int q, double snr_db, double frequency_hz,
                             std::uint64_t seed) {
    MicData d;
    d.mics = make_mics(s, placement, q, seed);
    d.clean = simulate_at(s, d.mics.positions, frequency_hz);
    d.noisy = add_noise(d.clean, snr_db, derive_seed(seed, "noise", frequency_hz));
    return d;
}

inline InitRegion init_region(const ExperimentConfig& c) {
    InitRegion r;
    r.center = c.scenario.target_center;
    r.width = c.point_neuron.init_width;
    r.depth = c.point_neuron.init_depth;
    r.exclusion_radius = c.scenario.target_radius + c.point_neuron.exclusion_margin;
    r.clearance = c.train.relocation_eps;
    return r;
}

inline Point3 model_reference(const ExperimentConfig& c) {
    return c.point_neuron.reference == ReferencePoint::origin ? Point3{} : c.scenario.target_center;
}

inline std::size_t neuron_count(const ExperimentConfig& c, double frequency_hz) {
    return c.point_neuron.neurons.value_or(c.point_neuron.schedule.count(frequency_hz));
}

inline TrainResult train_point_neuron(const ExperimentConfig& c, const Observations& obs, double frequency_hz,
                                      std::uint64_t seed) {
    const Wavenumber k = Wavenumber::from_frequency(frequency_hz, c.scenario.sound_speed);
    const InitRegion region = init_region(c);
    std::mt19937_64 rng(derive_seed(seed, "init", frequency_hz));
    const PointNeuronModel init = init_model(k, neuron_count(c, frequency_hz), region, rng,
                                             c.point_neuron.init_weight_scale, model_reference(c));
    TrainConfig tc = c.train;
    tc.rng_seed = derive_seed(seed, "relocate", frequency_hz);
    return train(obs, init, tc, region);
}

inline HarmonicModel fit_baseline(const ExperimentConfig& c, const Observations& obs, double frequency_hz) {
    const Wavenumber k = Wavenumber::from_frequency(frequency_hz, c.scenario.sound_speed);
    const int order = c.harmonics.order.value_or(truncation_order(k, c.scenario.target_radius));
    return fit_harmonics(obs, k, c.scenario.target_center, order, c.harmonics.tikhonov);
}

struct RegionMetrics {
    double nmse_db = 0.0;
    double mac = 0.0;
};

inline RegionMetrics region_metrics(std::span<const Complex> truth, std::span<const Complex> est,
                                    const std::vector<bool>& in_region) {
    std::vector<Complex> t, e;
    for (std::size_t i = 0; i < truth.size(); ++i)
        if (in_region.empty() || in_region[i]) {
            t.push_back(truth[i]);
            e.push_back(est[i]);
        }
    return {nmse(t, e), mac(t, e)};
}

inline std::string format_nse_map(const std::vector<Point3>& points, const NseMap& map,
                                  const std::vector<bool>& in_region, double frequency_hz) {
    const bool labeled = std::find(in_region.begin(), in_region.end(), false) != in_region.end();
    std::ostringstream os;
    os << "# pnl nse map: x y nse_db" << (labeled ? " in_region" : "") << "\n";
    os << "frequency_hz " << io::fmt17(frequency_hz) << "\n";
    os << "count " << points.size() << "\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        os << io::fmt17(points[i].x) << ' ' << io::fmt17(points[i].y) << ' '
           << (map.flagged[i] ? std::string("nan") : io::fmt17(map.nse_db[i]));
        if (labeled) os << ' ' << (in_region[i] ? 1 : 0);
        os << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Manifest

struct JobStatus {
    std::string method;
    double frequency_hz = 0.0;
    std::string placement;
    int q = 0;
    double snr_db = 0.0;
    std::uint64_t seed = 0;
    /// ok | numeric_failure | error
    std::string status = "ok";
    std::string message;
    std::vector<std::string> outputs;
};

struct RunManifest {
    std::string command;
    std::string config_hash;
    std::string started_at;
    double wall_seconds = 0.0;
    std::vector<JobStatus> jobs;

    bool any_numeric_failure() const {
        return std::any_of(jobs.begin(), jobs.end(), [](const JobStatus& j) { return j.status != "ok"; });
    }
};

inline std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline void write_manifest(const std::filesystem::path& out, const RunManifest& m) {
    using nlohmann::json;
    json j;
    j["command"] = m.command;
    j["config_hash"] = m.config_hash;
    j["software_version"] = kVersion;
    j["started_at"] = m.started_at;
    j["wall_seconds"] = m.wall_seconds;
    j["jobs"] = json::array();
    for (const auto& s : m.jobs)
        j["jobs"].push_back({{"method", s.method}, {"frequency_hz", s.frequency_hz}, {"placement", s.placement},
                             {"Q", s.q}, {"snr_db", json_detail::snr(s.snr_db)}, {"seed", s.seed},
                             {"status", s.status}, {"message", s.message}, {"outputs", s.outputs}});
    io::write_atomic(out / ("manifest_" + m.command + ".json"), j.dump(2) + "\n");
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// ---------------------------------------------------------------------------
// Paths

namespace paths {
namespace fs = std::filesystem;
inline std::string tag(double f) { return "f" + io::fmt_short(f); }
inline fs::path seed_dir(const fs::path& data, std::uint64_t seed) { return data / ("seed_" + std::to_string(seed)); }
inline fs::path observations(const fs::path& data, std::uint64_t seed, double f) {
    return seed_dir(data, seed) / ("obs_" + tag(f) + ".txt");
}
inline fs::path clean_observations(const fs::path& data, std::uint64_t seed, double f) {
    return seed_dir(data, seed) / ("obs_clean_" + tag(f) + ".txt");
}
inline fs::path truth(const fs::path& data, std::uint64_t seed, double f) {
    return seed_dir(data, seed) / ("truth_" + tag(f) + ".txt");
}
inline fs::path checkpoint(const fs::path& out, Method m, double f, std::uint64_t seed) {
    return out / "checkpoints" / (to_string(m) + "_" + tag(f) + "_seed" + std::to_string(seed) + ".txt");
}
inline fs::path sidecar(const fs::path& checkpoint, const std::string& suffix) {
    return checkpoint.string() + suffix;
}
inline fs::path nse(const fs::path& out, Method m, double f, std::uint64_t seed) {
    return out / "nse" / (to_string(m) + "_" + tag(f) + "_seed" + std::to_string(seed) + ".txt");
}
}  // namespace paths

inline std::filesystem::path data_root(const ExperimentConfig& c, const std::filesystem::path& out) {
    return c.data_dir.empty() ? out / "data" : c.data_dir;
}

// ---------------------------------------------------------------------------
// Commands

/// Writes noisy and clean microphone files plus evaluation-grid truth for
/// every frequency of the scenario (or `frequencies` when non-empty).
inline RunManifest cmd_simulate(const Scenario& s, const std::filesystem::path& data, std::uint64_t seed,
                                std::vector<double> frequencies = {}, int workers = 1) {
    s.validate();
    if (frequencies.empty()) frequencies = s.frequencies;
    Stopwatch clock;
    RunManifest manifest;
    manifest.command = "simulate";
    manifest.started_at = utc_now();
    ExperimentConfig tmp;
    tmp.scenario = s;
    tmp.frequencies = frequencies;
    tmp.seeds = {seed};
    manifest.config_hash = config_hash(tmp);

    const EvalGrid grid = scenario_grid(s);
    manifest.jobs.resize(frequencies.size());
    parallel_for(frequencies.size(), workers, [&](std::size_t i) {
        const double f = frequencies[i];
        const MicData d = simulate_mics(s, s.placement, s.mic_count, s.snr_db, f, seed);
        std::map<std::string, std::string> meta{{"placement", to_string(s.placement)},
                                                {"Q", std::to_string(s.mic_count)},
                                                {"snr_db", io::snr_label(s.snr_db)},
                                                {"seed", std::to_string(seed)}};
        const auto obs_path = paths::observations(data, seed, f);
        const auto clean_path = paths::clean_observations(data, seed, f);
        const auto truth_path = paths::truth(data, seed, f);
        io::write_field(obs_path, {"observations", d.noisy, meta, {}});
        io::write_field(clean_path, {"observations_clean", d.clean, meta, {}});
        io::write_field(truth_path, {"truth", simulate_at(s, grid.points, f), meta, grid.in_region});
        auto& st = manifest.jobs[i];
        st = {"simulate", f, to_string(s.placement), s.mic_count, s.snr_db, seed, "ok", "", {}};
        st.outputs = {obs_path.string(), clean_path.string(), truth_path.string()};
    });
    manifest.wall_seconds = clock.seconds();
    return manifest;
}

namespace detail {

struct TrainJob {
    Method method;
    double frequency_hz;
    std::uint64_t seed;
};

inline std::vector<TrainJob> train_jobs(const ExperimentConfig& c) {
    std::vector<TrainJob> jobs;
    for (auto m : c.methods)
        for (double f : c.frequencies)
            for (auto s : c.seeds) jobs.push_back({m, f, s});
    return jobs;
}

}  // namespace detail

/// One checkpoint per (method, frequency, seed). A non-finite loss or a
/// singular baseline fit marks that job failed and leaves a .failed file.
inline RunManifest cmd_train(const ExperimentConfig& c, const std::filesystem::path& out) {
    c.validate();
    Stopwatch clock;
    RunManifest manifest;
    manifest.command = "train";
    manifest.started_at = utc_now();
    manifest.config_hash = config_hash(c);
    const auto data = data_root(c, out);
    const auto jobs = detail::train_jobs(c);
    for (const auto& j : jobs)
        if (!std::filesystem::exists(paths::observations(data, j.seed, j.frequency_hz)))
            throw IoError("missing observation file " + paths::observations(data, j.seed, j.frequency_hz).string() +
                          " (run simulate first)");

    manifest.jobs.resize(jobs.size());
    parallel_for(jobs.size(), resolve_workers(c.workers), [&](std::size_t i) {
        const auto& job = jobs[i];
        const io::FieldFile file = io::read_field(paths::observations(data, job.seed, job.frequency_hz));
        const Observations obs = to_observations(file.samples);
        auto& st = manifest.jobs[i];
        st.method = to_string(job.method);
        st.frequency_hz = job.frequency_hz;
        st.seed = job.seed;
        st.placement = file.meta.count("placement") ? file.meta.at("placement") : "";
        st.q = static_cast<int>(obs.size());
        st.snr_db = file.meta.count("snr_db") ? io::parse_double(file.meta.at("snr_db"), "snr_db") : 0.0;
        const auto ckpt = paths::checkpoint(out, job.method, job.frequency_hz, job.seed);
        const auto failed = paths::sidecar(ckpt, ".failed");
        std::filesystem::remove(failed);
        try {
            if (job.method == Method::point_neuron) {
                const TrainResult r = train_point_neuron(c, obs, job.frequency_hz, job.seed);
                io::write_atomic(ckpt, io::format_checkpoint(r.model, job.frequency_hz));
                io::write_atomic(paths::sidecar(ckpt, ".loss.csv"), io::format_loss_history(r.history));
                io::write_atomic(paths::sidecar(ckpt, ".reloc.csv"), io::format_relocations(r.history));
                st.outputs = {ckpt.string(), paths::sidecar(ckpt, ".loss.csv").string(),
                              paths::sidecar(ckpt, ".reloc.csv").string()};
            } else {
                const HarmonicModel m = fit_baseline(c, obs, job.frequency_hz);
                io::write_atomic(ckpt, io::format_checkpoint(m, job.frequency_hz));
                st.outputs = {ckpt.string()};
            }
        } catch (const NumericError& e) {
            st.status = "numeric_failure";
            st.message = e.what();
            std::filesystem::remove(ckpt);
            io::write_atomic(failed, st.message + "\n");
            st.outputs = {failed.string()};
        }
    });
    manifest.wall_seconds = clock.seconds();
    return manifest;
}

inline std::string metrics_header() { return "method,frequency_hz,placement,Q,snr_db,seed,nmse_db,mac\n"; }

inline std::string metrics_row(const std::string& method, double f, const std::string& placement, int q, double snr,
                               std::uint64_t seed, double nmse_db, double mac_value) {
    std::ostringstream os;
    os << method << ',' << io::fmt_short(f) << ',' << placement << ',' << q << ',' << io::snr_label(snr) << ','
       << seed << ',' << io::fmt17(nmse_db) << ',' << io::fmt17(mac_value) << "\n";
    return os.str();
}

/// metrics.csv over every trained checkpoint; NSE maps for the configured
/// frequencies. Jobs whose training failed are skipped and reported.
inline RunManifest cmd_evaluate(const ExperimentConfig& c, const std::filesystem::path& out) {
    c.validate();
    Stopwatch clock;
    RunManifest manifest;
    manifest.command = "evaluate";
    manifest.started_at = utc_now();
    manifest.config_hash = config_hash(c);
    const auto data = data_root(c, out);
    const auto jobs = detail::train_jobs(c);
    for (const auto& j : jobs) {
        const auto ckpt = paths::checkpoint(out, j.method, j.frequency_hz, j.seed);
        if (!std::filesystem::exists(ckpt) && !std::filesystem::exists(paths::sidecar(ckpt, ".failed")))
            throw IoError("missing checkpoint " + ckpt.string() + " (run train first)");
        if (!std::filesystem::exists(paths::truth(data, j.seed, j.frequency_hz)))
            throw IoError("missing truth file " + paths::truth(data, j.seed, j.frequency_hz).string());
    }

    std::vector<std::string> rows(jobs.size());
    manifest.jobs.resize(jobs.size());
    parallel_for(jobs.size(), resolve_workers(c.workers), [&](std::size_t i) {
        const auto& job = jobs[i];
        const auto ckpt = paths::checkpoint(out, job.method, job.frequency_hz, job.seed);
        const io::FieldFile truth = io::read_field(paths::truth(data, job.seed, job.frequency_hz));
        auto& st = manifest.jobs[i];
        st.method = to_string(job.method);
        st.frequency_hz = job.frequency_hz;
        st.seed = job.seed;
        st.placement = truth.meta.count("placement") ? truth.meta.at("placement") : "";
        st.q = truth.meta.count("Q") ? std::stoi(truth.meta.at("Q")) : 0;
        st.snr_db = truth.meta.count("snr_db") ? io::parse_double(truth.meta.at("snr_db"), "snr_db") : 0.0;
        if (!std::filesystem::exists(ckpt)) {
            st.status = "numeric_failure";
            st.message = "training failed: " + io::read_file(paths::sidecar(ckpt, ".failed"));
            return;
        }
        const auto& pts = truth.samples.points;
        const std::vector<Complex> est = job.method == Method::point_neuron
                                             ? forward(io::read_point_neuron_checkpoint(ckpt), pts)
                                             : eval_harmonics(io::read_harmonic_checkpoint(ckpt), pts);
        const RegionMetrics rm = region_metrics(truth.samples.values, est, truth.in_region);
        rows[i] = metrics_row(st.method, job.frequency_hz, st.placement, st.q, st.snr_db, job.seed, rm.nmse_db, rm.mac);
        st.outputs = {(out / "metrics.csv").string()};
        if (std::find(c.nse_frequencies.begin(), c.nse_frequencies.end(), job.frequency_hz) != c.nse_frequencies.end()) {
            const auto path = paths::nse(out, job.method, job.frequency_hz, job.seed);
            io::write_atomic(path, format_nse_map(pts, nse_map(truth.samples.values, est), truth.in_region,
                                                  job.frequency_hz));
            st.outputs.push_back(path.string());
        }
    });
    std::string csv = metrics_header();
    for (const auto& r : rows) csv += r;
    io::write_atomic(out / "metrics.csv", csv);
    manifest.wall_seconds = clock.seconds();
    return manifest;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepRow {
    Method method;
    double frequency_hz;
    Placement placement;
    int q;
    double snr_db;
    std::uint64_t seed;
    double nmse_db = std::numeric_limits<double>::quiet_NaN();
    double mac = std::numeric_limits<double>::quiet_NaN();
    std::string status = "ok";
    std::string message;
};

struct SweepSummaryRow {
    Method method;
    double frequency_hz;
    Placement placement;
    int q;
    double snr_db;
    int seeds_ok = 0;
    int seeds_failed = 0;
    double mean_nmse_db = std::numeric_limits<double>::quiet_NaN();
    double mean_mac = std::numeric_limits<double>::quiet_NaN();
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<SweepSummaryRow> summary;
    RunManifest manifest;
};

/// Runs the full cross product in memory. Row order is fixed by the config
/// (method, frequency, Q, SNR, seed), independent of scheduling.
inline SweepResult run_sweep(const ExperimentConfig& c) {
    c.validate();
    Stopwatch clock;
    SweepResult result;
    result.manifest.command = "sweep";
    result.manifest.started_at = utc_now();
    result.manifest.config_hash = config_hash(c);
    const Placement placement = c.effective_placement();
    const auto qs = c.effective_q();
    const auto snrs = c.effective_snr();
    const Scenario& s = c.scenario;
    const int workers = resolve_workers(c.workers);

    const EvalGrid grid = scenario_grid(s);
    std::vector<std::vector<Complex>> truths(c.frequencies.size());
    parallel_for(c.frequencies.size(), workers, [&](std::size_t i) {
        truths[i] = simulate_at(s, grid.points, c.frequencies[i]).values;
    });

    struct Cell {
        std::size_t fi;
        std::size_t row;
    };
    std::vector<Cell> cells;
    for (auto m : c.methods)
        for (std::size_t fi = 0; fi < c.frequencies.size(); ++fi)
            for (int q : qs)
                for (double snr : snrs)
                    for (auto seed : c.seeds) {
                        cells.push_back({fi, result.rows.size()});
                        result.rows.push_back({m, c.frequencies[fi], placement, q, snr, seed, std::numeric_limits<double>::quiet_NaN(),
                                               std::numeric_limits<double>::quiet_NaN(), "ok", ""});
                    }

    parallel_for(cells.size(), workers, [&](std::size_t i) {
        auto& row = result.rows[cells[i].row];
        try {
            const MicData d = simulate_mics(s, row.placement, row.q, row.snr_db, row.frequency_hz, row.seed);
            const Observations obs = to_observations(d.noisy);
            const std::vector<Complex> est =
                row.method == Method::point_neuron
                    ? forward(train_point_neuron(c, obs, row.frequency_hz, row.seed).model, grid.points)
                    : eval_harmonics(fit_baseline(c, obs, row.frequency_hz), grid.points);
            const RegionMetrics rm = region_metrics(truths[cells[i].fi], est, grid.in_region);
            row.nmse_db = rm.nmse_db;
            row.mac = rm.mac;
        } catch (const NumericError& e) {
            row.status = "numeric_failure";
            row.message = e.what();
        } catch (const ConfigError& e) {
            row.status = "error";
            row.message = e.what();
        }
    });

    for (std::size_t i = 0; i < result.rows.size(); i += c.seeds.size()) {
        const auto& first = result.rows[i];
        SweepSummaryRow sr{first.method, first.frequency_hz, first.placement, first.q, first.snr_db};
        double sum_n = 0.0, sum_m = 0.0;
        for (std::size_t k = i; k < i + c.seeds.size(); ++k) {
            const auto& r = result.rows[k];
            if (r.status == "ok") {
                ++sr.seeds_ok;
                sum_n += r.nmse_db;
                sum_m += r.mac;
            } else {
                ++sr.seeds_failed;
            }
        }
        if (sr.seeds_ok > 0) {
            sr.mean_nmse_db = sum_n / sr.seeds_ok;
            sr.mean_mac = sum_m / sr.seeds_ok;
        }
        result.summary.push_back(sr);
    }

    for (const auto& r : result.rows)
        result.manifest.jobs.push_back({to_string(r.method), r.frequency_hz, to_string(r.placement), r.q, r.snr_db,
                                        r.seed, r.status, r.message, {"sweep_runs.csv"}});
    result.manifest.wall_seconds = clock.seconds();
    return result;
}

inline std::string format_sweep_runs(const SweepResult& r) {
    std::ostringstream os;
    os << "method,frequency_hz,placement,Q,snr_db,seed,nmse_db,mac,status\n";
    for (const auto& row : r.rows) {
        os << to_string(row.method) << ',' << io::fmt_short(row.frequency_hz) << ',' << to_string(row.placement) << ','
           << row.q << ',' << io::snr_label(row.snr_db) << ',' << row.seed << ','
           << (row.status == "ok" ? io::fmt17(row.nmse_db) : "") << ','
           << (row.status == "ok" ? io::fmt17(row.mac) : "") << ',' << row.status << "\n";
    }
    return os.str();
}

inline std::string format_sweep_summary(const SweepResult& r) {
    std::ostringstream os;
    os << "method,frequency_hz,placement,Q,snr_db,seeds_ok,seeds_failed,mean_nmse_db,mean_mac\n";
    for (const auto& s : r.summary) {
        os << to_string(s.method) << ',' << io::fmt_short(s.frequency_hz) << ',' << to_string(s.placement) << ','
           << s.q << ',' << io::snr_label(s.snr_db) << ',' << s.seeds_ok << ',' << s.seeds_failed << ','
           << (s.seeds_ok ? io::fmt17(s.mean_nmse_db) : "") << ',' << (s.seeds_ok ? io::fmt17(s.mean_mac) : "")
           << "\n";
    }
    return os.str();
}

inline SweepResult cmd_sweep(const ExperimentConfig& c, const std::filesystem::path& out) {
    SweepResult r = run_sweep(c);
    io::write_atomic(out / "sweep_runs.csv", format_sweep_runs(r));
    io::write_atomic(out / "sweep_summary.csv", format_sweep_summary(r));
    for (auto& j : r.manifest.jobs) j.outputs = {(out / "sweep_runs.csv").string()};
    write_manifest(out, r.manifest);
    return r;
}

}  // namespace pnl

// pnl: simulate | train | evaluate | gradcheck | sweep
//
// Exit codes: 0 success, 1 validation or I/O error, 2 numeric failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pnl/experiment.hpp"
#include "pnl/gradcheck.hpp"

namespace fs = std::filesystem;

namespace {

struct Overrides {
    std::string config;
    std::string scenario;
    std::string out = "out";
    std::string data;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::string frequencies;
    std::string methods;
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) out.push_back(item);
    return out;
}

pnl::ExperimentConfig resolve_config(const Overrides& o) {
    pnl::ExperimentConfig c;
    if (!o.config.empty()) {
        c = pnl::load_config(o.config);
    } else {
        if (!o.scenario.empty()) c.scenario = pnl::load_scenario(o.scenario);
        c.frequencies = c.scenario.frequencies;
    }
    if (!o.config.empty() && !o.scenario.empty()) {
        c.scenario = pnl::load_scenario(o.scenario);
    }
    if (!o.frequencies.empty()) {
        c.frequencies.clear();
        for (const auto& f : split_list(o.frequencies)) c.frequencies.push_back(pnl::io::parse_double(f, "--frequencies"));
    }
    if (!o.methods.empty()) {
        c.methods.clear();
        for (const auto& m : split_list(o.methods)) c.methods.push_back(pnl::parse_method(m));
    }
    if (o.seed) c.seeds = {*o.seed};
    if (o.workers) c.workers = *o.workers;
    if (!o.data.empty()) c.data_dir = o.data;
    c.validate();
    return c;
}

void add_common(CLI::App* cmd, Overrides& o, bool with_methods) {
    cmd->add_option("--config", o.config, "experiment config (JSON)");
    cmd->add_option("--scenario", o.scenario, "scenario file (JSON); overrides the config's scenario");
    cmd->add_option("--out", o.out, "output directory")->capture_default_str();
    cmd->add_option("--data", o.data, "directory holding simulated data (default <out>/data)");
    cmd->add_option("--seed", o.seed, "run a single seed instead of the config's seed list");
    cmd->add_option("--workers", o.workers, "worker threads (0 = all cores)");
    cmd->add_option("--frequencies", o.frequencies, "comma-separated frequencies in Hz");
    if (with_methods) cmd->add_option("--methods", o.methods, "comma-separated subset of point_neuron,harmonics");
}

int report(const pnl::RunManifest& m) {
    int failures = 0;
    for (const auto& j : m.jobs)
        if (j.status != "ok") {
            ++failures;
            std::cerr << "FAILED " << j.method << " f=" << j.frequency_hz << " seed=" << j.seed << ": " << j.message
                      << "\n";
        }
    std::cout << m.command << ": " << m.jobs.size() - static_cast<std::size_t>(failures) << "/" << m.jobs.size()
              << " jobs ok in " << m.wall_seconds << " s\n";
    return failures ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Point neuron learning for sound field reconstruction"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(pnl::kVersion));

    Overrides o;
    auto* simulate = app.add_subcommand("simulate", "simulate microphone observations and ground truth");
    add_common(simulate, o, false);
    auto* train = app.add_subcommand("train", "train point neuron models and fit the harmonics baseline");
    add_common(train, o, true);
    auto* evaluate = app.add_subcommand("evaluate", "compute NMSE/MAC and NSE maps against ground truth");
    add_common(evaluate, o, true);
    auto* sweep = app.add_subcommand("sweep", "cross product of Q, SNR, seeds and frequencies");
    add_common(sweep, o, true);

    std::uint64_t gc_seed = 0;
    int trials = 100;
    bool sign_flip = false;
    auto* gradcheck = app.add_subcommand("gradcheck", "compare analytic gradients with finite differences");
    gradcheck->add_option("--seed", gc_seed, "RNG seed")->capture_default_str();
    gradcheck->add_option("--trials", trials, "random instances")->capture_default_str()->check(CLI::NonNegativeNumber);
    gradcheck->add_flag("--inject-sign-flip", sign_flip, "flip the analytic gradient sign (self-test)")->group("");

    CLI11_PARSE(app, argc, argv);

    try {
        const fs::path out = o.out;
        if (*simulate) {
            if (o.config.empty() && o.scenario.empty()) throw pnl::ConfigError("simulate needs --scenario or --config");
            const pnl::ExperimentConfig c = resolve_config(o);
            const fs::path data = pnl::data_root(c, out);
            pnl::RunManifest all;
            all.command = "simulate";
            all.started_at = pnl::utc_now();
            all.config_hash = pnl::config_hash(c);
            pnl::Stopwatch clock;
            pnl::Scenario s = c.scenario;
            if (c.placement) s.placement = *c.placement;
            for (auto seed : c.seeds) {
                const auto m = pnl::cmd_simulate(s, data, seed, c.frequencies, pnl::resolve_workers(c.workers));
                all.jobs.insert(all.jobs.end(), m.jobs.begin(), m.jobs.end());
            }
            all.wall_seconds = clock.seconds();
            pnl::write_manifest(out, all);
            return report(all);
        }
        if (*train || *evaluate) {
            if (o.config.empty() && o.scenario.empty()) throw pnl::ConfigError("needs --config or --scenario");
            const pnl::ExperimentConfig c = resolve_config(o);
            const auto m = *train ? pnl::cmd_train(c, out) : pnl::cmd_evaluate(c, out);
            pnl::write_manifest(out, m);
            return report(m);
        }
        if (*sweep) {
            if (o.config.empty()) throw pnl::ConfigError("sweep needs --config");
            const auto r = pnl::cmd_sweep(resolve_config(o), out);
            return report(r.manifest);
        }
        if (*gradcheck) {
            if (trials == 0) {
                std::cerr << "warning: 0 trials requested, nothing was checked\n";
                std::cout << "gradcheck: PASS (vacuous, 0 trials)\n";
                return 0;
            }
            pnl::GradcheckOptions opt;
            opt.inject_sign_flip = sign_flip;
            const auto r = pnl::run_gradcheck(gc_seed, trials, opt);
            for (const auto& line : r.failure_lines) std::cerr << line << "\n";
            std::cout << "gradcheck: " << (r.passed() ? "PASS" : "FAIL") << " " << r.trials - r.failures << "/"
                      << r.trials << " instances, worst relative error weight " << r.worst_weight_error << " bias "
                      << r.worst_bias_error << "\n";
            return r.passed() ? 0 : 2;
        }
    } catch (const pnl::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 2;
    } catch (const pnl::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

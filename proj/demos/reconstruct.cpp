// Reconstructs the field over the target disk at one frequency with both
// methods and prints the region error.
//
//   pnl_demo_reconstruct [frequency_hz] [iterations]

#include <cstdlib>
#include <iostream>
#include <string>

#include "pnl/experiment.hpp"

int main(int argc, char** argv) {
    const double f = argc > 1 ? std::stod(argv[1]) : 500.0;
    pnl::ExperimentConfig c;
    c.train.weight_learning_rate = 4e-4;
    c.train.bias_learning_rate = 3e-3;
    c.train.l1_weight = 1e-2;
    c.train.max_iterations = argc > 2 ? std::atoi(argv[2]) : 3000;
    c.point_neuron.reference = pnl::ReferencePoint::target_center;
    c.point_neuron.exclusion_margin = 0.3;
    c.point_neuron.init_weight_scale = 1e-3;
    const std::uint64_t seed = 1;

    const auto data = pnl::simulate_mics(c.scenario, pnl::Placement::circular, c.scenario.mic_count,
                                         c.scenario.snr_db, f, seed);
    const auto obs = pnl::to_observations(data.noisy);

    const auto grid = pnl::scenario_grid(c.scenario);
    const auto truth = pnl::simulate_at(c.scenario, grid.points, f);

    const auto pn = pnl::train_point_neuron(c, obs, f, seed);
    const auto hm = pnl::fit_baseline(c, obs, f);

    const auto m_pn = pnl::region_metrics(truth.values, pnl::forward(pn.model, grid.points), grid.in_region);
    const auto m_hm = pnl::region_metrics(truth.values, pnl::eval_harmonics(hm, grid.points), grid.in_region);

    std::cout << f << " Hz, " << obs.size() << " mics, " << pn.model.size() << " neurons, " << pn.iterations
              << " iterations\n";
    std::cout << "point_neuron  nmse " << m_pn.nmse_db << " dB  mac " << m_pn.mac << "\n";
    std::cout << "harmonics     nmse " << m_hm.nmse_db << " dB  mac " << m_hm.mac << "\n";
}

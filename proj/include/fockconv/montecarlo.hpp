#pragma once

#include <cstdint>
#include <vector>

#include "fockconv/planner.hpp"
#include "fockconv/rng.hpp"

namespace fockconv::mc {

/// One stochastic pass of a policy: the realized detector outcomes, the
/// transmittances the policy selected, and what came out.
struct TrajectoryRecord {
    std::vector<int> outcomes;
    std::vector<double> transmittances;
    bool success;
    int output_photons;

    nlohmann::json to_json() const;
};

struct Estimate {
    double value;
    double std_error;  ///< sqrt(p(1-p)/N)
    std::uint64_t trials;
    std::uint64_t seed;
};

struct SimulationResult {
    Estimate estimate;
    std::uint64_t successes;
    /// Empirical output mixture conditioned on success; vacuum when no
    /// trial succeeded.
    PhotonNumberMixture output;
    std::vector<std::uint64_t> output_counts;
};

/// Samples one trajectory: at each stage the reflected photon count is
/// binomial, the detector outcome is drawn from the detector model, the
/// eta_o channel thins the main beam before each stage after the first,
/// and the policy is consulted with the detected history. Success means
/// the detected counts sum to m - target.
TrajectoryRecord simulate_trajectory(const Policy& policy, int m, const DetectorModel& det,
                                     double eta_o, SubstreamRng& rng);

/// Runs n_trials independent trajectories (trial i on substream i of the
/// seed) and aggregates the success estimate and conditional output
/// histogram. Deterministic given the seed and independent of the thread
/// count.
SimulationResult estimate_success(const Policy& policy, int m, const DetectorModel& det,
                                  double eta_o, std::uint64_t n_trials, std::uint64_t seed,
                                  int threads = 1);

}  // namespace fockconv::mc

#include "fockconv/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace fockconv::mc {

namespace {

int sample_outcome(const DetectorModel& det, int photons, SubstreamRng& rng) {
    switch (det.kind()) {
        case DetectorModel::Kind::IdealPnr:
            return photons;
        case DetectorModel::Kind::InefficientPnr:
            return rng.binomial(photons, det.efficiency());
        case DetectorModel::Kind::ClickPair: {
            const int survived = rng.binomial(photons, det.efficiency());
            if (survived <= 1) return survived;
            const double two_clicks = 1.0 - std::pow(2.0, 1 - survived);
            return rng.uniform() < two_clicks ? 2 : 1;
        }
    }
    return 0;
}

}  // namespace

TrajectoryRecord simulate_trajectory(const Policy& policy, int m, const DetectorModel& det,
                                     double eta_o, SubstreamRng& rng) {
    TrajectoryRecord record;
    record.outcomes.reserve(policy.depth);
    record.transmittances.reserve(policy.depth);

    const Policy* node = &policy;
    int count = m;
    int detected = 0;
    bool discarded = false;

    for (int stage = 1; stage <= policy.depth; ++stage) {
        if (node != nullptr && node->status == Policy::Status::Failed) {
            discarded = true;
            break;
        }
        if (stage >= 2) count = rng.binomial(count, eta_o);

        const double t = node != nullptr ? node->transmittance : 1.0;
        const int reflected = rng.binomial(count, 1.0 - t);
        count -= reflected;

        const int outcome = sample_outcome(det, reflected, rng);
        detected += outcome;
        record.outcomes.push_back(outcome);
        record.transmittances.push_back(t);

        if (node != nullptr) {
            const auto it = node->children.find(outcome);
            node = it != node->children.end() ? &it->second : nullptr;
        }
    }

    record.success = !discarded && detected == m - policy.target;
    record.output_photons = count;
    return record;
}

nlohmann::json TrajectoryRecord::to_json() const {
    return nlohmann::json{{"outcomes", outcomes},
                          {"transmittances", transmittances},
                          {"success", success},
                          {"output_photons", output_photons}};
}

SimulationResult estimate_success(const Policy& policy, int m, const DetectorModel& det,
                                  double eta_o, std::uint64_t n_trials, std::uint64_t seed,
                                  int threads) {
    if (n_trials == 0) throw std::domain_error("estimate_success requires at least one trial");
    if (m < 0 || m > PhotonNumberMixture::kMaxSupportedPhotons) {
        throw std::domain_error("estimate_success: photon number out of range");
    }
    LossChannel channel(eta_o);

    const int n_workers = std::clamp<int>(threads, 1, std::max(1u, std::thread::hardware_concurrency()));

    struct Tally {
        std::uint64_t successes = 0;
        std::vector<std::uint64_t> output_counts;
    };
    std::vector<Tally> tallies(n_workers);
    for (auto& tally : tallies) tally.output_counts.assign(m + 1, 0);

    const auto worker = [&](int index) {
        Tally& tally = tallies[index];
        const std::uint64_t begin = n_trials * index / n_workers;
        const std::uint64_t end = n_trials * (index + 1) / n_workers;
        for (std::uint64_t trial = begin; trial < end; ++trial) {
            SubstreamRng rng(seed, trial);
            const TrajectoryRecord record =
                simulate_trajectory(policy, m, det, channel.transmittance(), rng);
            if (record.success) {
                ++tally.successes;
                ++tally.output_counts[record.output_photons];
            }
        }
    };

    if (n_workers == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker, i);
        for (auto& thread : pool) thread.join();
    }

    SimulationResult result;
    result.output_counts.assign(m + 1, 0);
    result.successes = 0;
    for (const Tally& tally : tallies) {
        result.successes += tally.successes;
        for (int c = 0; c <= m; ++c) result.output_counts[c] += tally.output_counts[c];
    }

    const double p = static_cast<double>(result.successes) / static_cast<double>(n_trials);
    result.estimate = {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n_trials)), n_trials, seed};

    if (result.successes > 0) {
        UnnormalizedMixture mixture;
        for (int c = 0; c <= m; ++c) {
            mixture.add(c, static_cast<double>(result.output_counts[c]));
        }
        result.output = mixture.normalized();
    } else {
        result.output = PhotonNumberMixture();
    }
    return result;
}

}  // namespace fockconv::mc

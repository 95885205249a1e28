#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "json.hpp"

namespace fockconv::lab {

/// Pulse source: a true two-photon state, or the attenuated coherent state
/// (Poisson photon number) used to emulate it in the coincidence basis.
struct SourceModel {
    enum class Kind { Fock2, Coherent };

    Kind kind = Kind::Coherent;
    double mu = 0.05;  ///< mean photons per pulse (Coherent only)

    static SourceModel fock2() { return {Kind::Fock2, 0.0}; }
    static SourceModel coherent(double mu);
};

/// Transmittance of the optical path feeding each output port's detector
/// pair. Balancing the experiment means making the effective per-photon
/// detection probability equal across ports.
struct PortLosses {
    double aux1 = 1.0;
    double aux2 = 1.0;
    double out = 1.0;
};

/// Port indices: 1 = AUX1 is fixed by the effective-transmittance formula;
/// 0 = AUX2 and 2 = OUT are this project's convention. Each port feeds two
/// binary detectors (A and B) behind a balanced splitter, so detector
/// index = 2 * port + side with side 0 = A, 1 = B.
inline constexpr int kPortAux2 = 0;
inline constexpr int kPortAux1 = 1;
inline constexpr int kPortOut = 2;
inline constexpr int kNumDetectors = 6;
inline constexpr int kNumPairs = 15;

std::string detector_name(int detector);

/// Index of the unordered detector pair {a, b}, a != b, in 0..14.
int pair_index(int a, int b);
std::string pair_name(int index);

/// Tallies from a pulse train: per-detector click counts, counts of each
/// exactly-two-click pattern, and an aggregate of pulses with three or more
/// clicks.
struct CoincidenceCounts {
    std::array<std::uint64_t, kNumDetectors> singles{};
    std::array<std::uint64_t, kNumPairs> pairs{};
    std::uint64_t higher = 0;

    CoincidenceCounts& merge(const CoincidenceCounts& other);
    std::uint64_t total_pairs() const;

    /// {"singles": {"D0A": n, ...}, "pairs": {"D0A-D0B": n, ...}, "higher": n}
    nlohmann::json to_json() const;
};

struct EmulationSettings {
    SourceModel source = SourceModel::coherent(0.05);
    double t1 = 2.0 / 3.0;
    double t2 = 0.5;
    /// When on, any AUX1 click switches the second splitter to T = 1 within
    /// the same pulse (the feedforward latency is treated as zero).
    bool feedforward = true;
    PortLosses losses{};
    double det_eta = 1.0;
};

/// Runs the six-detector experiment: each pulse draws a photon number from
/// the source, splits at BS1 toward AUX1, switches BS2 according to the
/// AUX1 clicks, splits the rest between OUT and AUX2, and thins each port
/// by its path loss and the detector efficiency. Pulse i uses substream i
/// of the seed, so results are independent of the thread count.
CoincidenceCounts run_pulses(const EmulationSettings& settings, std::uint64_t n_pulses,
                             std::uint64_t seed, int threads = 1);

struct TagTotals {
    std::uint64_t successful;
    std::uint64_t unsuccessful;
};

/// Classifies the 15 pair patterns: OUT paired with either AUX port is a
/// successful conversion; AUX1-AUX2 pairs (two photons subtracted) and all
/// same-port pairs are unsuccessful. Same-port pairs are counted twice
/// because two photons on one port trigger a pair event only half the time.
TagTotals tag(const CoincidenceCounts& counts);

/// Effective BS1 transmittance from singles rates:
/// (N0A+N0B+N2A+N2B) / (N0A+N0B+N1A+N1B+N2A+N2B).
double effective_transmittance(const CoincidenceCounts& counts);

struct SuccessEstimate {
    double p_exp;
    double std_error;
};

/// Ratio of successful to all coincidence counts under the tag weights,
/// with a weighted-binomial standard error.
SuccessEstimate effective_success(const CoincidenceCounts& counts);

/// Estimated fraction of two-click events that originated from pulses with
/// three or more photons. The three-plus-click tally is scaled by the
/// ratio of "exactly two distinct detectors" to "three or more distinct
/// detectors" outcomes for a Poisson(mu) source, with per-detector hit
/// probabilities taken from the singles shares. Merge-dominated estimate:
/// assumes the balanced, near-unit-efficiency regime the post-selected
/// emulation runs in.
double spurious_fraction(const CoincidenceCounts& counts, double mu);

}  // namespace fockconv::lab

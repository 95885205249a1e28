#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"

namespace fockconv {

/// Exact binomial coefficient C(n, k) for n <= 64 (fits in 64 bits).
std::uint64_t binomial_coefficient(int n, int k);

/// Binomial pmf C(n,k) p^k (1-p)^(n-k), evaluated stably for the small n
/// used throughout (n <= 64).
double binomial_pmf(int n, int k, double p);

/// Intensity transmittance T of a beam splitter. The amplitude quantities
/// t, r never appear; T = t^2 = 1 - r^2 is absorbed here.
class BeamSplitter {
public:
    explicit BeamSplitter(double transmittance);
    double transmittance() const noexcept { return t_; }

private:
    double t_;
};

/// Intensity transmittance eta of a loss channel. Detector efficiency is
/// modelled as loss in front of an ideal detector, so the same type serves
/// both purposes.
class LossChannel {
public:
    explicit LossChannel(double transmittance);
    double transmittance() const noexcept { return eta_; }

private:
    double eta_;
};

/// Probability distribution over photon numbers: a Fock-diagonal mixed
/// state. Every state in scope (Fock inputs, loss-degraded Fock states,
/// photon-counting conditionals) stays diagonal, so this is the only state
/// representation needed.
class PhotonNumberMixture {
public:
    static constexpr int kMaxSupportedPhotons = 64;
    static constexpr double kNormalizationTolerance = 1e-9;

    /// Vacuum.
    PhotonNumberMixture();

    /// The pure Fock state |n>.
    static PhotonNumberMixture fock(int n);

    /// probabilities[n] = weight of photon number n. Must be non-negative
    /// and sum to 1 within kNormalizationTolerance.
    explicit PhotonNumberMixture(std::vector<double> probabilities);

    double prob(int n) const noexcept;
    int max_photons() const noexcept { return static_cast<int>(probs_.size()) - 1; }
    double mean() const noexcept;
    const std::vector<double>& probabilities() const noexcept { return probs_; }

    /// JSON map {"n": prob}, zero entries skipped.
    nlohmann::json to_json() const;

private:
    friend class UnnormalizedMixture;
    friend PhotonNumberMixture apply_loss(const PhotonNumberMixture&, LossChannel);
    struct Unchecked {};
    PhotonNumberMixture(std::vector<double> probabilities, Unchecked);

    std::vector<double> probs_;
};

/// Weight accumulator used mid-computation; renormalizes once at the end
/// instead of after every update.
class UnnormalizedMixture {
public:
    UnnormalizedMixture() = default;

    void add(int n, double weight);
    double total_weight() const noexcept { return total_; }

    /// Normalized snapshot. Total weight must be positive.
    PhotonNumberMixture normalized() const;

private:
    std::vector<double> weights_;
    double total_ = 0.0;
};

struct SplitOutcome {
    int transmitted;
    int reflected;
    double probability;
};

/// Splitting statistics of the Fock state |m> at a beam splitter:
/// j photons are reflected with probability C(m,j) T^(m-j) (1-T)^j.
/// Returned in order of increasing reflected count.
std::vector<SplitOutcome> splitting_distribution(int m, BeamSplitter bs);

/// Binomial thinning: each photon independently survives with probability
/// eta. Output prob of n is sum_{m>=n} probs[m] C(m,n) eta^n (1-eta)^(m-n).
PhotonNumberMixture apply_loss(const PhotonNumberMixture& state, LossChannel channel);

/// Detector response models.
///  - IdealPnr: reports the exact photon number.
///  - InefficientPnr: loss channel eta followed by an ideal counter.
///  - ClickPair: two binary detectors behind a balanced splitter, each with
///    efficiency eta. n surviving photons give two clicks with probability
///    1 - 2^(1-n) and one click otherwise, so |2> is resolved only half the
///    time.
class DetectorModel {
public:
    enum class Kind { IdealPnr, InefficientPnr, ClickPair };

    static DetectorModel ideal_pnr();
    static DetectorModel inefficient_pnr(double eta);
    static DetectorModel click_pair(double eta);

    Kind kind() const noexcept { return kind_; }
    double efficiency() const noexcept { return eta_; }

    /// Largest outcome label possible when measuring `photons` photons.
    int max_outcome(int photons) const noexcept;

    /// pmf over outcome labels (counts, or clicks for ClickPair) when the
    /// measured mode holds exactly `photons` photons.
    std::vector<double> outcome_pmf(int photons) const;

private:
    DetectorModel(Kind kind, double eta) : kind_(kind), eta_(eta) {}

    Kind kind_;
    double eta_;
};

struct DetectionOutcome {
    int label;
    double probability;
    /// Conditional distribution of the photon number that was actually
    /// present in the measured mode (and is therefore removed from the
    /// beam), given this outcome.
    PhotonNumberMixture removed;
};

/// Full outcome statistics of measuring `state` with `det`. Outcomes with
/// zero probability are omitted; probabilities sum to 1.
std::vector<DetectionOutcome> detect(const PhotonNumberMixture& state, const DetectorModel& det);

}  // namespace fockconv

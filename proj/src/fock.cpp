#include "fockconv/fock.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fockconv {

namespace {

// Pascal triangle in exact integer arithmetic up to n = 64; C(64,32) still
// fits in 64 bits.
constexpr int kMaxBinomialN = PhotonNumberMixture::kMaxSupportedPhotons;

const std::uint64_t* pascal_row(int n) {
    static const auto table = [] {
        std::vector<std::uint64_t> rows((kMaxBinomialN + 1) * (kMaxBinomialN + 1), 0);
        for (int i = 0; i <= kMaxBinomialN; ++i) {
            rows[i * (kMaxBinomialN + 1)] = 1;
            for (int j = 1; j <= i; ++j) {
                const std::uint64_t up = rows[(i - 1) * (kMaxBinomialN + 1) + j];
                const std::uint64_t up_left = rows[(i - 1) * (kMaxBinomialN + 1) + j - 1];
                rows[i * (kMaxBinomialN + 1) + j] = up + up_left;
            }
        }
        return rows;
    }();
    return table.data() + n * (kMaxBinomialN + 1);
}

void check_probability(double value, const char* what) {
    if (!(value >= 0.0 && value <= 1.0)) {
        throw std::domain_error(std::string(what) + " must lie in [0, 1]");
    }
}

}  // namespace

std::uint64_t binomial_coefficient(int n, int k) {
    if (n < 0 || n > kMaxBinomialN) throw std::domain_error("binomial_coefficient: n out of range");
    if (k < 0 || k > n) return 0;
    return pascal_row(n)[k];
}

double binomial_pmf(int n, int k, double p) {
    if (k < 0 || k > n) return 0.0;
    return static_cast<double>(binomial_coefficient(n, k)) * std::pow(p, k) *
           std::pow(1.0 - p, n - k);
}

BeamSplitter::BeamSplitter(double transmittance) : t_(transmittance) {
    check_probability(t_, "beam splitter transmittance");
}

LossChannel::LossChannel(double transmittance) : eta_(transmittance) {
    check_probability(eta_, "loss channel transmittance");
}

PhotonNumberMixture::PhotonNumberMixture() : probs_{1.0} {}

PhotonNumberMixture::PhotonNumberMixture(std::vector<double> probabilities, Unchecked)
    : probs_(std::move(probabilities)) {
    if (probs_.empty()) probs_.push_back(1.0);
}

PhotonNumberMixture PhotonNumberMixture::fock(int n) {
    if (n < 0 || n > kMaxSupportedPhotons) throw std::domain_error("fock: photon number out of range");
    std::vector<double> probs(n + 1, 0.0);
    probs[n] = 1.0;
    return PhotonNumberMixture(std::move(probs), Unchecked{});
}

PhotonNumberMixture::PhotonNumberMixture(std::vector<double> probabilities)
    : probs_(std::move(probabilities)) {
    if (probs_.empty() || probs_.size() > kMaxSupportedPhotons + 1) {
        throw std::domain_error("mixture support must cover 0..64 photons");
    }
    double total = 0.0;
    for (double p : probs_) {
        if (!(p >= 0.0)) throw std::domain_error("mixture probabilities must be non-negative");
        total += p;
    }
    if (std::abs(total - 1.0) > kNormalizationTolerance) {
        throw std::domain_error("mixture probabilities must sum to 1");
    }
}

double PhotonNumberMixture::prob(int n) const noexcept {
    if (n < 0 || n >= static_cast<int>(probs_.size())) return 0.0;
    return probs_[n];
}

double PhotonNumberMixture::mean() const noexcept {
    double acc = 0.0;
    for (std::size_t n = 0; n < probs_.size(); ++n) acc += static_cast<double>(n) * probs_[n];
    return acc;
}

nlohmann::json PhotonNumberMixture::to_json() const {
    nlohmann::json out = nlohmann::json::object();
    for (std::size_t n = 0; n < probs_.size(); ++n) {
        if (probs_[n] > 0.0) out[std::to_string(n)] = probs_[n];
    }
    return out;
}

void UnnormalizedMixture::add(int n, double weight) {
    if (n < 0 || n > PhotonNumberMixture::kMaxSupportedPhotons) {
        throw std::domain_error("UnnormalizedMixture: photon number out of range");
    }
    if (weight == 0.0) return;
    if (n >= static_cast<int>(weights_.size())) weights_.resize(n + 1, 0.0);
    weights_[n] += weight;
    total_ += weight;
}

PhotonNumberMixture UnnormalizedMixture::normalized() const {
    if (!(total_ > 0.0)) throw std::domain_error("cannot normalize zero total weight");
    std::vector<double> probs(weights_);
    for (double& p : probs) p /= total_;
    return PhotonNumberMixture(std::move(probs), PhotonNumberMixture::Unchecked{});
}

std::vector<SplitOutcome> splitting_distribution(int m, BeamSplitter bs) {
    if (m < 0 || m > PhotonNumberMixture::kMaxSupportedPhotons) {
        throw std::domain_error("splitting_distribution: photon number out of range");
    }
    const double t = bs.transmittance();
    std::vector<SplitOutcome> outcomes;
    outcomes.reserve(m + 1);
    for (int j = 0; j <= m; ++j) {
        outcomes.push_back({m - j, j, binomial_pmf(m, j, 1.0 - t)});
    }
    return outcomes;
}

PhotonNumberMixture apply_loss(const PhotonNumberMixture& state, LossChannel channel) {
    const double eta = channel.transmittance();
    const auto& in = state.probabilities();
    std::vector<double> out(in.size(), 0.0);
    for (int m = 0; m < static_cast<int>(in.size()); ++m) {
        if (in[m] == 0.0) continue;
        for (int n = 0; n <= m; ++n) {
            out[n] += in[m] * binomial_pmf(m, n, eta);
        }
    }
    return PhotonNumberMixture(std::move(out), PhotonNumberMixture::Unchecked{});
}

DetectorModel DetectorModel::ideal_pnr() { return {Kind::IdealPnr, 1.0}; }

DetectorModel DetectorModel::inefficient_pnr(double eta) {
    check_probability(eta, "detector efficiency");
    return {Kind::InefficientPnr, eta};
}

DetectorModel DetectorModel::click_pair(double eta) {
    check_probability(eta, "detector efficiency");
    return {Kind::ClickPair, eta};
}

int DetectorModel::max_outcome(int photons) const noexcept {
    return kind_ == Kind::ClickPair ? std::min(photons, 2) : photons;
}

std::vector<double> DetectorModel::outcome_pmf(int photons) const {
    switch (kind_) {
        case Kind::IdealPnr: {
            std::vector<double> pmf(photons + 1, 0.0);
            pmf[photons] = 1.0;
            return pmf;
        }
        case Kind::InefficientPnr: {
            std::vector<double> pmf(photons + 1, 0.0);
            for (int d = 0; d <= photons; ++d) pmf[d] = binomial_pmf(photons, d, eta_);
            return pmf;
        }
        case Kind::ClickPair: {
            // Thin to d surviving photons, then each photon picks one of the
            // two detectors: d >= 1 photons give two clicks with probability
            // 1 - 2^(1-d).
            std::vector<double> pmf(std::min(photons, 2) + 1, 0.0);
            for (int d = 0; d <= photons; ++d) {
                const double p_d = binomial_pmf(photons, d, eta_);
                if (d == 0) {
                    pmf[0] += p_d;
                } else {
                    const double two = 1.0 - std::pow(2.0, 1 - d);
                    pmf[1] += p_d * (1.0 - two);
                    if (pmf.size() > 2) pmf[2] += p_d * two;
                }
            }
            return pmf;
        }
    }
    return {};
}

std::vector<DetectionOutcome> detect(const PhotonNumberMixture& state, const DetectorModel& det) {
    const auto& probs = state.probabilities();
    const int top = state.max_photons();
    const int n_labels = det.max_outcome(top) + 1;

    // Joint weights over (outcome label, photon number actually present).
    std::vector<double> label_prob(n_labels, 0.0);
    std::vector<UnnormalizedMixture> removed(n_labels);
    for (int a = 0; a <= top; ++a) {
        if (probs[a] == 0.0) continue;
        const auto pmf = det.outcome_pmf(a);
        for (int label = 0; label < static_cast<int>(pmf.size()); ++label) {
            const double w = probs[a] * pmf[label];
            if (w == 0.0) continue;
            label_prob[label] += w;
            removed[label].add(a, w);
        }
    }

    std::vector<DetectionOutcome> outcomes;
    for (int label = 0; label < n_labels; ++label) {
        if (label_prob[label] <= 0.0) continue;
        outcomes.push_back({label, label_prob[label], removed[label].normalized()});
    }
    return outcomes;
}

}  // namespace fockconv

#include "fockconv/coincidence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "fockconv/rng.hpp"

namespace fockconv::lab {

namespace {

void check_unit(double value, const char* what) {
    if (!(value >= 0.0 && value <= 1.0)) {
        throw std::domain_error(std::string(what) + " must lie in [0, 1]");
    }
}

void check_port_loss(double value, const char* what) {
    if (!(value > 0.0 && value <= 1.0)) {
        throw std::domain_error(std::string(what) + " must lie in (0, 1]");
    }
}

int port_of(int detector) { return detector / 2; }

double poisson_pmf(int n, double mu) {
    double pmf = std::exp(-mu);
    for (int i = 1; i <= n; ++i) pmf *= mu / static_cast<double>(i);
    return pmf;
}

}  // namespace

SourceModel SourceModel::coherent(double mu) {
    if (!(mu > 0.0)) throw std::domain_error("coherent source requires mu > 0");
    return {Kind::Coherent, mu};
}

std::string detector_name(int detector) {
    if (detector < 0 || detector >= kNumDetectors) throw std::domain_error("bad detector index");
    std::string name = "D";
    name += static_cast<char>('0' + port_of(detector));
    name += detector % 2 == 0 ? 'A' : 'B';
    return name;
}

int pair_index(int a, int b) {
    if (a == b || a < 0 || b < 0 || a >= kNumDetectors || b >= kNumDetectors) {
        throw std::domain_error("bad detector pair");
    }
    if (a > b) std::swap(a, b);
    return a * 5 - a * (a - 1) / 2 + (b - a - 1);
}

std::string pair_name(int index) {
    for (int a = 0; a < kNumDetectors; ++a) {
        for (int b = a + 1; b < kNumDetectors; ++b) {
            if (pair_index(a, b) == index) return detector_name(a) + "-" + detector_name(b);
        }
    }
    throw std::domain_error("bad pair index");
}

CoincidenceCounts& CoincidenceCounts::merge(const CoincidenceCounts& other) {
    for (int d = 0; d < kNumDetectors; ++d) singles[d] += other.singles[d];
    for (int p = 0; p < kNumPairs; ++p) pairs[p] += other.pairs[p];
    higher += other.higher;
    return *this;
}

std::uint64_t CoincidenceCounts::total_pairs() const {
    std::uint64_t total = 0;
    for (const auto count : pairs) total += count;
    return total;
}

nlohmann::json CoincidenceCounts::to_json() const {
    nlohmann::json singles_json = nlohmann::json::object();
    for (int d = 0; d < kNumDetectors; ++d) singles_json[detector_name(d)] = singles[d];
    nlohmann::json pairs_json = nlohmann::json::object();
    for (int p = 0; p < kNumPairs; ++p) pairs_json[pair_name(p)] = pairs[p];
    return nlohmann::json{{"singles", singles_json}, {"pairs", pairs_json}, {"higher", higher}};
}

namespace {

void run_one_pulse(const EmulationSettings& s, SubstreamRng& rng, CoincidenceCounts& counts) {
    const int n = s.source.kind == SourceModel::Kind::Fock2 ? 2 : rng.poisson(s.source.mu);
    if (n == 0) return;

    // BS1 taps toward AUX1; the rest continues to the switchable BS2.
    const int to_aux1 = rng.binomial(n, 1.0 - s.t1);
    const int rest = n - to_aux1;

    const int aux1_hits = rng.binomial(to_aux1, s.losses.aux1 * s.det_eta);
    const int aux1_a = rng.binomial(aux1_hits, 0.5);
    const int aux1_b = aux1_hits - aux1_a;

    const double bs2 = (s.feedforward && aux1_hits > 0) ? 1.0 : s.t2;
    const int to_aux2 = rng.binomial(rest, 1.0 - bs2);
    const int to_out = rest - to_aux2;

    const int aux2_hits = rng.binomial(to_aux2, s.losses.aux2 * s.det_eta);
    const int aux2_a = rng.binomial(aux2_hits, 0.5);
    const int aux2_b = aux2_hits - aux2_a;

    const int out_hits = rng.binomial(to_out, s.losses.out * s.det_eta);
    const int out_a = rng.binomial(out_hits, 0.5);
    const int out_b = out_hits - out_a;

    // Detector order: D0A D0B (AUX2), D1A D1B (AUX1), D2A D2B (OUT).
    const bool clicked[kNumDetectors] = {aux2_a > 0, aux2_b > 0, aux1_a > 0,
                                         aux1_b > 0, out_a > 0,  out_b > 0};

    int first = -1, second = -1, n_clicks = 0;
    for (int d = 0; d < kNumDetectors; ++d) {
        if (!clicked[d]) continue;
        ++counts.singles[d];
        if (n_clicks == 0) first = d;
        if (n_clicks == 1) second = d;
        ++n_clicks;
    }
    if (n_clicks == 2) {
        ++counts.pairs[pair_index(first, second)];
    } else if (n_clicks >= 3) {
        ++counts.higher;
    }
}

}  // namespace

CoincidenceCounts run_pulses(const EmulationSettings& settings, std::uint64_t n_pulses,
                             std::uint64_t seed, int threads) {
    if (n_pulses == 0) throw std::domain_error("run_pulses requires at least one pulse");
    check_unit(settings.t1, "BS1 transmittance");
    check_unit(settings.t2, "BS2 transmittance");
    check_unit(settings.det_eta, "detector efficiency");
    check_port_loss(settings.losses.aux1, "AUX1 transmittance");
    check_port_loss(settings.losses.aux2, "AUX2 transmittance");
    check_port_loss(settings.losses.out, "OUT transmittance");

    const int n_workers =
        std::clamp<int>(threads, 1, std::max(1u, std::thread::hardware_concurrency()));
    std::vector<CoincidenceCounts> partials(n_workers);

    const auto worker = [&](int index) {
        CoincidenceCounts& local = partials[index];
        const std::uint64_t begin = n_pulses * index / n_workers;
        const std::uint64_t end = n_pulses * (index + 1) / n_workers;
        for (std::uint64_t pulse = begin; pulse < end; ++pulse) {
            SubstreamRng rng(seed, pulse);
            run_one_pulse(settings, rng, local);
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

    CoincidenceCounts counts;
    for (const CoincidenceCounts& partial : partials) counts.merge(partial);
    return counts;
}

TagTotals tag(const CoincidenceCounts& counts) {
    TagTotals totals{0, 0};
    for (int a = 0; a < kNumDetectors; ++a) {
        for (int b = a + 1; b < kNumDetectors; ++b) {
            const std::uint64_t count = counts.pairs[pair_index(a, b)];
            if (count == 0) continue;
            const int port_a = port_of(a);
            const int port_b = port_of(b);
            if (port_a == port_b) {
                // Two photons on one port make a pair event only half the
                // time, so these are counted with double rate.
                totals.unsuccessful += 2 * count;
            } else if (port_a == kPortOut || port_b == kPortOut) {
                totals.successful += count;
            } else {
                // AUX1 with AUX2: both photons were subtracted.
                totals.unsuccessful += count;
            }
        }
    }
    return totals;
}

double effective_transmittance(const CoincidenceCounts& counts) {
    const double aux1 = static_cast<double>(counts.singles[2 * kPortAux1] +
                                            counts.singles[2 * kPortAux1 + 1]);
    const double passed = static_cast<double>(counts.singles[2 * kPortAux2] +
                                              counts.singles[2 * kPortAux2 + 1] +
                                              counts.singles[2 * kPortOut] +
                                              counts.singles[2 * kPortOut + 1]);
    const double total = aux1 + passed;
    if (total <= 0.0) throw std::domain_error("effective_transmittance: no singles recorded");
    return passed / total;
}

SuccessEstimate effective_success(const CoincidenceCounts& counts) {
    const TagTotals totals = tag(counts);
    const double weighted = static_cast<double>(totals.successful + totals.unsuccessful);
    if (weighted <= 0.0) throw std::domain_error("effective_success: no coincidences recorded");
    const double p = static_cast<double>(totals.successful) / weighted;
    return {p, std::sqrt(p * (1.0 - p) / weighted)};
}

double spurious_fraction(const CoincidenceCounts& counts, double mu) {
    if (mu < 0.0) throw std::domain_error("spurious_fraction requires mu >= 0");
    const std::uint64_t two_click_events = counts.total_pairs();
    if (counts.higher == 0 || two_click_events == 0 || mu == 0.0) return 0.0;

    double total_singles = 0.0;
    for (const auto count : counts.singles) total_singles += static_cast<double>(count);
    if (total_singles <= 0.0) return 0.0;

    std::array<double, kNumDetectors> share{};
    for (int d = 0; d < kNumDetectors; ++d) {
        share[d] = static_cast<double>(counts.singles[d]) / total_singles;
    }

    // For an n-photon pulse with photons landing independently by the
    // singles shares: probability of hitting exactly two distinct detectors
    // versus three or more. Photon numbers above 3 carry Poisson weights.
    constexpr int kMaxPhotonsConsidered = 9;
    double weight_two = 0.0;
    double weight_three_plus = 0.0;
    for (int n = 3; n <= kMaxPhotonsConsidered; ++n) {
        const double w = poisson_pmf(n, mu);
        double at_most_one = 0.0;
        for (int d = 0; d < kNumDetectors; ++d) at_most_one += std::pow(share[d], n);
        double exactly_two = 0.0;
        for (int a = 0; a < kNumDetectors; ++a) {
            for (int b = a + 1; b < kNumDetectors; ++b) {
                exactly_two += std::pow(share[a] + share[b], n) - std::pow(share[a], n) -
                               std::pow(share[b], n);
            }
        }
        weight_two += w * exactly_two;
        weight_three_plus += w * (1.0 - at_most_one - exactly_two);
    }
    if (weight_three_plus <= 0.0) return 0.0;

    const double spurious_two_clicks =
        static_cast<double>(counts.higher) * (weight_two / weight_three_plus);
    return std::min(1.0, spurious_two_clicks / static_cast<double>(two_click_events));
}

}  // namespace fockconv::lab

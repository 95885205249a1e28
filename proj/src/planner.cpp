#include "fockconv/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace fockconv {

namespace {

constexpr int kRootScanIntervals = 256;
constexpr double kRootTolerance = 1e-12;
constexpr double kTieTolerance = 1e-12;
// Resource guard for table construction.
constexpr int kMaxTableWork = 4096;

double horner(std::span<const double> coeffs, double x) {
    double acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
    return acc;
}

// Coefficients of P(t1) = sum_j prior[j] C(m,j) t1^(m-j) (1-t1)^j.
std::vector<double> objective_coefficients(int m, std::span<const double> prior) {
    std::vector<double> coeffs(m + 1, 0.0);
    for (int j = 0; j < static_cast<int>(prior.size()); ++j) {
        if (prior[j] == 0.0) continue;
        const double scale = prior[j] * static_cast<double>(binomial_coefficient(m, j));
        for (int i = 0; i <= j; ++i) {
            const double sign = (i % 2 == 0) ? 1.0 : -1.0;
            coeffs[m - j + i] += scale * sign * static_cast<double>(binomial_coefficient(j, i));
        }
    }
    return coeffs;
}

// Real roots of the polynomial in [0, 1], located by sign-change bisection.
std::vector<double> roots_in_unit_interval(std::span<const double> coeffs) {
    std::vector<double> roots;
    double prev_x = 0.0;
    double prev_v = horner(coeffs, prev_x);
    for (int i = 1; i <= kRootScanIntervals; ++i) {
        const double x = static_cast<double>(i) / kRootScanIntervals;
        const double v = horner(coeffs, x);
        if (prev_v == 0.0) {
            roots.push_back(prev_x);
        } else if (v != 0.0 && std::signbit(prev_v) != std::signbit(v)) {
            double lo = prev_x, hi = x, vlo = prev_v;
            while (hi - lo > kRootTolerance) {
                const double mid = 0.5 * (lo + hi);
                const double vmid = horner(coeffs, mid);
                if (vmid == 0.0) {
                    lo = hi = mid;
                    break;
                }
                if (std::signbit(vmid) == std::signbit(vlo)) {
                    lo = mid;
                    vlo = vmid;
                } else {
                    hi = mid;
                }
            }
            roots.push_back(0.5 * (lo + hi));
        }
        prev_x = x;
        prev_v = v;
    }
    if (prev_v == 0.0) roots.push_back(prev_x);
    return roots;
}

void validate_stage_inputs(int m, int n, std::span<const double> prior) {
    if (n < 0 || m <= n) throw std::domain_error("stage optimization requires m > n >= 0");
    if (m > PhotonNumberMixture::kMaxSupportedPhotons) {
        throw std::domain_error("photon number exceeds supported maximum");
    }
    if (static_cast<int>(prior.size()) != m - n + 1) {
        throw std::domain_error("prior must hold one value per subtracted count 0..m-n");
    }
    for (double p : prior) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("prior values must lie in [0, 1]");
    }
}

const char* status_string(Policy::Status status) {
    switch (status) {
        case Policy::Status::Active: return "active";
        case Policy::Status::Done: return "done";
        case Policy::Status::Failed: return "failed";
    }
    return "active";
}

Policy::Status status_from_string(const std::string& text) {
    if (text == "done") return Policy::Status::Done;
    if (text == "failed") return Policy::Status::Failed;
    if (text == "active") return Policy::Status::Active;
    throw std::domain_error("unknown policy status: " + text);
}

}  // namespace

double stage_objective(int m, int n, std::span<const double> prior, double t1) {
    validate_stage_inputs(m, n, prior);
    const double reflectance = 1.0 - BeamSplitter(t1).transmittance();
    double acc = 0.0;
    for (int j = 0; j <= m - n; ++j) {
        acc += prior[j] * binomial_pmf(m, j, reflectance);
    }
    return acc;
}

StageOptimum optimal_first_stage(int m, int n, std::span<const double> prior) {
    validate_stage_inputs(m, n, prior);

    const auto coeffs = objective_coefficients(m, prior);
    std::vector<double> derivative(m, 0.0);
    for (int d = 0; d < m; ++d) derivative[d] = coeffs[d + 1] * static_cast<double>(d + 1);

    // The derivative carries an analytic t1^(n-1) factor; dividing it out
    // leaves a polynomial of degree m-n whose unit-interval roots are the
    // interior candidates.
    const int drop = std::max(n - 1, 0);
    std::span<const double> reduced(derivative.data() + drop, derivative.size() - drop);

    std::vector<double> candidates = roots_in_unit_interval(reduced);
    candidates.push_back(0.0);
    candidates.push_back(1.0);

    StageOptimum best{1.0, -1.0};
    for (double t : candidates) {
        const double p = stage_objective(m, n, prior, t);
        if (p > best.probability + kTieTolerance ||
            (p >= best.probability - kTieTolerance && t > best.transmittance)) {
            best = {t, p};
        }
    }
    return best;
}

PmaxTable::PmaxTable(int m, int n, int k_max) : m_(m), n_(n), k_max_(k_max) {
    if (n < 0 || m < n) throw std::domain_error("pmax table requires m >= n >= 0");
    if (m > PhotonNumberMixture::kMaxSupportedPhotons) {
        throw std::domain_error("photon number exceeds supported maximum");
    }
    if (k_max < 1) throw std::domain_error("pmax table requires at least one step");
    if ((m - n) * k_max > kMaxTableWork) {
        throw std::length_error("pmax table size exceeds the configured bound");
    }
    entries_.assign(static_cast<std::size_t>(m - n + 1) * (k_max + 1), Entry{0.0, 1.0});

    // Nothing to subtract: P_max(n, k) = 1 for every k.
    for (int k = 0; k <= k_max; ++k) at(n, k) = {1.0, 1.0};
    // Zero steps cannot subtract: P_max(m', 0) = 0 for m' > n (already the
    // default entry). Fill surplus-by-surplus, steps innermost; every entry
    // only consults the k-1 column of equal or smaller surplus.
    for (int surplus = 1; surplus <= m - n; ++surplus) {
        const int photons = n + surplus;
        for (int k = 1; k <= k_max; ++k) {
            std::vector<double> prior(surplus + 1);
            for (int j = 0; j <= surplus; ++j) prior[j] = at(photons - j, k - 1).pmax;
            const StageOptimum opt = optimal_first_stage(photons, n, prior);
            at(photons, k) = {opt.probability, opt.transmittance};
        }
    }
}

PmaxTable::Entry& PmaxTable::at(int m, int k) { return entries_[(m - n_) * (k_max_ + 1) + k]; }

const PmaxTable::Entry& PmaxTable::at(int m, int k) const {
    return entries_[(m - n_) * (k_max_ + 1) + k];
}

double PmaxTable::pmax(int m, int k) const {
    if (m < n_ || m > m_ || k < 0 || k > k_max_) throw std::domain_error("pmax: index out of range");
    return at(m, k).pmax;
}

double PmaxTable::optimal_t1(int m, int k) const {
    if (m < n_ || m > m_ || k < 0 || k > k_max_) {
        throw std::domain_error("optimal_t1: index out of range");
    }
    return at(m, k).t1;
}

std::string PmaxTable::to_csv() const {
    std::string out = "m,n,k,T1_opt,P_max\n";
    char line[128];
    for (int m = n_ + 1; m <= m_; ++m) {
        for (int k = 1; k <= k_max_; ++k) {
            std::snprintf(line, sizeof(line), "%d,%d,%d,%.6g,%.6g\n", m, n_, k, at(m, k).t1,
                          at(m, k).pmax);
            out += line;
        }
    }
    return out;
}

PmaxTable pmax_table(int m, int n, int k_max) { return PmaxTable(m, n, k_max); }

namespace {

Policy build_node(const PmaxTable& table, int photons, int stages_left) {
    Policy node;
    node.depth = stages_left;
    node.target = table.target();
    if (photons == table.target()) {
        node.status = Policy::Status::Done;
        node.transmittance = 1.0;
        return node;
    }
    node.status = Policy::Status::Active;
    node.transmittance = table.optimal_t1(photons, stages_left);
    if (stages_left >= 2) {
        for (int j = 0; j <= photons - table.target(); ++j) {
            node.children.emplace(j, build_node(table, photons - j, stages_left - 1));
        }
    }
    return node;
}

}  // namespace

Policy build_policy(const PmaxTable& table) {
    return build_node(table, table.input_photons(), table.max_steps());
}

Policy build_policy(int m, int n, int k) {
    if (m == n) {
        Policy node;
        node.status = Policy::Status::Done;
        node.transmittance = 1.0;
        node.depth = k;
        node.target = n;
        return node;
    }
    return build_policy(pmax_table(m, n, k));
}

nlohmann::json Policy::to_json() const {
    nlohmann::json node;
    node["T"] = transmittance;
    node["status"] = status_string(status);
    if (!children.empty()) {
        nlohmann::json kids = nlohmann::json::object();
        for (const auto& [outcome, child] : children) {
            kids[std::to_string(outcome)] = child.to_json();
        }
        node["children"] = std::move(kids);
    }
    return node;
}

Policy Policy::from_json(const nlohmann::json& node, int depth, int target) {
    Policy policy;
    policy.depth = depth;
    policy.target = target;
    policy.transmittance = BeamSplitter(node.at("T").get<double>()).transmittance();
    policy.status = node.contains("status") ? status_from_string(node.at("status").get<std::string>())
                                            : Policy::Status::Active;
    if (node.contains("children")) {
        for (const auto& [key, value] : node.at("children").items()) {
            policy.children.emplace(std::stoi(key), Policy::from_json(value, depth - 1, target));
        }
    }
    return policy;
}

namespace {

struct EvalAccumulator {
    double success = 0.0;
    double total = 0.0;
    UnnormalizedMixture output;
};

// state is the unnormalized photon-number distribution of this branch; its
// sum is the branch probability.
void evaluate_branch(const Policy* node, std::vector<double> state, int stage, int total_stages,
                     int detected, int needed, const DetectorModel& det, double eta_o,
                     EvalAccumulator& acc) {
    double branch_prob = 0.0;
    for (double w : state) branch_prob += w;
    if (branch_prob <= 0.0) return;

    if (stage > total_stages) {
        acc.total += branch_prob;
        if (detected == needed) {
            acc.success += branch_prob;
            for (int c = 0; c < static_cast<int>(state.size()); ++c) acc.output.add(c, state[c]);
        }
        return;
    }

    // An explicitly failed branch is discarded by the experimenter.
    if (node != nullptr && node->status == Policy::Status::Failed) {
        acc.total += branch_prob;
        return;
    }

    if (stage >= 2 && eta_o < 1.0) {
        std::vector<double> thinned(state.size(), 0.0);
        for (int c = 0; c < static_cast<int>(state.size()); ++c) {
            if (state[c] == 0.0) continue;
            for (int s = 0; s <= c; ++s) thinned[s] += state[c] * binomial_pmf(c, s, eta_o);
        }
        state = std::move(thinned);
    }

    const double t = node != nullptr ? node->transmittance : 1.0;
    int top = static_cast<int>(state.size()) - 1;
    while (top > 0 && state[top] == 0.0) --top;

    const int n_labels = det.max_outcome(top) + 1;
    std::vector<std::vector<double>> next(n_labels, std::vector<double>(top + 1, 0.0));
    std::vector<std::vector<double>> det_pmf(top + 1);
    for (int j = 0; j <= top; ++j) det_pmf[j] = det.outcome_pmf(j);

    for (int c = 0; c <= top; ++c) {
        if (state[c] == 0.0) continue;
        for (int j = 0; j <= c; ++j) {
            const double split_w = state[c] * binomial_pmf(c, j, 1.0 - t);
            if (split_w == 0.0) continue;
            const auto& pmf = det_pmf[j];
            for (int label = 0; label < static_cast<int>(pmf.size()); ++label) {
                if (pmf[label] != 0.0) next[label][c - j] += split_w * pmf[label];
            }
        }
    }

    for (int label = 0; label < n_labels; ++label) {
        const Policy* child = nullptr;
        if (node != nullptr) {
            const auto it = node->children.find(label);
            if (it != node->children.end()) child = &it->second;
        }
        evaluate_branch(child, std::move(next[label]), stage + 1, total_stages, detected + label,
                        needed, det, eta_o, acc);
    }
}

}  // namespace

PolicyEvaluation evaluate_policy(const Policy& policy, int m, const DetectorModel& det,
                                 double eta_o) {
    if (m < 0 || m > PhotonNumberMixture::kMaxSupportedPhotons) {
        throw std::domain_error("evaluate_policy: photon number out of range");
    }
    LossChannel channel(eta_o);

    EvalAccumulator acc;
    std::vector<double> state(m + 1, 0.0);
    state[m] = 1.0;
    evaluate_branch(&policy, std::move(state), 1, policy.depth, 0, m - policy.target, det,
                    channel.transmittance(), acc);

    PolicyEvaluation result;
    result.success_probability = acc.success;
    result.branch_probability_total = acc.total;
    result.output = acc.success > 0.0 ? acc.output.normalized() : PhotonNumberMixture();
    return result;
}

}  // namespace fockconv

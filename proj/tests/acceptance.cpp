// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// criterion fails. Criteria 6 and 7 are sized for a desktop-class run
// (about half a minute total with the default thread count).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include "fockconv/coincidence.hpp"
#include "fockconv/montecarlo.hpp"
#include "fockconv/planner.hpp"
#include "fockconv/rng.hpp"
#include "fockconv/tradeoff.hpp"
#include "oracles.hpp"

using namespace fockconv;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& what) {
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, what.c_str());
    if (!pass) ++g_failures;
}

int worker_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// 1. The lossless dynamic program reproduces the two-to-one optima exactly.
void criterion_1() {
    const auto table = pmax_table(2, 1, 2);
    const bool pass = close(table.pmax(2, 1), 0.5, 1e-9) &&
                      close(table.optimal_t1(2, 1), 0.5, 1e-9) &&
                      close(table.pmax(2, 2), 2.0 / 3.0, 1e-9) &&
                      close(table.optimal_t1(2, 2), 2.0 / 3.0, 1e-9);
    report(1, pass, "lossless two-to-one optima: P(1)=1/2 at T=1/2, P(2)=2/3 at T1=2/3");
}

// 2. Step-count curves: monotone, approaching one, and k/(k+1) for (2,1).
void criterion_2() {
    bool pass = true;
    const std::pair<int, int> combos[] = {{2, 1}, {3, 1}, {3, 2}, {4, 2}, {4, 3}, {5, 4}};
    for (const auto& [m, n] : combos) {
        const auto table = pmax_table(m, n, 9);
        for (int k = 1; k <= 9; ++k) {
            pass = pass && table.pmax(m, k) >= table.pmax(m, k - 1) - 1e-12;
        }
        pass = pass && table.pmax(m, 9) > table.pmax(m, 1);
    }
    const auto two_one = pmax_table(2, 1, 9);
    pass = pass && two_one.pmax(2, 9) >= 0.9 - 1e-9;
    for (int k = 1; k <= 9; ++k) {
        pass = pass && close(two_one.pmax(2, k), static_cast<double>(k) / (k + 1), 1e-9);
    }
    report(2, pass, "P_max curves non-decreasing toward 1 over 6 (m,n) pairs; (2,1|k) = k/(k+1)");
}

// 3. Inefficient detection on the optimal two-to-one schemes.
void criterion_3() {
    bool pass = true;
    const auto one_step = build_policy(2, 1, 1);
    const auto two_step = build_policy(2, 1, 2);
    for (const double eta : {0.6, 0.85, 1.0}) {
        const auto det = DetectorModel::inefficient_pnr(eta);
        const auto one = evaluate_policy(one_step, 2, det);
        const auto two = evaluate_policy(two_step, 2, det);
        pass = pass && close(one.success_probability, 0.5 * eta * (2.0 - eta), 1e-9);
        pass = pass && close(two.success_probability, 2.0 / 3.0 * eta * (2.0 - eta), 1e-9);
        pass = pass && close(one.output.prob(1), 1.0 / (2.0 - eta), 1e-9);
        pass = pass && close(two.output.prob(1), 1.0 / (2.0 - eta), 1e-9);
    }
    report(3, pass,
           "inefficient detection: P = (1/2)eta(2-eta) and (2/3)eta(2-eta), p1 = 1/(2-eta)");
}

// 4. Elementary-block trade-off at the half-rate operating point.
void criterion_4() {
    bool pass = true;
    for (const double eta : {0.6, 0.85}) {
        const auto point = elementary_point(1.0 - 1.0 / (2.0 * eta), eta);
        pass = pass && close(point.probability, 0.5, 1e-12);
        pass = pass && close(point.single_photon_fraction, 2.0 - 1.0 / eta, 1e-12);
    }
    report(4, pass, "elementary block at T = 1 - 1/(2 eta): P = 1/2 and p1 = 2 - 1/eta");
}

// 5. Constrained optimization recovers the closed-form lossy optimum and
//    respects the feasibility gate.
void criterion_5() {
    const double eta = 0.85, eta_o = 0.95;
    const auto opt = optimize_feedforward(eta, eta_o, 2.0 / 3.0);
    bool pass = opt.feasible &&
                close(opt.t1, (3.0 * eta - 1.0) / (3.0 * eta), 1e-6) &&
                close(opt.t2, 1.0 - 1.0 / (eta_o * (3.0 * eta - 1.0)), 1e-6) &&
                close(opt.p1, 2.0 * eta_o - (1.0 + 2.0 * eta_o) / (3.0 * eta), 1e-6);

    // eta_o (3 eta - 1) = 0.72 < 1: the 2/3 target must be reported
    // infeasible together with the achievable maximum.
    const auto gated = optimize_feedforward(0.6, 0.9, 2.0 / 3.0);
    pass = pass && !gated.feasible && gated.achievable_max < 2.0 / 3.0 &&
           gated.achievable_max > 0.0;
    report(5, pass, "lossy optimum matches closed forms; infeasible targets are gated");
}

// 6. Monte Carlo estimates agree with exhaustive enumeration across a
//    13-configuration matrix at a million trials each.
void criterion_6() {
    struct Config {
        int m, n, k;
        DetectorModel det;
        double eta_o;
        std::uint64_t seed;
    };
    const std::vector<Config> configs = {
        {2, 1, 1, DetectorModel::ideal_pnr(), 1.0, 901},
        {2, 1, 1, DetectorModel::inefficient_pnr(0.6), 1.0, 902},
        {2, 1, 1, DetectorModel::click_pair(1.0), 1.0, 903},
        {2, 1, 2, DetectorModel::ideal_pnr(), 1.0, 904},
        {2, 1, 2, DetectorModel::inefficient_pnr(0.6), 1.0, 905},
        {2, 1, 2, DetectorModel::ideal_pnr(), 0.9, 906},
        {2, 1, 2, DetectorModel::click_pair(0.8), 0.9, 907},
        {3, 1, 2, DetectorModel::inefficient_pnr(0.85), 0.9, 908},
        {3, 2, 2, DetectorModel::ideal_pnr(), 1.0, 909},
        {3, 2, 2, DetectorModel::inefficient_pnr(0.7), 0.8, 910},
        {4, 2, 2, DetectorModel::ideal_pnr(), 0.95, 911},
        {5, 3, 3, DetectorModel::inefficient_pnr(0.85), 1.0, 912},
        {5, 3, 3, DetectorModel::click_pair(0.9), 0.85, 913},
    };

    const auto start = std::chrono::steady_clock::now();
    bool pass = true;
    for (const auto& config : configs) {
        const auto policy = build_policy(config.m, config.n, config.k);
        const auto analytic = evaluate_policy(policy, config.m, config.det, config.eta_o);
        const auto mc = mc::estimate_success(policy, config.m, config.det, config.eta_o,
                                             1'000'000, config.seed, worker_threads());
        const double se = std::max(mc.estimate.std_error, 1e-12);
        pass = pass && std::abs(mc.estimate.value - analytic.success_probability) <= 4.0 * se;
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    pass = pass && seconds < 60.0;
    char line[160];
    std::snprintf(line, sizeof(line),
                  "Monte Carlo vs enumeration over 13 configurations at 1e6 trials (%.1f s)",
                  seconds);
    report(6, pass, line);
}

// 7. Desk-scale reproduction of the coincidence experiment.
void criterion_7() {
    const auto start = std::chrono::steady_clock::now();
    lab::EmulationSettings settings;  // coherent mu = 0.05, feedforward on
    settings.t1 = 0.663;
    settings.t2 = 0.5;
    const auto counts = lab::run_pulses(settings, 10'000'000, 714, worker_threads());
    const double t_eff = lab::effective_transmittance(counts);
    const auto success = lab::effective_success(counts);
    bool pass = close(t_eff, 0.663, 0.005);
    pass = pass && success.p_exp + 4.0 * success.std_error >= 0.660 &&
           success.p_exp - 4.0 * success.std_error <= 0.667;

    // Feedforward disabled with a transparent second splitter: the success
    // ratio follows the single-block bound 2T(1-T) at the measured
    // splitting ratio.
    lab::EmulationSettings single = settings;
    single.feedforward = false;
    single.t2 = 1.0;
    for (const double t1 : {0.15, 0.35, 0.55, 0.75, 0.95}) {
        single.t1 = t1;
        const auto sweep = lab::run_pulses(single, 2'000'000, 715, worker_threads());
        const double sweep_t = lab::effective_transmittance(sweep);
        const auto sweep_p = lab::effective_success(sweep);
        pass = pass && std::abs(sweep_p.p_exp - 2.0 * sweep_t * (1.0 - sweep_t)) <=
                           4.0 * sweep_p.std_error;
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    pass = pass && seconds < 300.0;
    char line[200];
    std::snprintf(line, sizeof(line),
                  "emulated P_exp = %.4f +- %.4f at T_eff = %.4f; k=1 sweep on 2T(1-T) (%.1f s)",
                  success.p_exp, success.std_error, t_eff, seconds);
    report(7, pass, line);
}

// 8. Spurious two-coincidence estimate at the default attenuation.
void criterion_8() {
    lab::EmulationSettings settings;
    settings.t1 = 0.663;
    const auto counts = lab::run_pulses(settings, 4'000'000, 808, worker_threads());
    const double fraction = lab::spurious_fraction(counts, settings.source.mu);
    const bool pass = fraction >= 0.002 && fraction <= 0.03;
    char line[120];
    std::snprintf(line, sizeof(line), "spurious fraction %.4f within [0.002, 0.03]", fraction);
    report(8, pass, line);
}

// 9. Property suites: normalization, loss algebra, detector commutation,
//    DP-vs-grid equivalence and sub-stream determinism.
void criterion_9() {
    bool pass = true;

    for (int m = 0; m <= 10 && pass; ++m) {
        for (int i = 0; i <= 40; ++i) {
            double total = 0.0;
            for (const auto& outcome : splitting_distribution(m, BeamSplitter(i / 40.0))) {
                total += outcome.probability;
            }
            pass = pass && close(total, 1.0, 1e-12);
        }
    }

    SubstreamRng gen(4242, 0);
    for (int trial = 0; trial < 40 && pass; ++trial) {
        std::vector<double> weights(9);
        double total = 0.0;
        for (double& w : weights) total += (w = gen.uniform());
        for (double& w : weights) w /= total;
        const PhotonNumberMixture state(weights);
        const double a = gen.uniform(), b = gen.uniform();
        const auto twice = apply_loss(apply_loss(state, LossChannel(a)), LossChannel(b));
        const auto once = apply_loss(state, LossChannel(a * b));
        for (int photon = 0; photon <= 8; ++photon) {
            pass = pass && close(twice.prob(photon), once.prob(photon), 1e-12);
        }
        const double eta = gen.uniform();
        const auto direct = detect(state, DetectorModel::inefficient_pnr(eta));
        const auto staged = detect(apply_loss(state, LossChannel(eta)), DetectorModel::ideal_pnr());
        for (const auto& outcome : staged) {
            double matched = 0.0;
            for (const auto& other : direct) {
                if (other.label == outcome.label) matched = other.probability;
            }
            pass = pass && close(matched, outcome.probability, 1e-12);
        }
    }

    for (int m = 2; m <= 5 && pass; ++m) {
        for (int n = 0; n < m; ++n) {
            for (int k = 1; k <= 3; ++k) {
                const auto table = pmax_table(m, n, k);
                const auto dp = oracle::grid_dp(m, n, k);
                pass = pass && close(table.pmax(m, k), dp.v(m, k), 1e-6);
                const auto replay =
                    evaluate_policy(oracle::policy_from_grid(dp), m, DetectorModel::ideal_pnr());
                pass = pass && close(replay.success_probability, table.pmax(m, k), 1e-6);
            }
        }
    }

    const auto policy = build_policy(3, 1, 2);
    const auto det = DetectorModel::click_pair(0.8);
    const auto run_a = mc::estimate_success(policy, 3, det, 0.9, 100'000, 99, 1);
    const auto run_b = mc::estimate_success(policy, 3, det, 0.9, 100'000, 99, 4);
    pass = pass && run_a.successes == run_b.successes &&
           run_a.output_counts == run_b.output_counts;

    report(9, pass,
           "normalization, loss composition, detector commutation, DP-vs-grid, determinism");
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    if (g_failures == 0) {
        std::printf("acceptance: all 9 criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d criteria FAILED\n", g_failures);
    return 1;
}

#include "fockconv/tradeoff.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace fockconv {

namespace {

constexpr double kConstraintTolerance = 1e-6;
constexpr double kOuterGridStep = 1e-3;

void check_unit(double value, const char* what) {
    if (!(value >= 0.0 && value <= 1.0)) {
        throw std::domain_error(std::string(what) + " must lie in [0, 1]");
    }
}

double golden_max(const auto& f, double lo, double hi, double tol) {
    constexpr double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    double best = 0.5 * (a + b);
    // The maximum may sit on an endpoint of the original interval.
    if (f(lo) > f(best)) best = lo;
    if (f(hi) > f(best)) best = hi;
    return best;
}

// Root of f(x) = target on [lo, hi] where f is monotone; the endpoint values
// must bracket the target.
double bisect_level(const auto& f, double lo, double hi, double target) {
    double flo = f(lo) - target;
    while (hi - lo > 1e-14) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = f(mid) - target;
        if (fmid == 0.0) return mid;
        if (std::signbit(fmid) == std::signbit(flo)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

struct RidgePoint {
    bool found = false;
    double t2 = 0.0;
    double p1 = -1.0;
};

// Best single-photon fraction among the t2 values satisfying
// P(t1, t2) = target. P is concave in t2, so the level set has at most one
// solution on each flank of the peak.
RidgePoint best_t2_on_level(double t1, double eta, double eta_o, double target) {
    const auto p_of_t2 = [&](double t2) { return feedforward_point(t1, t2, eta, eta_o).probability; };
    const double t2_peak = golden_max(p_of_t2, 0.0, 1.0, 1e-12);
    const double p_peak = p_of_t2(t2_peak);
    if (p_peak < target) return {};

    RidgePoint best;
    const auto consider = [&](double t2) {
        const TradeoffPoint point = feedforward_point(t1, t2, eta, eta_o);
        if (std::abs(point.probability - target) > kConstraintTolerance) return;
        if (point.single_photon_fraction > best.p1) {
            best = {true, t2, point.single_photon_fraction};
        }
    };
    if (p_of_t2(0.0) <= target) consider(bisect_level(p_of_t2, 0.0, t2_peak, target));
    if (p_of_t2(1.0) <= target) consider(bisect_level(p_of_t2, t2_peak, 1.0, target));
    // Tangent configurations: the peak itself may sit on the level within
    // tolerance even when neither flank crosses it.
    consider(t2_peak);
    return best;
}

struct SquareMax {
    double p;
    double t1;
    double t2;
};

SquareMax feedforward_max(double eta, double eta_o) {
    const auto peak_for_t1 = [&](double t1) {
        const auto p_of_t2 = [&](double t2) {
            return feedforward_point(t1, t2, eta, eta_o).probability;
        };
        const double t2 = golden_max(p_of_t2, 0.0, 1.0, 1e-12);
        return std::pair<double, double>(p_of_t2(t2), t2);
    };

    double best_t1 = 0.0;
    double best_p = -1.0;
    const int steps = static_cast<int>(std::lround(1.0 / kOuterGridStep));
    for (int i = 0; i <= steps; ++i) {
        const double t1 = static_cast<double>(i) / steps;
        const double p = peak_for_t1(t1).first;
        if (p > best_p) {
            best_p = p;
            best_t1 = t1;
        }
    }
    const double lo = std::max(0.0, best_t1 - 2.0 * kOuterGridStep);
    const double hi = std::min(1.0, best_t1 + 2.0 * kOuterGridStep);
    const double t1 = golden_max([&](double x) { return peak_for_t1(x).first; }, lo, hi, 1e-12);
    const auto [p, t2] = peak_for_t1(t1);
    return {p, t1, t2};
}

}  // namespace

TradeoffPoint elementary_point(double t, double eta) {
    check_unit(t, "transmittance");
    check_unit(eta, "detector efficiency");
    const double denom = 1.0 - (1.0 - t) * eta;
    const double p = 2.0 * eta * (1.0 - t) * denom;
    const double p1 = denom > 0.0 ? t / denom : 0.0;
    return {p, p1, t, std::nullopt, eta, 1.0};
}

TradeoffPoint feedforward_point(double t1, double t2, double eta, double eta_o) {
    check_unit(t1, "transmittance");
    check_unit(t2, "transmittance");
    check_unit(eta, "detector efficiency");
    check_unit(eta_o, "optical transmittance");
    const double tap = eta_o * (1.0 - t2);
    const double braces = 1.0 - t1 - eta + eta * t1 * (2.0 - t1 - tap * (1.0 - t1 + eta_o * t1 * (1.0 - t2))) +
                          tap * t1;
    const double p = 2.0 * eta * braces;
    const double numerator = eta_o * t1 * (1.0 - t1 + eta_o * t1 * t2 * (1.0 - t2));
    const double p1 = braces > 0.0 && p > 0.0 ? numerator / braces : 0.0;
    return {p, p1, t1, t2, eta, eta_o};
}

FeedforwardOptimum optimize_feedforward(double eta, double eta_o, double target_p) {
    check_unit(eta, "detector efficiency");
    check_unit(eta_o, "optical transmittance");
    if (target_p > 1.0) throw std::domain_error("target probability must not exceed 1");

    const SquareMax square = feedforward_max(eta, eta_o);

    if (target_p <= 0.0) {
        // Vanishing-rate limit: t2 -> 1 at t1 = 1 gives p1 -> eta_o.
        return {true, 1.0, 1.0, eta_o, square.p};
    }
    if (target_p > square.p + kConstraintTolerance) {
        return {false, 0.0, 0.0, 0.0, square.p};
    }
    if (target_p >= square.p - kConstraintTolerance) {
        // The level set degenerates to (a neighborhood of) the argmax.
        const TradeoffPoint at_max = feedforward_point(square.t1, square.t2, eta, eta_o);
        return {true, square.t1, square.t2, at_max.single_photon_fraction, square.p};
    }

    // Outer scan over t1; each candidate recovers its feasible t2 exactly.
    double best_t1 = -1.0;
    RidgePoint best;
    const int steps = static_cast<int>(std::lround(1.0 / kOuterGridStep));
    for (int i = 0; i <= steps; ++i) {
        const double t1 = static_cast<double>(i) / steps;
        const RidgePoint point = best_t2_on_level(t1, eta, eta_o, target_p);
        if (point.found && point.p1 > best.p1) {
            best = point;
            best_t1 = t1;
        }
    }
    {
        const RidgePoint point = best_t2_on_level(square.t1, eta, eta_o, target_p);
        if (point.found && point.p1 > best.p1) {
            best = point;
            best_t1 = square.t1;
        }
    }
    if (!best.found) {
        return {false, 0.0, 0.0, 0.0, square.p};
    }

    // Pattern-search polish along t1.
    double step = kOuterGridStep;
    while (step > 1e-9) {
        bool moved = false;
        for (const double candidate : {best_t1 - step, best_t1 + step}) {
            if (candidate < 0.0 || candidate > 1.0) continue;
            const RidgePoint point = best_t2_on_level(candidate, eta, eta_o, target_p);
            if (point.found && point.p1 > best.p1 + 1e-15) {
                best = point;
                best_t1 = candidate;
                moved = true;
            }
        }
        if (!moved) step *= 0.5;
    }

    return {true, best_t1, best.t2, best.p1, square.p};
}

std::vector<TradeoffPoint> tradeoff_curve(double eta, double eta_o, int n_points) {
    check_unit(eta, "detector efficiency");
    check_unit(eta_o, "optical transmittance");
    if (n_points < 2) throw std::domain_error("tradeoff_curve requires n_points >= 2");

    std::vector<TradeoffPoint> points;
    points.reserve(2 * n_points);

    // Elementary frontier: invert P(T) on the larger-T branch.
    const double p_elem_max = eta >= 0.5 ? 0.5 : 2.0 * eta * (1.0 - eta);
    for (int i = 1; i <= n_points; ++i) {
        const double target = p_elem_max * static_cast<double>(i) / n_points;
        double t = 1.0;
        if (eta > 0.0 && target > 0.0) {
            const double reflect = (1.0 - std::sqrt(std::max(0.0, 1.0 - 2.0 * target))) / (2.0 * eta);
            t = std::clamp(1.0 - reflect, 0.0, 1.0);
        }
        TradeoffPoint point = elementary_point(t, eta);
        point.eta_o = eta_o;
        points.push_back(point);
    }

    // Feedforward frontier via the constrained optimizer.
    const SquareMax square = feedforward_max(eta, eta_o);
    for (int i = 1; i <= n_points; ++i) {
        const double target = square.p * static_cast<double>(i) / n_points;
        const FeedforwardOptimum opt = optimize_feedforward(eta, eta_o, target);
        if (!opt.feasible) continue;
        points.push_back(feedforward_point(opt.t1, opt.t2, eta, eta_o));
    }
    return points;
}

std::string tradeoff_csv(std::span<const TradeoffPoint> points) {
    std::string out = "scheme,eta,eta_O,T1,T2,P,p1\n";
    char line[192];
    for (const TradeoffPoint& point : points) {
        if (point.t2.has_value()) {
            std::snprintf(line, sizeof(line), "feedforward,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g\n",
                          point.eta, point.eta_o, point.t1, *point.t2, point.probability,
                          point.single_photon_fraction);
        } else {
            std::snprintf(line, sizeof(line), "elementary,%.6g,%.6g,%.6g,,%.6g,%.6g\n", point.eta,
                          point.eta_o, point.t1, point.probability, point.single_photon_fraction);
        }
        out += line;
    }
    return out;
}

}  // namespace fockconv

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fockconv {

/// One operating point of a two-to-one conversion scheme: success
/// probability P against the single-photon fraction p1 of the conditional
/// output, together with the settings that produced it. t2 is engaged only
/// for the feedforward scheme.
struct TradeoffPoint {
    double probability;
    double single_photon_fraction;
    double t1;
    std::optional<double> t2;
    double eta;
    double eta_o;
};

/// Single subtraction block with detector efficiency eta:
///   P  = 2 eta (1-T) [1 - (1-T) eta]
///   p1 = T / [1 - (1-T) eta]
/// p1 is reported as 0 when its denominator vanishes (eta = 1, T = 0).
TradeoffPoint elementary_point(double t, double eta);

/// Two-block scheme whose second splitter is switched between t2 and 1 by
/// the first detector, with detector efficiency eta and a loss channel of
/// transmittance eta_o between the splitters. p1 is reported as 0 when
/// P = 0.
TradeoffPoint feedforward_point(double t1, double t2, double eta, double eta_o);

struct FeedforwardOptimum {
    bool feasible;
    /// Valid when feasible: settings maximizing p1 subject to
    /// P(t1, t2) = target within 1e-6.
    double t1;
    double t2;
    double p1;
    /// Maximum of P over the whole (t1, t2) square; reported either way so
    /// an infeasible target comes back with the achievable value.
    double achievable_max;
};

/// Maximizes the single-photon fraction subject to a fixed conversion
/// probability. Outer scan over t1 at step 1e-3, feasible t2 recovered per
/// t1 by bisection on the two monotone flanks of P(t1, .), then local
/// pattern-search polish. A target within 1e-6 of the global maximum of P
/// returns the unconstrained argmax (the level set degenerates to a point
/// there). target_p = 0 returns the vanishing-rate limit point
/// (t1 = 1, t2 = 1, p1 = eta_o).
FeedforwardOptimum optimize_feedforward(double eta, double eta_o, double target_p);

/// Pareto frontiers of both schemes: n_points per scheme, sweeping the
/// target probability over (0, P_max]. Elementary points come from the
/// closed-form larger-T branch of the quadratic; feedforward points from
/// optimize_feedforward. Ordered by scheme (elementary first when present)
/// then by increasing probability.
std::vector<TradeoffPoint> tradeoff_curve(double eta, double eta_o, int n_points);

/// CSV with header scheme,eta,eta_O,T1,T2,P,p1. The T2 column is empty for
/// elementary points.
std::string tradeoff_csv(std::span<const TradeoffPoint> points);

}  // namespace fockconv

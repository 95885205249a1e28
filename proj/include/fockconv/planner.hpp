#pragma once

#include <map>
#include <span>
#include <string>

#include "fockconv/fock.hpp"

namespace fockconv {

/// Adaptive subtraction plan. Each node fixes the transmittance of the
/// current stage's beam splitter; `children` maps the detected count at
/// this stage to the plan for the remaining stages. An outcome with no
/// child means "pass through": every remaining stage is set to T = 1.
struct Policy {
    enum class Status { Active, Done, Failed };

    double transmittance = 1.0;
    Status status = Status::Active;
    std::map<int, Policy> children;
    int depth = 0;   ///< stages remaining from this node (k at the root)
    int target = 0;  ///< photon number the plan aims to keep

    nlohmann::json to_json() const;
    /// Parses the {"T", "children", "status"} tree written by to_json.
    static Policy from_json(const nlohmann::json& node, int depth, int target);
};

struct StageOptimum {
    double transmittance;
    double probability;
};

/// Conversion probability of a k-stage scheme as a function of the first
/// transmittance, given the optimal continuation values
/// prior[j] = P_max(m-j, n | k-1) for j = 0..m-n:
///   P(t1) = sum_j C(m,j) t1^(m-j) (1-t1)^j prior[j].
double stage_objective(int m, int n, std::span<const double> prior, double t1);

/// Maximizes stage_objective over t1 in [0,1]. Stationary points are the
/// real roots of the derivative polynomial after dividing out its t1^(n-1)
/// factor; they are located by sign-change bisection on 256 subintervals
/// refined to 1e-12 and compared against both endpoints. Ties within 1e-12
/// resolve to the larger transmittance.
StageOptimum optimal_first_stage(int m, int n, std::span<const double> prior);

/// Optimal conversion probabilities P_max(m', n | k) and the first-stage
/// transmittances that achieve them, for all n <= m' <= m, 0 <= k <= k_max.
class PmaxTable {
public:
    PmaxTable(int m, int n, int k_max);

    int input_photons() const noexcept { return m_; }
    int target() const noexcept { return n_; }
    int max_steps() const noexcept { return k_max_; }

    double pmax(int m, int k) const;
    double optimal_t1(int m, int k) const;

    /// CSV with header m,n,k,T1_opt,P_max; one row per (m', k >= 1) entry.
    std::string to_csv() const;

private:
    struct Entry {
        double pmax;
        double t1;
    };
    Entry& at(int m, int k);
    const Entry& at(int m, int k) const;

    int m_;
    int n_;
    int k_max_;
    std::vector<Entry> entries_;
};

/// Builds the table iteratively: photon surplus l = m'-n in the outer loop,
/// step count k in the inner loop, each entry maximizing over the previous
/// row. Work is capped at (m-n) * k_max <= 4096.
PmaxTable pmax_table(int m, int n, int k_max);

/// Expands a table into the full decision tree: the node reached after
/// subtracting j photons with r stages left carries the optimal first-stage
/// transmittance of the (m-j, n | r) subproblem. Branches that reached the
/// target are Done with all remaining transmittances 1.
Policy build_policy(const PmaxTable& table);
Policy build_policy(int m, int n, int k);

struct PolicyEvaluation {
    double success_probability;
    /// Output state conditioned on success (vacuum when the success
    /// probability is zero).
    PhotonNumberMixture output;
    /// Total probability over success and all failure branches; equals 1 up
    /// to rounding and serves as an internal consistency check.
    double branch_probability_total;
};

/// Exhaustive outcome-tree enumeration of a policy run on input |m> with an
/// arbitrary detector model. A loss channel of transmittance eta_o acts on
/// the main beam before each stage after the first. Success means the
/// detected counts sum to exactly m - target; with inefficient detectors
/// the surviving photon number can then still fall short, which is what the
/// conditional output mixture captures.
PolicyEvaluation evaluate_policy(const Policy& policy, int m, const DetectorModel& det,
                                 double eta_o = 1.0);

}  // namespace fockconv

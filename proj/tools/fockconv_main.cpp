// Command-line surface for planning adaptive photon-subtraction schemes,
// reconstructing the trade-off curves, validating them by Monte Carlo, and
// emulating the six-detector coincidence experiment.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "fockconv/coincidence.hpp"
#include "fockconv/montecarlo.hpp"
#include "fockconv/planner.hpp"
#include "fockconv/tradeoff.hpp"

namespace {

using nlohmann::json;

constexpr int kExitUsage = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitNumeric = 4;

// All numeric output carries six significant digits.
double sig6(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.6g", value);
    return std::strtod(buffer, nullptr);
}

std::string fmt6(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.6g", value);
    return buffer;
}

json round_policy_json(const json& node) {
    json out = node;
    out["T"] = sig6(node.at("T").get<double>());
    if (node.contains("children")) {
        json kids = json::object();
        for (const auto& [key, child] : node.at("children").items()) {
            kids[key] = round_policy_json(child);
        }
        out["children"] = std::move(kids);
    }
    return out;
}

json mixture_json(const fockconv::PhotonNumberMixture& mixture) {
    json out = json::object();
    const json probs = mixture.to_json();
    for (const auto& [key, value] : probs.items()) {
        out[key] = sig6(value.get<double>());
    }
    return out;
}

void write_output(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream file(out_path);
    if (!file) throw std::runtime_error("cannot open output file: " + out_path);
    file << text;
}

std::uint64_t pick_seed(const std::optional<std::uint64_t>& requested, bool quiet = false) {
    if (requested.has_value()) return *requested;
    std::random_device device;
    const std::uint64_t seed =
        (static_cast<std::uint64_t>(device()) << 32) ^ static_cast<std::uint64_t>(device());
    if (!quiet) std::cerr << "seed drawn: " << seed << "\n";
    return seed;
}

fockconv::DetectorModel make_detector(const std::string& kind, double eta) {
    if (kind == "ideal") return fockconv::DetectorModel::ideal_pnr();
    if (kind == "pnr") return fockconv::DetectorModel::inefficient_pnr(eta);
    if (kind == "clickpair") return fockconv::DetectorModel::click_pair(eta);
    throw CLI::ValidationError("--det must be one of ideal|pnr|clickpair");
}

struct ConfigDefaults {
    json values = json::object();

    double number(const char* key, double fallback) const {
        return values.contains(key) ? values.at(key).get<double>() : fallback;
    }
    int integer(const char* key, int fallback) const {
        return values.contains(key) ? values.at(key).get<int>() : fallback;
    }
    std::uint64_t counter(const char* key, std::uint64_t fallback) const {
        return values.contains(key) ? values.at(key).get<std::uint64_t>() : fallback;
    }
    std::string text(const char* key, std::string fallback) const {
        return values.contains(key) ? values.at(key).get<std::string>() : fallback;
    }
    bool flag(const char* key, bool fallback) const {
        return values.contains(key) ? values.at(key).get<bool>() : fallback;
    }
};

ConfigDefaults load_config(int argc, char** argv) {
    std::string path;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) path = argv[i + 1];
        if (arg.rfind("--config=", 0) == 0) path = arg.substr(9);
    }
    ConfigDefaults config;
    if (path.empty()) return config;
    std::ifstream file(path);
    if (!file) throw std::runtime_error("cannot read config file: " + path);
    file >> config.values;
    return config;
}

int default_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

int main(int argc, char** argv) {
    ConfigDefaults config;
    try {
        config = load_config(argc, argv);
    } catch (const std::exception& error) {
        std::cerr << "error: " << error.what() << "\n";
        return kExitUsage;
    }

    CLI::App app{"adaptive photon-subtraction planner, trade-off explorer and lab emulator"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (flags take precedence)");

    // Shared parameter bundle; each subcommand binds the members it uses.
    int m = config.integer("m", 2);
    int n = config.integer("n", 1);
    int k = config.integer("k", 2);
    int k_max = config.integer("K", 9);
    double eta = config.number("eta", 1.0);
    double eta_o = config.number("eta_o", 1.0);
    double t1 = config.number("t1", 2.0 / 3.0);
    double t2 = config.number("t2", 0.5);
    double mu = config.number("mu", 0.05);
    std::uint64_t trials = config.counter("trials", 1'000'000);
    std::uint64_t pulses = config.counter("pulses", 1'000'000);
    int threads = config.integer("threads", default_threads());
    std::string format = config.text("format", "");
    std::string out_path = config.text("out", "");
    std::optional<std::uint64_t> seed;
    if (config.values.contains("seed")) seed = config.values.at("seed").get<std::uint64_t>();

    auto* plan = app.add_subcommand("plan", "optimal conversion probability and policy tree");
    plan->add_option("-m", m, "input photon number")->required();
    plan->add_option("-n", n, "target photon number")->required();
    plan->add_option("-k", k, "number of subtraction stages")->required();
    plan->add_option("--out", out_path, "write to file instead of stdout");

    auto* curve = app.add_subcommand("curve", "P_max against the number of stages");
    curve->add_option("-m", m, "input photon number")->required();
    curve->add_option("-n", n, "target photon number")->required();
    curve->add_option("-K,--steps", k_max, "largest stage count");
    curve->add_option("--format", format, "csv (default) or json");
    curve->add_option("--out", out_path, "write to file instead of stdout");

    auto* tradeoff = app.add_subcommand("tradeoff", "conversion/quality frontiers under loss");
    tradeoff->add_option("--eta", eta, "detector efficiency");
    tradeoff->add_option("--eta-o", eta_o, "switchable-path transmittance");
    int n_points = config.integer("points", 50);
    tradeoff->add_option("--points", n_points, "points per frontier");
    std::optional<double> target_p;
    if (config.values.contains("target")) target_p = config.values.at("target").get<double>();
    tradeoff->add_option("--target", target_p,
                         "optimize a single target probability instead of sweeping");
    tradeoff->add_option("--format", format, "csv (default) or json");
    tradeoff->add_option("--out", out_path, "write to file instead of stdout");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo validation of a policy");
    std::string policy_path = config.text("policy", "");
    simulate->add_option("--policy", policy_path, "policy JSON (plan output or bare tree)");
    simulate->add_option("-m", m, "input photon number");
    simulate->add_option("-n", n, "target photon number");
    simulate->add_option("-k", k, "number of subtraction stages");
    std::string det_kind = config.text("det", "ideal");
    simulate->add_option("--det", det_kind, "detector model: ideal|pnr|clickpair")
        ->check(CLI::IsMember({"ideal", "pnr", "clickpair"}));
    simulate->add_option("--eta", eta, "detector efficiency for pnr/clickpair");
    simulate->add_option("--eta-o", eta_o, "loss before each stage after the first");
    simulate->add_option("--trials", trials, "number of trajectories");
    auto* sim_seed_opt = simulate->add_option("--seed", seed, "RNG seed (drawn if omitted)");
    simulate->add_option("--threads", threads, "worker threads");
    std::string dump_path = config.text("dump", "");
    simulate->add_option("--dump", dump_path,
                         "write the first trajectories (up to 10000) as JSON lines");
    simulate->add_option("--out", out_path, "write report to file instead of stdout");

    auto* emulate = app.add_subcommand("emulate", "six-detector coincidence experiment");
    std::string source_kind = config.text("source", "coherent");
    emulate->add_option("--source", source_kind, "coherent|fock2")
        ->check(CLI::IsMember({"coherent", "fock2"}));
    emulate->add_option("--mu", mu, "mean photons per pulse for the coherent source");
    emulate->add_option("--t1", t1, "BS1 transmittance");
    emulate->add_option("--t2", t2, "BS2 transmittance when not switched");
    bool no_feedforward = config.flag("no_feedforward", false);
    emulate->add_flag("--no-feedforward", no_feedforward, "hold BS2 fixed at --t2");
    fockconv::lab::PortLosses losses{config.number("loss_aux1", 1.0),
                                     config.number("loss_aux2", 1.0),
                                     config.number("loss_out", 1.0)};
    emulate->add_option("--loss-aux1", losses.aux1, "AUX1 path transmittance");
    emulate->add_option("--loss-aux2", losses.aux2, "AUX2 path transmittance");
    emulate->add_option("--loss-out", losses.out, "OUT path transmittance");
    emulate->add_option("--eta", eta, "detector efficiency");
    emulate->add_option("--pulses", pulses, "pulses per run");
    auto* emu_seed_opt = emulate->add_option("--seed", seed, "RNG seed (drawn if omitted)");
    emulate->add_option("--threads", threads, "worker threads");
    int sweep_points = config.integer("sweep", 0);
    emulate->add_option("--sweep", sweep_points,
                        "sweep T1 over this many points and emit CSV instead of a report");
    emulate->add_option("--out", out_path, "write to file instead of stdout");

    // --config may appear after the subcommand name; let it reach the app.
    for (auto* sub : {plan, curve, tradeoff, simulate, emulate}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& error) {
        const int code = app.exit(error);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (plan->parsed()) {
            if (n < 0 || m < n || k < 1 || m > fockconv::PhotonNumberMixture::kMaxSupportedPhotons) {
                std::cerr << "error: plan requires 0 <= n <= m <= 64 and k >= 1\n";
                return kExitUsage;
            }
            const fockconv::Policy policy = fockconv::build_policy(m, n, k);
            double p_max = 1.0;
            double t1_opt = 1.0;
            if (m > n) {
                const auto table = fockconv::pmax_table(m, n, k);
                p_max = table.pmax(m, k);
                t1_opt = table.optimal_t1(m, k);
            }
            json report{{"m", m},
                        {"n", n},
                        {"k", k},
                        {"p_max", sig6(p_max)},
                        {"t1", sig6(t1_opt)},
                        {"policy", round_policy_json(policy.to_json())}};
            write_output(report.dump(2), out_path);
            return 0;
        }

        if (curve->parsed()) {
            if (n < 0 || m <= n || k_max < 1 ||
                m > fockconv::PhotonNumberMixture::kMaxSupportedPhotons) {
                std::cerr << "error: curve requires 0 <= n < m <= 64 and K >= 1\n";
                return kExitUsage;
            }
            const auto table = fockconv::pmax_table(m, n, k_max);
            if (format == "json") {
                json rows = json::array();
                for (int step = 1; step <= k_max; ++step) {
                    rows.push_back({{"m", m},
                                    {"n", n},
                                    {"k", step},
                                    {"t1_opt", sig6(table.optimal_t1(m, step))},
                                    {"p_max", sig6(table.pmax(m, step))}});
                }
                write_output(rows.dump(2), out_path);
            } else {
                std::string csv = "m,n,k,T1_opt,P_max\n";
                for (int step = 1; step <= k_max; ++step) {
                    csv += std::to_string(m) + "," + std::to_string(n) + "," +
                           std::to_string(step) + "," + fmt6(table.optimal_t1(m, step)) + "," +
                           fmt6(table.pmax(m, step)) + "\n";
                }
                write_output(csv, out_path);
            }
            return 0;
        }

        if (tradeoff->parsed()) {
            if (target_p.has_value()) {
                const auto opt = fockconv::optimize_feedforward(eta, eta_o, *target_p);
                json report{{"eta", sig6(eta)},
                            {"eta_o", sig6(eta_o)},
                            {"target_p", sig6(*target_p)},
                            {"feasible", opt.feasible},
                            {"achievable_max", sig6(opt.achievable_max)}};
                if (opt.feasible) {
                    report["t1"] = sig6(opt.t1);
                    report["t2"] = sig6(opt.t2);
                    report["p1"] = sig6(opt.p1);
                }
                write_output(report.dump(2), out_path);
                if (!opt.feasible) {
                    std::cerr << "error: target probability " << fmt6(*target_p)
                              << " exceeds achievable maximum " << fmt6(opt.achievable_max)
                              << "\n";
                    return kExitInfeasible;
                }
                return 0;
            }
            const auto points = fockconv::tradeoff_curve(eta, eta_o, n_points);
            if (format == "json") {
                json rows = json::array();
                for (const auto& point : points) {
                    json row{{"scheme", point.t2.has_value() ? "feedforward" : "elementary"},
                             {"eta", sig6(point.eta)},
                             {"eta_o", sig6(point.eta_o)},
                             {"t1", sig6(point.t1)},
                             {"p", sig6(point.probability)},
                             {"p1", sig6(point.single_photon_fraction)}};
                    if (point.t2.has_value()) row["t2"] = sig6(*point.t2);
                    rows.push_back(std::move(row));
                }
                write_output(rows.dump(2), out_path);
            } else {
                write_output(fockconv::tradeoff_csv(points), out_path);
            }
            return 0;
        }

        if (simulate->parsed()) {
            fockconv::Policy policy;
            if (!policy_path.empty()) {
                std::ifstream file(policy_path);
                if (!file) {
                    std::cerr << "error: cannot read policy file: " << policy_path << "\n";
                    return kExitUsage;
                }
                json doc;
                file >> doc;
                if (doc.contains("policy")) {
                    m = doc.at("m").get<int>();
                    n = doc.at("n").get<int>();
                    k = doc.at("k").get<int>();
                    policy = fockconv::Policy::from_json(doc.at("policy"), k, n);
                } else {
                    const bool have_shape = simulate->count("-m") && simulate->count("-n") &&
                                            simulate->count("-k");
                    if (!have_shape) {
                        std::cerr << "error: a bare policy tree needs -m, -n and -k\n";
                        return kExitUsage;
                    }
                    policy = fockconv::Policy::from_json(doc, k, n);
                }
            } else {
                if (n < 0 || m < n || k < 1) {
                    std::cerr << "error: simulate requires 0 <= n <= m and k >= 1\n";
                    return kExitUsage;
                }
                policy = fockconv::build_policy(m, n, k);
            }

            const auto det = make_detector(det_kind, eta);
            const bool seed_given = sim_seed_opt->count() > 0 || seed.has_value();
            const std::uint64_t run_seed = pick_seed(seed, seed_given);
            const auto result =
                fockconv::mc::estimate_success(policy, m, det, eta_o, trials, run_seed, threads);

            if (!dump_path.empty()) {
                std::ofstream dump(dump_path);
                if (!dump) {
                    std::cerr << "error: cannot open dump file: " << dump_path << "\n";
                    return kExitUsage;
                }
                const std::uint64_t n_dump = std::min<std::uint64_t>(trials, 10'000);
                for (std::uint64_t trial = 0; trial < n_dump; ++trial) {
                    fockconv::SubstreamRng rng(run_seed, trial);
                    dump << fockconv::mc::simulate_trajectory(policy, m, det, eta_o, rng)
                                .to_json()
                                .dump()
                         << "\n";
                }
            }

            json report{{"m", m},
                        {"n", n},
                        {"detector", det_kind},
                        {"eta", sig6(eta)},
                        {"eta_o", sig6(eta_o)},
                        {"trials", trials},
                        {"seed", run_seed},
                        {"estimate", sig6(result.estimate.value)},
                        {"std_error", sig6(result.estimate.std_error)},
                        {"successes", result.successes},
                        {"output_mixture", mixture_json(result.output)}};
            write_output(report.dump(2), out_path);
            return 0;
        }

        if (emulate->parsed()) {
            fockconv::lab::EmulationSettings settings;
            if (source_kind == "fock2") {
                settings.source = fockconv::lab::SourceModel::fock2();
            } else if (source_kind == "coherent") {
                settings.source = fockconv::lab::SourceModel::coherent(mu);
            } else {
                std::cerr << "error: --source must be coherent or fock2\n";
                return kExitUsage;
            }
            settings.t1 = t1;
            settings.t2 = t2;
            settings.feedforward = !no_feedforward;
            settings.losses = losses;
            settings.det_eta = eta;

            const bool seed_given = emu_seed_opt->count() > 0 || seed.has_value();
            const std::uint64_t run_seed = pick_seed(seed, seed_given);

            if (sweep_points > 0) {
                std::string csv = "T_eff,P_exp,SE,scheme\n";
                const char* scheme = settings.feedforward ? "feedforward" : "single";
                for (int i = 0; i < sweep_points; ++i) {
                    auto point = settings;
                    point.t1 = sweep_points == 1
                                   ? t1
                                   : 0.05 + 0.9 * static_cast<double>(i) / (sweep_points - 1);
                    const auto counts =
                        fockconv::lab::run_pulses(point, pulses, run_seed + i, threads);
                    const auto success = fockconv::lab::effective_success(counts);
                    csv += fmt6(fockconv::lab::effective_transmittance(counts)) + "," +
                           fmt6(success.p_exp) + "," + fmt6(success.std_error) + "," + scheme +
                           "\n";
                }
                write_output(csv, out_path);
                return 0;
            }

            const auto counts = fockconv::lab::run_pulses(settings, pulses, run_seed, threads);
            const auto totals = fockconv::lab::tag(counts);
            const auto success = fockconv::lab::effective_success(counts);
            const double source_mu =
                settings.source.kind == fockconv::lab::SourceModel::Kind::Coherent ? mu : 0.0;
            json report{{"source", source_kind},
                        {"mu", sig6(source_mu)},
                        {"t1", sig6(t1)},
                        {"t2", sig6(t2)},
                        {"feedforward", settings.feedforward},
                        {"det_eta", sig6(eta)},
                        {"pulses", pulses},
                        {"seed", run_seed},
                        {"t_eff", sig6(fockconv::lab::effective_transmittance(counts))},
                        {"p_exp", sig6(success.p_exp)},
                        {"se", sig6(success.std_error)},
                        {"successful", totals.successful},
                        {"unsuccessful", totals.unsuccessful},
                        {"spurious_fraction",
                         sig6(fockconv::lab::spurious_fraction(counts, source_mu))},
                        {"counts", counts.to_json()}};
            write_output(report.dump(2), out_path);
            return 0;
        }
    } catch (const std::exception& error) {
        std::cerr << "error: " << error.what() << "\n";
        return kExitNumeric;
    }
    return 0;
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"

using nlohmann::json;

namespace {

struct CommandResult {
    int exit_code;
    std::string output;
};

CommandResult run_cli(const std::string& args) {
    const std::string command = std::string(FOCKCONV_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string output;
    char buffer[4096];
    while (std::size_t read = std::fread(buffer, 1, sizeof(buffer), pipe)) {
        output.append(buffer, read);
    }
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, output};
}

std::string first_line(const std::string& text) {
    return text.substr(0, text.find('\n'));
}

int count_lines(const std::string& text) {
    int lines = 0;
    for (const char c : text) lines += c == '\n';
    return lines;
}

}  // namespace

TEST_CASE("plan prints the optimum and the policy tree") {
    const auto result = run_cli("plan -m 2 -n 1 -k 2");
    REQUIRE(result.exit_code == 0);
    const json report = json::parse(result.output);
    CHECK(report.at("p_max").get<double>() == doctest::Approx(0.666667).epsilon(1e-6));
    CHECK(report.at("t1").get<double>() == doctest::Approx(0.666667).epsilon(1e-6));
    const json& policy = report.at("policy");
    CHECK(policy.at("T").get<double>() == doctest::Approx(0.666667).epsilon(1e-6));
    CHECK(policy.at("children").at("0").at("T").get<double>() ==
          doctest::Approx(0.5).epsilon(1e-6));
    CHECK(policy.at("children").at("1").at("T").get<double>() == doctest::Approx(1.0));
    CHECK(policy.at("children").at("1").at("status").get<std::string>() == "done");
}

TEST_CASE("plan handles the trivial and the derived cases") {
    const auto trivial = run_cli("plan -m 3 -n 3 -k 1");
    REQUIRE(trivial.exit_code == 0);
    CHECK(json::parse(trivial.output).at("p_max").get<double>() == doctest::Approx(1.0));

    const auto derived = run_cli("plan -m 3 -n 2 -k 2");
    REQUIRE(derived.exit_code == 0);
    const json report = json::parse(derived.output);
    CHECK(report.at("p_max").get<double>() == doctest::Approx(0.612476).epsilon(1e-5));
    CHECK(report.at("t1").get<double>() == doctest::Approx(0.782609).epsilon(1e-5));
}

TEST_CASE("plan rejects malformed requests with a usage error") {
    CHECK(run_cli("plan -m 2 -n 3 -k 1").exit_code == 2);
    CHECK(run_cli("plan -m 2 -n 1").exit_code == 2);
    CHECK(run_cli("nonsense").exit_code == 2);
}

TEST_CASE("curve emits the fixed CSV schema") {
    const auto result = run_cli("curve -m 2 -n 1 -K 9");
    REQUIRE(result.exit_code == 0);
    CHECK(first_line(result.output) == "m,n,k,T1_opt,P_max");
    CHECK(count_lines(result.output) == 10);
    // Row k = 9 carries the k/(k+1) value.
    CHECK(result.output.find("2,1,9,0.9,0.9") != std::string::npos);

    const auto single = run_cli("curve -m 5 -n 4 -K 1");
    CHECK(single.output.find("5,4,1,0.8,0.4096") != std::string::npos);

    CHECK(run_cli("curve -m 2 -n 2 -K 3").exit_code == 2);
    CHECK(run_cli("curve -m 64 -n 0 -K 65").exit_code == 4);
}

TEST_CASE("tradeoff sweeps both frontiers and optimizes single targets") {
    const auto sweep = run_cli("tradeoff --eta 0.85 --eta-o 0.95 --points 8");
    REQUIRE(sweep.exit_code == 0);
    CHECK(first_line(sweep.output) == "scheme,eta,eta_O,T1,T2,P,p1");
    CHECK(sweep.output.find("elementary,") != std::string::npos);
    CHECK(sweep.output.find("feedforward,") != std::string::npos);

    const auto target = run_cli("tradeoff --eta 0.85 --eta-o 0.95 --target 0.6666666666666666");
    REQUIRE(target.exit_code == 0);
    const json report = json::parse(target.output);
    CHECK(report.at("feasible").get<bool>());
    CHECK(report.at("t1").get<double>() == doctest::Approx(0.607843).epsilon(1e-5));
    CHECK(report.at("t2").get<double>() == doctest::Approx(0.320883).epsilon(1e-5));
    CHECK(report.at("p1").get<double>() == doctest::Approx(0.762745).epsilon(1e-5));

    const auto infeasible = run_cli("tradeoff --eta 0.6 --eta-o 0.9 --target 0.667");
    CHECK(infeasible.exit_code == 3);
    CHECK_FALSE(json::parse(infeasible.output).at("feasible").get<bool>());
}

TEST_CASE("simulate is reproducible and statistically sound") {
    const std::string args =
        "simulate -m 2 -n 1 -k 2 --det pnr --eta 0.6 --trials 200000 --seed 11 --threads 4";
    const auto first = run_cli(args);
    const auto second = run_cli(args);
    REQUIRE(first.exit_code == 0);
    CHECK(first.output == second.output);

    const json report = json::parse(first.output);
    CHECK(report.at("seed").get<std::uint64_t>() == 11);
    const double estimate = report.at("estimate").get<double>();
    const double se = report.at("std_error").get<double>();
    CHECK(std::abs(estimate - 0.56) <= 4.0 * se);

    // Omitting the seed still produces a report that echoes the drawn seed.
    const auto drawn = run_cli("simulate -m 2 -n 1 -k 1 --trials 1000");
    REQUIRE(drawn.exit_code == 0);
    CHECK(json::parse(drawn.output).contains("seed"));
}

TEST_CASE("simulate round-trips a policy file written by plan") {
    const std::string plan_path = "/tmp/fockconv_test_plan.json";
    const auto planned = run_cli("plan -m 2 -n 1 -k 2 --out " + plan_path);
    REQUIRE(planned.exit_code == 0);
    const auto result = run_cli("simulate --policy " + plan_path +
                                " --trials 200000 --seed 3 --threads 4");
    REQUIRE(result.exit_code == 0);
    const json report = json::parse(result.output);
    const double estimate = report.at("estimate").get<double>();
    const double se = report.at("std_error").get<double>();
    CHECK(std::abs(estimate - 2.0 / 3.0) <= 4.0 * se);
    std::remove(plan_path.c_str());
}

TEST_CASE("simulate writes trajectory dumps as JSON lines") {
    const std::string dump_path = "/tmp/fockconv_test_dump.jsonl";
    const auto result = run_cli("simulate -m 2 -n 1 -k 2 --trials 500 --seed 5 --dump " +
                                dump_path);
    REQUIRE(result.exit_code == 0);
    std::ifstream dump(dump_path);
    REQUIRE(dump.good());
    std::string line;
    int lines = 0;
    while (std::getline(dump, line)) {
        const json record = json::parse(line);
        CHECK(record.contains("outcomes"));
        CHECK(record.contains("success"));
        ++lines;
    }
    CHECK(lines == 500);
    std::remove(dump_path.c_str());
}

TEST_CASE("emulate reports the experiment summary") {
    const auto result =
        run_cli("emulate --source fock2 --t1 0.663 --pulses 200000 --seed 17 --threads 4");
    REQUIRE(result.exit_code == 0);
    const json report = json::parse(result.output);
    CHECK(report.at("spurious_fraction").get<double>() == 0.0);
    CHECK(report.at("counts").at("higher").get<std::uint64_t>() == 0);
    const double p_exp = report.at("p_exp").get<double>();
    const double se = report.at("se").get<double>();
    CHECK(std::abs(p_exp - (2.0 * 0.663 - 1.5 * 0.663 * 0.663)) <= 4.0 * se);
    CHECK(report.at("counts").at("singles").contains("D1A"));
    CHECK(report.at("counts").at("pairs").contains("D0A-D2B"));
}

TEST_CASE("emulate sweeps emit the figure CSV") {
    const auto result = run_cli("emulate --source fock2 --sweep 5 --pulses 50000 --seed 23");
    REQUIRE(result.exit_code == 0);
    CHECK(first_line(result.output) == "T_eff,P_exp,SE,scheme");
    CHECK(count_lines(result.output) == 6);
    CHECK(result.output.find(",feedforward") != std::string::npos);

    const auto single = run_cli(
        "emulate --source fock2 --no-feedforward --t2 1.0 --sweep 3 --pulses 50000 --seed 29");
    CHECK(single.output.find(",single") != std::string::npos);
}

TEST_CASE("config file values apply beneath flags") {
    const std::string config_path = "/tmp/fockconv_test_config.json";
    std::ofstream(config_path) << R"({"eta": 0.6, "eta_o": 0.9, "target": 0.3})";

    const auto from_config = run_cli("tradeoff --config " + config_path);
    REQUIRE(from_config.exit_code == 0);
    const json report = json::parse(from_config.output);
    CHECK(report.at("eta").get<double>() == doctest::Approx(0.6));
    CHECK(report.at("target_p").get<double>() == doctest::Approx(0.3));

    const auto overridden = run_cli("tradeoff --config " + config_path + " --eta 0.85");
    REQUIRE(overridden.exit_code == 0);
    CHECK(json::parse(overridden.output).at("eta").get<double>() == doctest::Approx(0.85));
    std::remove(config_path.c_str());
}

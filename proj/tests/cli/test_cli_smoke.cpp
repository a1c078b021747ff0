#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

// Drives the built binary end to end: exit codes, output schemas and
// byte-level reproducibility.

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = ABF_CLI_PATH;

struct RunResult {
    int exit_code;
    std::string stderr_text;
};

RunResult run_cli(const std::string& args, const std::string& tag) {
    const fs::path err = fs::temp_directory_path() / ("abf_stderr_" + tag + ".txt");
    const std::string cmd = kCli + " " + args + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    std::ifstream in(err);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WEXITSTATUS(status), ss.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> header_of(const fs::path& csv) {
    std::ifstream in(csv);
    REQUIRE(in.good());
    std::string line;
    std::getline(in, line);
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    return cols;
}

std::size_t line_count(const fs::path& csv) {
    std::ifstream in(csv);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) ++n;
    return n;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    return dir;
}

void write_config(const fs::path& path, const std::string& body) {
    std::ofstream out(path);
    out << body;
}

}  // namespace

TEST_CASE("simulate writes every documented artifact deterministically") {
    const fs::path dir = fresh_dir("abf_cli_sim");
    const fs::path cfg = fs::temp_directory_path() / "abf_cli_sim.toml";
    write_config(cfg, R"([simulate]
n_steps = 2000
snapshot_stride = 500
observables = ["one", "cos_z"]
seed = 11
)");
    const auto res = run_cli("simulate --config " + cfg.string() + " --out " + dir.string(), "sim");
    CHECK(res.exit_code == 0);

    CHECK(header_of(dir / "bias_snapshots.csv") ==
          std::vector<std::string>{"time", "node", "z1", "A", "dA1"});
    CHECK(header_of(dir / "histogram.csv") == std::vector<std::string>{"cell", "mass"});
    CHECK(header_of(dir / "diagnostics.csv") ==
          std::vector<std::string>{"time", "c0_error", "w12_error", "flat_histogram_tv"});
    CHECK(header_of(dir / "accumulator.csv") ==
          std::vector<std::string>{"node", "z1", "denominator", "num1"});
    CHECK(line_count(dir / "histogram.csv") == 65);  // header + 64 cells

    const json estimates = json::parse(slurp(dir / "estimates.json"));
    CHECK(estimates.at("one").at("value").get<double>() == 1.0);
    CHECK(estimates.contains("cos_z"));

    const json summary = json::parse(slurp(dir / "summary.json"));
    CHECK(summary.at("n_steps").get<long long>() == 2000);
    CHECK(summary.contains("flat_histogram_tv"));

    const json meta = json::parse(slurp(dir / "run_meta.json"));
    CHECK(meta.at("command").get<std::string>() == "simulate");

    // histogram masses sum to one
    double mass = 0.0;
    std::ifstream hist(dir / "histogram.csv");
    std::string line;
    std::getline(hist, line);
    while (std::getline(hist, line)) {
        mass += std::stod(line.substr(line.find(',') + 1));
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));

    // re-running reproduces byte-identical bodies (run_meta carries the clock)
    const fs::path dir2 = fresh_dir("abf_cli_sim2");
    const auto res2 = run_cli("simulate --config " + cfg.string() + " --out " + dir2.string(), "sim2");
    CHECK(res2.exit_code == 0);
    for (const char* name : {"bias_snapshots.csv", "histogram.csv", "diagnostics.csv",
                             "accumulator.csv", "estimates.json", "summary.json",
                             "config_resolved.toml"}) {
        CHECK(slurp(dir / name) == slurp(dir2 / name));
    }
}

TEST_CASE("missing config file exits 2 and names the path") {
    const auto res = run_cli("simulate --config /nonexistent/missing.toml", "missing");
    CHECK(res.exit_code == 2);
    CHECK(res.stderr_text.find("/nonexistent/missing.toml") != std::string::npos);
}

TEST_CASE("overrides shorten the run but keep the schema") {
    const fs::path dir = fresh_dir("abf_cli_override");
    const auto res =
        run_cli("simulate --override n_steps=1000 --override snapshot_stride=250 --out " +
                    dir.string(),
                "override");
    CHECK(res.exit_code == 0);
    const json summary = json::parse(slurp(dir / "summary.json"));
    CHECK(summary.at("n_steps").get<long long>() == 1000);
    CHECK(header_of(dir / "bias_snapshots.csv") ==
          std::vector<std::string>{"time", "node", "z1", "A", "dA1"});
}

TEST_CASE("seed flag changes outputs, same seed repeats them") {
    const fs::path d1 = fresh_dir("abf_cli_seed1");
    const fs::path d2 = fresh_dir("abf_cli_seed2");
    const fs::path d3 = fresh_dir("abf_cli_seed3");
    CHECK(run_cli("simulate --override n_steps=500 --seed 1 --out " + d1.string(), "s1").exit_code == 0);
    CHECK(run_cli("simulate --override n_steps=500 --seed 2 --out " + d2.string(), "s2").exit_code == 0);
    CHECK(run_cli("simulate --override n_steps=500 --seed 1 --out " + d3.string(), "s3").exit_code == 0);
    CHECK(slurp(d1 / "histogram.csv") != slurp(d2 / "histogram.csv"));
    CHECK(slurp(d1 / "histogram.csv") == slurp(d3 / "histogram.csv"));
}

TEST_CASE("fixed-point emits the sweep table and slope") {
    const fs::path dir = fresh_dir("abf_cli_fp");
    const auto res = run_cli(
        "fixed-point --override \"epsilons=[0.2, 0.1]\" --override contraction_trials=5 --out " +
            dir.string(),
        "fp");
    CHECK(res.exit_code == 0);
    CHECK(header_of(dir / "fixedpoint.csv") ==
          std::vector<std::string>{"epsilon", "iterations", "w12_error", "w14_error", "c0_error",
                                   "contraction", "non_contraction"});
    CHECK(line_count(dir / "fixedpoint.csv") == 3);
    const json summary = json::parse(slurp(dir / "summary.json"));
    CHECK(summary.contains("w12_loglog_slope"));
    CHECK(summary.at("rows").size() == 2);
}

TEST_CASE("fixed-point rejects an empty epsilon list") {
    const auto res = run_cli("fixed-point --override \"epsilons=[]\"", "fpempty");
    CHECK(res.exit_code == 2);
}

TEST_CASE("flow reports the exponential rate; equilibrium start stays put") {
    const fs::path dir = fresh_dir("abf_cli_flow");
    const auto res = run_cli("flow --override epsilon=0.1 --out " + dir.string(), "flow");
    CHECK(res.exit_code == 0);
    const json summary = json::parse(slurp(dir / "summary.json"));
    CHECK(summary.at("r2").get<double>() > 0.99);
    CHECK(summary.at("rate").get<double>() < 0.0);
    CHECK(summary.at("final_distance").get<double>() < 1e-6);
    CHECK(summary.at("mass_error").get<double>() < 1e-9);

    const fs::path dir2 = fresh_dir("abf_cli_floweq");
    const auto res2 = run_cli(
        "flow --override epsilon=0.1 --override start=equilibrium --override T=2.0 --out " +
            dir2.string(),
        "floweq");
    CHECK(res2.exit_code == 0);
    std::ifstream csv(dir2 / "flow.csv");
    std::string line;
    std::getline(csv, line);
    CHECK(line == "t,l2_distance");
    while (std::getline(csv, line)) {
        const double dist = std::stod(line.substr(line.find(',') + 1));
        CHECK(dist <= 1e-9);
    }
    CHECK(run_cli("flow --override dt=1.0", "flowdt").exit_code == 2);  // outside dt <= 0.1
}

TEST_CASE("verify passes on defaults and fails on bad configurations") {
    const fs::path dir = fresh_dir("abf_cli_verify");
    const fs::path cfg = fs::temp_directory_path() / "abf_cli_verify.toml";
    // trimmed trial counts keep the suite quick; thresholds are untouched
    write_config(cfg, R"([verify]
trials = 10
epsilons = [0.4, 0.2, 0.1]
)");
    const auto res = run_cli("verify --config " + cfg.string() + " --out " + dir.string(), "verify");
    CHECK(res.exit_code == 0);
    const json report = json::parse(slurp(dir / "verify.json"));
    CHECK(report.at("all_pass").get<bool>());
    for (const auto& check : report.at("checks")) CHECK(check.at("pass").get<bool>());

    // under-resolved kernel grid: the documented failure mode, exit 1
    const fs::path dir2 = fresh_dir("abf_cli_verify_bad");
    const fs::path cfg2 = fs::temp_directory_path() / "abf_cli_verify_bad.toml";
    write_config(cfg2, R"([kernel]
epsilon = 0.025

[verify]
kernel_grid = 16
trials = 5
epsilons = [0.025]
)");
    const auto res2 =
        run_cli("verify --config " + cfg2.string() + " --out " + dir2.string(), "verifybad");
    CHECK(res2.exit_code == 1);
    const json report2 = json::parse(slurp(dir2 / "verify.json"));
    CHECK_FALSE(report2.at("all_pass").get<bool>());

    // p = 1 Sobolev request is rejected at parse time
    const auto res3 = run_cli("verify --override sobolev_p=1", "verifyp1");
    CHECK(res3.exit_code == 2);
}

TEST_CASE("oracle dump matches the documented schema") {
    const fs::path dir = fresh_dir("abf_cli_oracle");
    const auto res = run_cli("oracle --out " + dir.string(), "oracle");
    CHECK(res.exit_code == 0);
    CHECK(header_of(dir / "oracle.csv") ==
          std::vector<std::string>{"node", "z1", "a_star", "a_star_centered", "grad1"});
    CHECK(line_count(dir / "oracle.csv") == 65);
    const json summary = json::parse(slurp(dir / "summary.json"));
    CHECK(summary.contains("mean_a_star"));
}

TEST_CASE("config_resolved round-trips through the parser") {
    const fs::path dir = fresh_dir("abf_cli_roundtrip");
    CHECK(run_cli("oracle --out " + dir.string(), "rt").exit_code == 0);
    const fs::path dir2 = fresh_dir("abf_cli_roundtrip2");
    CHECK(run_cli("oracle --config " + (dir / "config_resolved.toml").string() + " --out " +
                      dir2.string(),
                  "rt2")
              .exit_code == 0);
    CHECK(slurp(dir / "config_resolved.toml") == slurp(dir2 / "config_resolved.toml"));
}

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "abf/sampler.hpp"

namespace abf {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat "section.key = value" store for the TOML-style config files. Values
/// keep their raw text; typing happens on access. Lists use [a, b, c].
class ConfigMap {
public:
    static ConfigMap parse_file(const std::string& path);
    static ConfigMap parse_string(const std::string& text);

    std::string emit() const;

    bool has(const std::string& key) const;
    void set(const std::string& key, const std::string& raw);

    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::vector<double> get_double_list(const std::string& key, std::vector<double> fallback) const;
    std::vector<std::string> get_string_list(const std::string& key,
                                             std::vector<std::string> fallback) const;

    /// Key-set/value equality (section grouping and order are immaterial).
    bool operator==(const ConfigMap& other) const;

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

private:
    const std::string* find(const std::string& key) const;
    std::vector<std::pair<std::string, std::string>> entries_;
};

/// Typed, validated experiment configuration for every CLI subcommand.
struct ExperimentConfig {
    PotentialSpec potential = PotentialSpec::coupled_well(2.0, 1.0, 0.5);
    double epsilon = 0.2;
    int grid_size = 64;
    int oracle_gy = 256;

    SimConfig sim;
    std::string sim_reference = "none";  // none | fixed_point | a_star

    std::vector<double> fp_epsilons = {0.4, 0.2, 0.1, 0.05, 0.025};
    double fp_tol = 1e-12;
    int fp_max_iter = 200;
    int fp_starts = 1;
    double fp_start_radius = 1.0;
    double contraction_radius = 1.0;
    int contraction_trials = 20;

    double flow_T = 20.0;
    double flow_dt = 0.01;
    std::string flow_start = "uniform";  // uniform | equilibrium

    double verify_sobolev_p = 2.0;
    int verify_kernel_grid = 1024;
    std::vector<double> verify_epsilons = {0.4, 0.2, 0.1, 0.05};
    int verify_trials = 50;

    int threads = 1;

    static ExperimentConfig from_map(const ConfigMap& map);
    ConfigMap to_map() const;
};

}  // namespace abf

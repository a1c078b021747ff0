#include "abf/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace abf {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
}

std::vector<std::string> split_list(const std::string& raw, const std::string& key) {
    const std::string t = trim(raw);
    if (t.size() < 2 || t.front() != '[' || t.back() != ']') {
        throw ConfigError("config: key '" + key + "' is not a list: " + raw);
    }
    std::vector<std::string> items;
    std::string inner = t.substr(1, t.size() - 2);
    std::stringstream ss(inner);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

double to_double(const std::string& raw, const std::string& key) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(raw, &pos);
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' is not a number: " + raw);
    }
    if (pos != raw.size()) throw ConfigError("config: key '" + key + "' is not a number: " + raw);
    return v;
}

long long to_int(const std::string& raw, const std::string& key) {
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(raw, &pos);
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' is not an integer: " + raw);
    }
    if (pos != raw.size()) {
        // allow integral values written as 1e6
        const double d = to_double(raw, key);
        v = static_cast<long long>(d);
        if (static_cast<double>(v) != d) {
            throw ConfigError("config: key '" + key + "' is not an integer: " + raw);
        }
    }
    return v;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

ConfigMap ConfigMap::parse_string(const std::string& text) {
    ConfigMap map;
    std::stringstream ss(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("config: malformed section header at line " + std::to_string(lineno));
            }
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) {
                throw ConfigError("config: empty section name at line " + std::to_string(lineno));
            }
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: expected key = value at line " + std::to_string(lineno));
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError("config: empty key or value at line " + std::to_string(lineno));
        }
        map.set(section.empty() ? key : section + "." + key, value);
    }
    return map;
}

ConfigMap ConfigMap::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
}

std::string ConfigMap::emit() const {
    // group by section, first-appearance order
    std::vector<std::string> sections;
    for (const auto& [key, value] : entries_) {
        const std::string sec = key.substr(0, key.rfind('.'));
        if (std::find(sections.begin(), sections.end(), sec) == sections.end()) {
            sections.push_back(sec);
        }
    }
    std::string out;
    for (const auto& sec : sections) {
        out += "[" + sec + "]\n";
        for (const auto& [key, value] : entries_) {
            if (key.substr(0, key.rfind('.')) == sec) {
                out += key.substr(key.rfind('.') + 1) + " = " + value + "\n";
            }
        }
        out += "\n";
    }
    return out;
}

const std::string* ConfigMap::find(const std::string& key) const {
    for (const auto& [k, v] : entries_) {
        if (k == key) return &v;
    }
    return nullptr;
}

bool ConfigMap::has(const std::string& key) const { return find(key) != nullptr; }

void ConfigMap::set(const std::string& key, const std::string& raw) {
    if (key.find('.') == std::string::npos) {
        throw ConfigError("config: keys must be section-qualified: " + key);
    }
    for (auto& [k, v] : entries_) {
        if (k == key) {
            v = raw;
            return;
        }
    }
    entries_.emplace_back(key, raw);
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
    const std::string* raw = find(key);
    return raw == nullptr ? fallback : to_double(*raw, key);
}

long long ConfigMap::get_int(const std::string& key, long long fallback) const {
    const std::string* raw = find(key);
    return raw == nullptr ? fallback : to_int(*raw, key);
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
    const std::string* raw = find(key);
    if (raw == nullptr) return fallback;
    if (*raw == "true") return true;
    if (*raw == "false") return false;
    throw ConfigError("config: key '" + key + "' is not a bool: " + *raw);
}

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) const {
    const std::string* raw = find(key);
    return raw == nullptr ? fallback : unquote(*raw);
}

std::vector<double> ConfigMap::get_double_list(const std::string& key,
                                               std::vector<double> fallback) const {
    const std::string* raw = find(key);
    if (raw == nullptr) return fallback;
    std::vector<double> out;
    for (const auto& item : split_list(*raw, key)) out.push_back(to_double(item, key));
    return out;
}

std::vector<std::string> ConfigMap::get_string_list(const std::string& key,
                                                    std::vector<std::string> fallback) const {
    const std::string* raw = find(key);
    if (raw == nullptr) return fallback;
    std::vector<std::string> out;
    for (const auto& item : split_list(*raw, key)) out.push_back(unquote(item));
    return out;
}

bool ConfigMap::operator==(const ConfigMap& other) const {
    std::map<std::string, std::string> a(entries_.begin(), entries_.end());
    std::map<std::string, std::string> b(other.entries_.begin(), other.entries_.end());
    return a == b;
}

namespace {

PotentialSpec potential_from(const ConfigMap& map) {
    const std::string family = map.get_string("potential.family", "coupled_well");
    const double a = map.get_double("potential.a", 2.0);
    const double b = map.get_double("potential.b", 1.0);
    const double c = map.get_double("potential.c", 0.5);
    const std::string ext = map.get_string("potential.extension", "none");
    const double ext_coef = map.get_double("potential.extension_coef", 0.0);

    PotentialFamily fam;
    if (family == "separable") {
        fam = PotentialFamily::separable;
    } else if (family == "coupled_well") {
        fam = PotentialFamily::coupled_well;
    } else if (family == "z_only") {
        fam = PotentialFamily::z_only;
    } else {
        throw ConfigError("config: unknown potential family: " + family);
    }
    ProductExtension pe;
    if (ext == "none") {
        pe = ProductExtension::none;
    } else if (ext == "extra_y") {
        pe = ProductExtension::extra_y;
    } else if (ext == "extra_z") {
        pe = ProductExtension::extra_z;
    } else {
        throw ConfigError("config: unknown potential extension: " + ext);
    }
    return {fam, a, b, c, pe, ext_coef};
}

std::string extension_name(ProductExtension e) {
    switch (e) {
        case ProductExtension::none: return "none";
        case ProductExtension::extra_y: return "extra_y";
        case ProductExtension::extra_z: return "extra_z";
    }
    throw std::logic_error("unreachable");
}

std::string doubles_raw(const std::vector<double>& items) {
    std::string out = "[";
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += ", ";
        out += fmt_double(items[i]);
    }
    return out + "]";
}

std::string strings_raw(const std::vector<std::string>& items) {
    std::string out = "[";
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += ", ";
        out += "\"" + items[i] + "\"";
    }
    return out + "]";
}

}  // namespace

ExperimentConfig ExperimentConfig::from_map(const ConfigMap& map) {
    ExperimentConfig cfg;
    cfg.potential = potential_from(map);
    cfg.epsilon = map.get_double("kernel.epsilon", 0.2);
    cfg.grid_size = static_cast<int>(map.get_int("grid.size", 64));
    cfg.oracle_gy = static_cast<int>(map.get_int("oracle.g_y", 256));

    cfg.sim.potential = cfg.potential;
    cfg.sim.epsilon = cfg.epsilon;
    cfg.sim.grid_size = cfg.grid_size;
    cfg.sim.step = map.get_double("simulate.step", 1e-3);
    cfg.sim.n_steps = map.get_int("simulate.n_steps", 1000000);
    cfg.sim.bias_refresh_stride = map.get_int("simulate.bias_refresh_stride", 1);
    cfg.sim.seed = static_cast<std::uint64_t>(map.get_int("simulate.seed", 1));
    cfg.sim.initial = map.get_double_list("simulate.initial", {});
    cfg.sim.observables = map.get_string_list("simulate.observables", {"cos_z"});
    cfg.sim.snapshot_stride = map.get_int("simulate.snapshot_stride", 0);
    cfg.sim.replica_count = static_cast<int>(map.get_int("simulate.replica_count", 1));
    cfg.sim.freeze_after_steps = map.get_int("simulate.freeze_after_steps", -1);
    const std::string eval = map.get_string("simulate.bias_eval", "spectral");
    if (eval == "spectral") {
        cfg.sim.bias_eval = BiasEvalMode::spectral;
    } else if (eval == "interpolated") {
        cfg.sim.bias_eval = BiasEvalMode::interpolated;
    } else {
        throw ConfigError("config: simulate.bias_eval must be spectral or interpolated");
    }
    cfg.sim_reference = map.get_string("simulate.reference", "none");
    if (cfg.sim_reference != "none" && cfg.sim_reference != "fixed_point" &&
        cfg.sim_reference != "a_star") {
        throw ConfigError("config: simulate.reference must be none, fixed_point or a_star");
    }

    cfg.fp_epsilons = map.get_double_list("fixed_point.epsilons", cfg.fp_epsilons);
    cfg.fp_tol = map.get_double("fixed_point.tol", 1e-12);
    cfg.fp_max_iter = static_cast<int>(map.get_int("fixed_point.max_iter", 200));
    cfg.fp_starts = static_cast<int>(map.get_int("fixed_point.starts", 1));
    cfg.fp_start_radius = map.get_double("fixed_point.start_radius", 1.0);
    cfg.contraction_radius = map.get_double("fixed_point.contraction_radius", 1.0);
    cfg.contraction_trials = static_cast<int>(map.get_int("fixed_point.contraction_trials", 20));

    cfg.flow_T = map.get_double("flow.T", 20.0);
    cfg.flow_dt = map.get_double("flow.dt", 0.01);
    cfg.flow_start = map.get_string("flow.start", "uniform");
    if (cfg.flow_start != "uniform" && cfg.flow_start != "equilibrium") {
        throw ConfigError("config: flow.start must be uniform or equilibrium");
    }

    cfg.verify_sobolev_p = map.get_double("verify.sobolev_p", 2.0);
    cfg.verify_kernel_grid = static_cast<int>(map.get_int("verify.kernel_grid", 1024));
    cfg.verify_epsilons = map.get_double_list("verify.epsilons", cfg.verify_epsilons);
    cfg.verify_trials = static_cast<int>(map.get_int("verify.trials", 50));

    cfg.threads = static_cast<int>(map.get_int("run.threads", 1));

    // validation beyond per-module checks
    if (!(cfg.epsilon > 0.0) || cfg.epsilon > 1.0) {
        throw ConfigError("config: kernel.epsilon must lie in (0, 1]");
    }
    if (cfg.grid_size < 2) throw ConfigError("config: grid.size must be >= 2");
    if (cfg.oracle_gy < 32) throw ConfigError("config: oracle.g_y must be >= 32");
    if (cfg.fp_epsilons.empty()) throw ConfigError("config: fixed_point.epsilons must be nonempty");
    for (double e : cfg.fp_epsilons) {
        if (!(e > 0.0) || e > 1.0) {
            throw ConfigError("config: fixed_point.epsilons entries must lie in (0, 1]");
        }
    }
    if (!(cfg.verify_sobolev_p >= 2.0)) {
        throw ConfigError("config: verify.sobolev_p must be >= 2 (W^{1,p} is defined for p in [2, inf))");
    }
    if (cfg.threads < 1) throw ConfigError("config: run.threads must be >= 1");
    if (!(cfg.flow_dt > 0.0) || cfg.flow_dt > 0.1) {
        throw ConfigError("config: flow.dt must lie in (0, 0.1]");
    }
    try {
        cfg.sim.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

ConfigMap ExperimentConfig::to_map() const {
    ConfigMap map;
    map.set("potential.family", potential.family_name());
    map.set("potential.a", fmt_double(potential.a()));
    map.set("potential.b", fmt_double(potential.b()));
    map.set("potential.c", fmt_double(potential.c()));
    map.set("potential.extension", extension_name(potential.extension()));
    map.set("potential.extension_coef", fmt_double(potential.extension_coef()));
    map.set("kernel.epsilon", fmt_double(epsilon));
    map.set("grid.size", std::to_string(grid_size));
    map.set("oracle.g_y", std::to_string(oracle_gy));

    map.set("simulate.step", fmt_double(sim.step));
    map.set("simulate.n_steps", std::to_string(sim.n_steps));
    map.set("simulate.bias_refresh_stride", std::to_string(sim.bias_refresh_stride));
    map.set("simulate.seed", std::to_string(sim.seed));
    if (!sim.initial.empty()) map.set("simulate.initial", doubles_raw(sim.initial));
    map.set("simulate.observables", strings_raw(sim.observables));
    map.set("simulate.snapshot_stride", std::to_string(sim.snapshot_stride));
    map.set("simulate.replica_count", std::to_string(sim.replica_count));
    map.set("simulate.freeze_after_steps", std::to_string(sim.freeze_after_steps));
    map.set("simulate.bias_eval",
            sim.bias_eval == BiasEvalMode::spectral ? "spectral" : "interpolated");
    map.set("simulate.reference", sim_reference);

    map.set("fixed_point.epsilons", doubles_raw(fp_epsilons));
    map.set("fixed_point.tol", fmt_double(fp_tol));
    map.set("fixed_point.max_iter", std::to_string(fp_max_iter));
    map.set("fixed_point.starts", std::to_string(fp_starts));
    map.set("fixed_point.start_radius", fmt_double(fp_start_radius));
    map.set("fixed_point.contraction_radius", fmt_double(contraction_radius));
    map.set("fixed_point.contraction_trials", std::to_string(contraction_trials));

    map.set("flow.T", fmt_double(flow_T));
    map.set("flow.dt", fmt_double(flow_dt));
    map.set("flow.start", flow_start);

    map.set("verify.sobolev_p", fmt_double(verify_sobolev_p));
    map.set("verify.kernel_grid", std::to_string(verify_kernel_grid));
    map.set("verify.epsilons", doubles_raw(verify_epsilons));
    map.set("verify.trials", std::to_string(verify_trials));

    map.set("run.threads", std::to_string(threads));
    return map;
}

}  // namespace abf

#include "abf/sampler.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "abf/rng.hpp"

namespace abf {

namespace {

constexpr int kBatchCount = 32;

// Observables are resolved to (operation, coordinate) once per run.
enum class ObsKind { one, cos_coord, sin_coord, cos2_coord };

struct CompiledObservable {
    std::string name;
    ObsKind kind;
    int coord;  // index into the full coordinate vector
};

// name -> kind plus which coordinate ("y"/"z" refer to y1/z1).
bool parse_observable(const std::string& name, ObsKind& kind, std::string& which) {
    if (name == "one") {
        kind = ObsKind::one;
        which = "y";
        return true;
    }
    const auto try_prefix = [&](const char* prefix, ObsKind k) {
        const std::size_t n = std::string(prefix).size();
        if (name.size() == n + 1 && name.rfind(prefix, 0) == 0 &&
            (name[n] == 'y' || name[n] == 'z')) {
            kind = k;
            which = name.substr(n);
            return true;
        }
        return false;
    };
    return try_prefix("cos_", ObsKind::cos_coord) || try_prefix("sin_", ObsKind::sin_coord) ||
           try_prefix("cos_2", ObsKind::cos2_coord);
}

CompiledObservable compile_observable(const std::string& name, int d, int m) {
    ObsKind kind;
    std::string which;
    if (!parse_observable(name, kind, which)) {
        throw std::invalid_argument("unknown observable: " + name);
    }
    const int coord = which == "y" ? 0 : d - m;
    return {name, kind, coord};
}

double eval_compiled(const CompiledObservable& obs, std::span<const double> coords) {
    switch (obs.kind) {
        case ObsKind::one: return 1.0;
        case ObsKind::cos_coord: return std::cos(coords[static_cast<std::size_t>(obs.coord)]);
        case ObsKind::sin_coord: return std::sin(coords[static_cast<std::size_t>(obs.coord)]);
        case ObsKind::cos2_coord: return std::cos(2.0 * coords[static_cast<std::size_t>(obs.coord)]);
    }
    throw std::logic_error("unreachable");
}

struct Replica {
    std::vector<double> coords;
    BiasAccumulator acc;
    GridFunction hist;
    CounterRng rng;
};

double tv_to_uniform(const GridFunction& hist, double total) {
    const double uniform = 1.0 / static_cast<double>(hist.nodes());
    double tv = 0.0;
    for (std::size_t i = 0; i < hist.nodes(); ++i) {
        tv += std::fabs(hist.value(i) / total - uniform);
    }
    return 0.5 * tv;
}

}  // namespace

double evaluate_observable(const std::string& name, const TorusPoint& x) {
    const auto obs = compile_observable(name, x.dim(), x.zdim());
    return eval_compiled(obs, x.coords);
}

bool observable_known(const std::string& name) {
    ObsKind kind;
    std::string which;
    return parse_observable(name, kind, which);
}

void SimConfig::validate() const {
    if (n_steps < 1) throw std::invalid_argument("SimConfig: n_steps must be >= 1");
    if (!(step > 0.0)) throw std::invalid_argument("SimConfig: step must be > 0");
    if (bias_refresh_stride < 1) throw std::invalid_argument("SimConfig: stride must be >= 1");
    if (replica_count < 1) throw std::invalid_argument("SimConfig: replica_count must be >= 1");
    if (grid_size < 2) throw std::invalid_argument("SimConfig: grid size must be >= 2");
    if (snapshot_stride < 0) throw std::invalid_argument("SimConfig: snapshot_stride must be >= 0");
    if (step * potential.max_grad_norm() >= two_pi / 4.0) {
        throw std::invalid_argument("SimConfig: step too large: h * max|grad V| must stay below pi/2");
    }
    if (!initial.empty() && initial.size() != static_cast<std::size_t>(potential.dim())) {
        throw std::invalid_argument("SimConfig: initial point dimension mismatch");
    }
    for (const auto& name : observables) {
        if (!observable_known(name)) throw std::invalid_argument("SimConfig: unknown observable " + name);
    }
}

RunRecord::RunRecord(PeriodicGrid grid, KernelParams kernel)
    : histogram(grid),
      accumulator(grid, kernel),
      final_bias(BiasFunction::zero(grid)) {}

TorusPoint em_step(const TorusPoint& x, const PotentialSpec& spec, const BiasFunction& A, double h,
                   std::span<const double> noise) {
    const int d = spec.dim();
    const int m = spec.zdim();
    if (x.dim() != d || x.zdim() != m) throw std::invalid_argument("em_step: dimension mismatch");
    if (noise.size() != static_cast<std::size_t>(d)) {
        throw std::invalid_argument("em_step: noise must have d components");
    }
    std::vector<double> gy(static_cast<std::size_t>(d - m));
    std::vector<double> gz(static_cast<std::size_t>(m));
    std::vector<double> ga(static_cast<std::size_t>(m));
    spec.grad_y_at(x.coords, gy);
    spec.grad_z_at(x.coords, gz);
    eval_bias_gradient(A, x.z(), ga);

    const double c = std::sqrt(2.0 * h);
    std::vector<double> out(static_cast<std::size_t>(d));
    for (int i = 0; i < d - m; ++i) {
        const double drift = -gy[static_cast<std::size_t>(i)];
        if (!std::isfinite(drift)) throw std::runtime_error("em_step: non-finite drift");
        out[static_cast<std::size_t>(i)] = wrap(x.coords[static_cast<std::size_t>(i)] + h * drift + c * noise[static_cast<std::size_t>(i)]);
    }
    for (int j = 0; j < m; ++j) {
        const double drift = -gz[static_cast<std::size_t>(j)] + ga[static_cast<std::size_t>(j)];
        if (!std::isfinite(drift)) throw std::runtime_error("em_step: non-finite drift");
        const std::size_t i = static_cast<std::size_t>(d - m + j);
        out[i] = wrap(x.coords[i] + h * drift + c * noise[i]);
    }
    return TorusPoint(std::move(out), m);
}

RunRecord run(const SimConfig& config, const BiasFunction* reference) {
    config.validate();
    const PotentialSpec& spec = config.potential;
    const int d = spec.dim();
    const int m = spec.zdim();
    const int yd = d - m;
    const double h = config.step;
    const long n_steps = config.n_steps;

    PeriodicGrid grid(m, config.grid_size);
    KernelParams kernel(config.epsilon, m);
    if (reference != nullptr && !(reference->grid() == grid)) {
        throw std::invalid_argument("run: reference bias grid mismatch");
    }

    std::vector<CompiledObservable> observables;
    for (const auto& name : config.observables) observables.push_back(compile_observable(name, d, m));

    RunRecord record(grid, kernel);
    std::vector<ReweightedSums*> sums_of;
    for (const auto& obs : observables) {
        auto& sums = record.reweighted[obs.name];
        sums.batch_num.assign(kBatchCount, 0.0);
        sums.batch_den.assign(kBatchCount, 0.0);
        sums_of.push_back(&sums);
    }

    std::vector<double> start(static_cast<std::size_t>(d), 0.0);
    if (!config.initial.empty()) {
        for (std::size_t i = 0; i < start.size(); ++i) start[i] = wrap(config.initial[i]);
    }

    std::vector<Replica> replicas;
    replicas.reserve(static_cast<std::size_t>(config.replica_count));
    for (int r = 0; r < config.replica_count; ++r) {
        replicas.push_back(Replica{start, BiasAccumulator(grid, kernel), GridFunction(grid),
                                   CounterRng(config.seed, static_cast<std::uint64_t>(r))});
    }

    BiasFunction bias = BiasFunction::zero(grid);
    GridFunction bias_grad(grid, m);  // nodal gradient, kept for interp mode and diagnostics
    const long snap_stride =
        config.snapshot_stride > 0 ? config.snapshot_stride : std::max<long>(1, n_steps / 100);

    record.snapshots.push_back({0.0, bias});

    const auto merged_accumulator = [&]() {
        BiasAccumulator total = replicas[0].acc;
        for (std::size_t r = 1; r < replicas.size(); ++r) total.merge_in(replicas[r].acc);
        return total;
    };
    const auto merged_histogram = [&]() {
        GridFunction total = replicas[0].hist;
        for (std::size_t r = 1; r < replicas.size(); ++r) {
            for (std::size_t i = 0; i < total.nodes(); ++i) total.value(i) += replicas[r].hist.value(i);
        }
        return total;
    };

    std::vector<double> gy(static_cast<std::size_t>(yd));
    std::vector<double> gz(static_cast<std::size_t>(m));
    std::vector<double> ga(static_cast<std::size_t>(m));
    std::vector<double> noise(static_cast<std::size_t>(d));
    const double step_noise = std::sqrt(2.0 * h);

    for (long n = 0; n < n_steps; ++n) {
        // 1. accumulate the current state of every replica (weight h); the very
        //    first pass realizes mu_0 = delta_x0.
        for (auto& rep : replicas) {
            std::span<const double> z(rep.coords.data() + yd, static_cast<std::size_t>(m));
            spec.grad_z_at(rep.coords, gz);
            rep.acc.accumulate_z(z, gz, h);
            rep.hist.value(grid.cell_of(z)) += h;
        }

        // 2. refresh A_t = A_eps[mu_t] (includes the sample just added).
        const bool frozen = config.freeze_after_steps >= 0 && n >= config.freeze_after_steps;
        if (!frozen && n % config.bias_refresh_stride == 0) {
            bias = replicas.size() == 1
                       ? project_gradient(replicas[0].acc.force_estimate())
                       : project_gradient(merged_accumulator().force_estimate());
            // interp stepping needs the nodal gradient every refresh; the
            // spectral path defers it to snapshot times (diagnostics only)
            if (config.bias_eval == BiasEvalMode::interpolated) {
                bias_grad = gradient_of(bias);
                record.max_grad_bias = std::max(record.max_grad_bias, bias_grad.max_abs());
            }
        }

        // 3. reweighting sums at the current bias.
        if (!observables.empty()) {
            const int batch = static_cast<int>(static_cast<long long>(n) * kBatchCount / n_steps);
            for (auto& rep : replicas) {
                std::span<const double> z(rep.coords.data() + yd, static_cast<std::size_t>(m));
                const double w = std::exp(-eval_bias(bias, z)) * h;
                for (std::size_t o = 0; o < observables.size(); ++o) {
                    auto& sums = *sums_of[o];
                    const double phi = eval_compiled(observables[o], rep.coords);
                    sums.num += phi * w;
                    sums.den += w;
                    sums.batch_num[static_cast<std::size_t>(batch)] += phi * w;
                    sums.batch_den[static_cast<std::size_t>(batch)] += w;
                }
            }
        }

        // 4. diagnostics and snapshots at t = (n+1) h.
        if ((n + 1) % snap_stride == 0 || n + 1 == n_steps) {
            const double t = static_cast<double>(n + 1) * h;
            GridFunction hist = merged_histogram();
            if (config.bias_eval == BiasEvalMode::spectral) {
                bias_grad = gradient_of(bias);
                record.max_grad_bias = std::max(record.max_grad_bias, bias_grad.max_abs());
            }
            DiagnosticsRow row{};
            row.time = t;
            row.flat_histogram_tv = tv_to_uniform(hist, static_cast<double>(n + 1) * h * replicas.size());
            row.grad_max = bias_grad.max_abs();
            if (reference != nullptr) {
                const BiasFunction diff = bias_difference(bias, *reference);
                row.c0_error = lp_norm(diff.values(), std::numeric_limits<double>::infinity());
                row.w12_error = sobolev_norm(diff, 2.0);
            } else {
                row.c0_error = lp_norm(bias.values(), std::numeric_limits<double>::infinity());
                row.w12_error = sobolev_norm(bias, 2.0);
            }
            record.diagnostics.push_back(row);
            record.snapshots.push_back({t, bias});
        }

        // 5. Euler-Maruyama move of every replica.
        for (auto& rep : replicas) {
            rep.rng.normal_vec(static_cast<std::uint64_t>(n), noise);
            spec.grad_y_at(rep.coords, gy);
            spec.grad_z_at(rep.coords, gz);
            if (config.bias_eval == BiasEvalMode::spectral) {
                eval_bias_gradient(bias, {rep.coords.data() + yd, static_cast<std::size_t>(m)}, ga);
            } else {
                eval_gradient_interpolated(bias_grad, {rep.coords.data() + yd, static_cast<std::size_t>(m)}, ga);
            }
            for (int i = 0; i < yd; ++i) {
                rep.coords[static_cast<std::size_t>(i)] =
                    wrap(rep.coords[static_cast<std::size_t>(i)] - h * gy[static_cast<std::size_t>(i)] +
                         step_noise * noise[static_cast<std::size_t>(i)]);
            }
            for (int j = 0; j < m; ++j) {
                const std::size_t i = static_cast<std::size_t>(yd + j);
                rep.coords[i] = wrap(rep.coords[i] - h * gz[static_cast<std::size_t>(j)] +
                                     h * ga[static_cast<std::size_t>(j)] +
                                     step_noise * noise[i]);
            }
        }
    }

    record.accumulator = merged_accumulator();
    if (!(config.freeze_after_steps >= 0)) {
        // final bias reflects the complete occupation measure even for stride > 1
        bias = project_gradient(record.accumulator.force_estimate());
    }
    record.final_bias = bias;
    record.final_time = static_cast<double>(n_steps) * h;

    GridFunction hist = merged_histogram();
    const double total = static_cast<double>(n_steps) * h * static_cast<double>(replicas.size());
    for (std::size_t i = 0; i < hist.nodes(); ++i) hist.value(i) /= total;
    record.histogram = hist;
    return record;
}

double reweighted_estimate(const RunRecord& record, const std::string& observable) {
    const auto it = record.reweighted.find(observable);
    if (it == record.reweighted.end()) {
        throw std::invalid_argument("reweighted_estimate: unknown observable " + observable);
    }
    return it->second.num / it->second.den;
}

EstimateWithError reweighted_estimate_with_error(const RunRecord& record,
                                                 const std::string& observable) {
    const auto it = record.reweighted.find(observable);
    if (it == record.reweighted.end()) {
        throw std::invalid_argument("reweighted_estimate: unknown observable " + observable);
    }
    const auto& s = it->second;
    const double value = s.num / s.den;
    // batch-means error for the ratio estimator
    int used = 0;
    double mean = 0.0;
    std::vector<double> ratios;
    for (std::size_t b = 0; b < s.batch_num.size(); ++b) {
        if (s.batch_den[b] > 0.0) {
            ratios.push_back(s.batch_num[b] / s.batch_den[b]);
            mean += ratios.back();
            ++used;
        }
    }
    if (used < 2) return {value, std::numeric_limits<double>::quiet_NaN()};
    mean /= used;
    double var = 0.0;
    for (double r : ratios) var += (r - mean) * (r - mean);
    var /= static_cast<double>(used - 1);
    return {value, std::sqrt(var / used)};
}

double flat_histogram_distance(const RunRecord& record) {
    if (record.final_time <= 0.0) throw std::runtime_error("flat_histogram_distance: empty histogram");
    const double uniform = 1.0 / static_cast<double>(record.histogram.nodes());
    double tv = 0.0;
    for (std::size_t i = 0; i < record.histogram.nodes(); ++i) {
        tv += std::fabs(record.histogram.value(i) - uniform);
    }
    return 0.5 * tv;
}

}  // namespace abf

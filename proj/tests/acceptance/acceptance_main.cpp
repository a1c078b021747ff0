// Acceptance suite: one quantitative criterion per entry, each printing a
// single [PASS]/[FAIL] line with the measured values. Exit code counts the
// failed criteria. Select one with --criterion N, or run all.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "abf/estimator.hpp"
#include "abf/fixedpoint.hpp"
#include "abf/sampler.hpp"

using namespace abf;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

struct Criterion {
    int id;
    std::string name;
    bool pass;
    std::string detail;
};

PotentialSpec default_potential() { return PotentialSpec::coupled_well(2.0, 1.0, 0.5); }

FreeEnergyOracle default_oracle(int g = 64) {
    return free_energy_reference(default_potential(), PeriodicGrid(1, g), 256);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

// 1. sqrt-eps error law: log-log slope of ||bar A_star - A_inf^eps||_W12 in [0.4, 0.6].
Criterion criterion_sqrt_eps_law() {
    const FreeEnergyOracle oracle = default_oracle();
    const std::vector<double> epsilons{0.4, 0.2, 0.1, 0.05, 0.025};
    std::vector<double> lx, ly;
    std::string rows;
    for (double eps : epsilons) {
        const KernelParams kernel(eps, 1);
        const auto res = picard_iterate(BiasFunction::zero(oracle.grid()), oracle, kernel, 1e-12, 500);
        lx.push_back(std::log(eps));
        ly.push_back(std::log(res.err_w12));
        rows += " err(" + fmt(eps) + ")=" + fmt(res.err_w12);
    }
    const LinearFit fit = linear_fit(lx, ly);
    const bool pass = fit.slope >= 0.4 && fit.slope <= 0.6;
    return {1, "sqrt-eps error law",
            pass, "slope=" + fmt(fit.slope) + " target=[0.4,0.6]" + rows};
}

// 2. uniqueness at eps=0.1 (10 starts, 1e-8), contraction < 1, ratio/sqrt(eps)
//    stable within a factor 2 across {0.4, 0.2, 0.1, 0.05}.
Criterion criterion_uniqueness_contraction() {
    const FreeEnergyOracle oracle = default_oracle();
    const KernelParams kernel(0.1, 1);
    const CounterRng rng(1234, 9);
    double max_dev = 0.0;
    BiasFunction first = picard_iterate(BiasFunction::zero(oracle.grid()), oracle, kernel, 1e-12, 500).a_inf;
    for (int s = 1; s < 10; ++s) {
        const BiasFunction b0 = random_band_limited_bias(oracle.grid(), 1.0, 8, rng, static_cast<std::uint64_t>(s));
        const auto res = picard_iterate(b0, oracle, kernel, 1e-12, 500);
        max_dev = std::max(max_dev, lp_norm(bias_difference(res.a_inf, first).values(), kInf));
    }
    const bool starts_ok = max_dev <= 1e-8;

    const double ratio_01 = contraction_estimate(oracle, kernel, 1.0, 20, 4321);
    const bool contraction_ok = ratio_01 < 1.0;

    std::vector<double> scaled;
    std::string rows;
    for (double eps : {0.4, 0.2, 0.1, 0.05}) {
        const double r = contraction_estimate(oracle, KernelParams(eps, 1), 1.0, 20, 4321);
        scaled.push_back(r / std::sqrt(eps));
        rows += " ratio(" + fmt(eps) + ")=" + fmt(r);
    }
    const double spread = *std::max_element(scaled.begin(), scaled.end()) /
                          *std::min_element(scaled.begin(), scaled.end());
    const bool stable_ok = spread <= 2.0;

    return {2, "fixed-point uniqueness and contraction", starts_ok && contraction_ok && stable_ok,
            "start_dev=" + fmt(max_dev) + " (<=1e-8) contraction(0.1)=" + fmt(ratio_01) +
                " (<1) ratio/sqrt(eps) spread=" + fmt(spread) + " (<=2)" + rows};
}

// 3. F_of_bias vs the d-dimensional quadrature on a 512x512 grid, 5 random B, 1e-8.
Criterion criterion_oracle_equivalence() {
    const FreeEnergyOracle oracle = default_oracle();
    const KernelParams kernel(0.2, 1);
    const CounterRng rng(77, 3);
    double worst = 0.0;
    for (int t = 0; t < 5; ++t) {
        const BiasFunction b = random_band_limited_bias(oracle.grid(), 1.0, 8, rng, static_cast<std::uint64_t>(t));
        const GridFunction f1 = F_of_bias(b, oracle, kernel);
        const GridFunction f2 = direct_force_quadrature(default_potential(), b, kernel, 512);
        for (std::size_t i = 0; i < f1.nodes(); ++i) {
            worst = std::max(worst, std::fabs(f1.value(0, i) - f2.value(0, i)));
        }
    }
    return {3, "oracle equivalence (mean-force identity)", worst <= 1e-8,
            "max|identity - definition|=" + fmt(worst) + " (<=1e-8)"};
}

// 4. projection exactness: closed forms to 1e-10 and idempotence on 100 random biases.
Criterion criterion_projection_exactness() {
    PeriodicGrid g(1, 64);
    double worst_closed = 0.0;

    GridFunction f(g, 1);
    for (std::size_t i = 0; i < g.size(); ++i) f.value(i) = std::cos(g.node_angle(static_cast<int>(i)));
    const BiasFunction a = project_gradient(f);
    for (std::size_t i = 0; i < g.size(); ++i) {
        worst_closed = std::max(worst_closed,
                                std::fabs(a.value(i) - std::sin(g.node_angle(static_cast<int>(i)))));
    }
    worst_closed = std::max(worst_closed,
                            lp_norm(project_gradient(GridFunction(g, 1, 2.7)).values(), kInf));

    PeriodicGrid g2(2, 32);
    GridFunction df(g2, 2);
    std::vector<double> z(2);
    for (std::size_t i = 0; i < g2.size(); ++i) {
        g2.node(i, z);
        df.value(0, i) = -std::sin(z[1]);
        df.value(1, i) = std::sin(z[0]);
    }
    worst_closed = std::max(worst_closed, lp_norm(project_gradient(df).values(), kInf));

    const CounterRng rng(5, 5);
    double worst_idem = 0.0;
    for (int t = 0; t < 100; ++t) {
        const BiasFunction b = random_band_limited_bias(g, 1.0, 16, rng, static_cast<std::uint64_t>(t));
        const BiasFunction back = project_gradient(gradient_of(b));
        worst_idem = std::max(worst_idem, lp_norm(bias_difference(back, b).values(), kInf));
    }
    const bool pass = worst_closed <= 1e-10 && worst_idem <= 1e-10;
    return {4, "projection exactness", pass,
            "closed_forms=" + fmt(worst_closed) + " idempotence=" + fmt(worst_idem) + " (<=1e-10)"};
}

// 5. kernel assumptions: normalization 1e-8; moment/eps within a factor 2 across the sweep.
Criterion criterion_kernel_assumptions() {
    PeriodicGrid g(1, 1024);
    double worst_mass = 0.0;
    std::vector<double> ratios;
    std::string rows;
    for (double eps : {0.4, 0.2, 0.1, 0.05}) {
        const auto rep = check_kernel_assumptions(KernelParams(eps, 1), g);
        worst_mass = std::max(worst_mass, rep.mass_error);
        ratios.push_back(rep.c_k_estimate);
        rows += " m2/eps(" + fmt(eps) + ")=" + fmt(rep.c_k_estimate);
    }
    const double spread = *std::max_element(ratios.begin(), ratios.end()) /
                          *std::min_element(ratios.begin(), ratios.end());
    const bool pass = worst_mass <= 1e-8 && spread <= 2.0;
    return {5, "kernel assumption suite", pass,
            "mass_error=" + fmt(worst_mass) + " (<=1e-8) ratio spread=" + fmt(spread) + " (<=2)" + rows};
}

// 6. |force_estimate| <= max|grad_z V| on 1000 randomized accumulators, zero violations.
Criterion criterion_force_bound() {
    const PotentialSpec pot = default_potential();
    const double bound = pot.max_grad_z_norm();
    const PeriodicGrid grid(1, 64);
    const CounterRng rng(31337, 6);
    long violations = 0;
    std::uint64_t ctr = 0;
    int built = 0;
    std::vector<double> coords(2);
    std::vector<double> gz(1);
    for (double eps : {0.4, 0.2, 0.1, 0.05, 0.025}) {
        const KernelParams kernel(eps, 1);
        for (int t = 0; t < 200; ++t, ++built) {
            BiasAccumulator acc(grid, kernel);
            const int n = 1 + static_cast<int>(rng.uniform(ctr++) * 150);
            for (int s = 0; s < n; ++s) {
                coords[0] = rng.uniform(ctr++) * two_pi;
                coords[1] = rng.uniform(ctr++) * two_pi;
                pot.grad_z_at(coords, gz);
                const double zq[] = {coords[1]};
                acc.accumulate_z(zq, gz, 1e-3 + rng.uniform(ctr++));
            }
            const GridFunction f = acc.force_estimate();
            for (std::size_t i = 0; i < f.nodes(); ++i) {
                if (f.node_norm(i) > bound) ++violations;
            }
        }
    }
    return {6, "uniform force bound", violations == 0,
            "violations=" + std::to_string(violations) + " over " + std::to_string(built) +
                " accumulators (bound " + fmt(bound) + ")"};
}

struct SeedOutcome {
    double early = 0.0;
    double final_err = 0.0;
    double tv_adaptive = 0.0;
    double tv_frozen = 0.0;
};

SimConfig convergence_config(std::uint64_t seed) {
    SimConfig cfg;
    cfg.potential = default_potential();
    cfg.epsilon = 0.2;
    cfg.grid_size = 64;
    cfg.step = 1e-3;
    cfg.n_steps = 10000000;
    cfg.seed = seed;
    cfg.snapshot_stride = cfg.n_steps / 10;
    return cfg;
}

// 7. ||A_t - A_inf||_C0 decays between t_end/10 and t_end and ends below 0.1 ||bar A_star||_C0.
Criterion criterion_sampler_convergence() {
    const FreeEnergyOracle oracle = default_oracle();
    const KernelParams kernel(0.2, 1);
    const BiasFunction a_inf =
        picard_iterate(BiasFunction::zero(oracle.grid()), oracle, kernel, 1e-12, 500).a_inf;
    const double astar_c0 = lp_norm(oracle.a_star_centered(), kInf);

    std::vector<SeedOutcome> outcomes(3);
    std::vector<std::thread> pool;
    for (int s = 0; s < 3; ++s) {
        pool.emplace_back([&, s]() {
            const RunRecord rec = run(convergence_config(static_cast<std::uint64_t>(s) + 1), &a_inf);
            outcomes[static_cast<std::size_t>(s)].early = rec.diagnostics.front().c0_error;
            outcomes[static_cast<std::size_t>(s)].final_err = rec.diagnostics.back().c0_error;
        });
    }
    for (auto& t : pool) t.join();

    bool pass = true;
    std::string rows;
    for (int s = 0; s < 3; ++s) {
        const auto& o = outcomes[static_cast<std::size_t>(s)];
        pass = pass && o.final_err < o.early && o.final_err < 0.1 * astar_c0;
        rows += " seed" + std::to_string(s + 1) + ": " + fmt(o.early) + "->" + fmt(o.final_err);
    }
    return {7, "sampler convergence to the fixed point", pass,
            "threshold=" + fmt(0.1 * astar_c0) + rows};
}

// 8. adaptive TV to uniform beats the frozen-zero-bias baseline for every seed.
Criterion criterion_flat_histogram() {
    std::vector<SeedOutcome> outcomes(3);
    std::vector<std::thread> pool;
    for (int s = 0; s < 3; ++s) {
        pool.emplace_back([&, s]() {
            SimConfig cfg = convergence_config(static_cast<std::uint64_t>(s) + 1);
            const RunRecord adaptive = run(cfg);
            cfg.freeze_after_steps = 0;
            const RunRecord frozen = run(cfg);
            outcomes[static_cast<std::size_t>(s)].tv_adaptive = flat_histogram_distance(adaptive);
            outcomes[static_cast<std::size_t>(s)].tv_frozen = flat_histogram_distance(frozen);
        });
    }
    for (auto& t : pool) t.join();

    bool pass = true;
    std::string rows;
    for (int s = 0; s < 3; ++s) {
        const auto& o = outcomes[static_cast<std::size_t>(s)];
        pass = pass && o.tv_adaptive < o.tv_frozen;
        rows += " seed" + std::to_string(s + 1) + ": " + fmt(o.tv_adaptive) + "<" + fmt(o.tv_frozen);
    }
    return {8, "flat histogram vs frozen baseline", pass, rows.empty() ? "" : rows.substr(1)};
}

// 9. reweighted cos(z) on Z_ONLY matches the quadrature within 3 SE; phi = 1 is exact.
Criterion criterion_reweighting() {
    const PotentialSpec pot = PotentialSpec::z_only(1.0);
    SimConfig cfg;
    cfg.potential = pot;
    cfg.epsilon = 0.2;
    cfg.grid_size = 64;
    cfg.step = 1e-3;
    cfg.n_steps = 10000000;
    cfg.seed = 424242;
    cfg.observables = {"one", "cos_z"};
    const RunRecord rec = run(cfg);

    const double target =
        mu_star_observable(pot, [](const TorusPoint& x) { return std::cos(x.z()[0]); }, 512);
    const auto est = reweighted_estimate_with_error(rec, "cos_z");
    const double ones = reweighted_estimate(rec, "one");
    const bool pass = std::fabs(est.value - target) <= 3.0 * est.stderr_batch && ones == 1.0;
    return {9, "reweighting consistency", pass,
            "estimate=" + fmt(est.value) + " target=" + fmt(target) + " 3se=" +
                fmt(3.0 * est.stderr_batch) + " phi1=" + fmt(ones)};
}

// 10. limiting flow: R^2 > 0.99 exponential fit on [1,10], endpoint < 1e-6 at T=20,
//     mass conserved to 1e-9.
Criterion criterion_flow() {
    const FreeEnergyOracle oracle = default_oracle();
    const KernelParams kernel(0.1, 1);
    const FlowTrajectory traj =
        flow_integrate(AttractorState::uniform(oracle.grid()), oracle, kernel, 20.0, 0.01);
    std::vector<double> ts, logd;
    for (const auto& s : traj.samples) {
        if (s.t >= 1.0 && s.t <= 10.0 && s.l2_distance > 0.0) {
            ts.push_back(s.t);
            logd.push_back(std::log(s.l2_distance));
        }
    }
    const LinearFit fit = linear_fit(ts, logd);
    const double endpoint = traj.samples.back().l2_distance;
    const bool pass = fit.r2 > 0.99 && fit.slope < 0.0 && endpoint < 1e-6 && traj.mass_error <= 1e-9;
    return {10, "limiting-flow exponential convergence", pass,
            "rate=" + fmt(fit.slope) + " r2=" + fmt(fit.r2) + " endpoint=" + fmt(endpoint) +
                " (<1e-6) mass_err=" + fmt(traj.mass_error) + " (<=1e-9)"};
}

}  // namespace

int main(int argc, char** argv) {
    int selected = 0;
    for (int i = 1; i < argc - 1; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0) selected = std::atoi(argv[i + 1]);
    }

    using CriterionFn = Criterion (*)();
    const CriterionFn criteria[] = {
        criterion_sqrt_eps_law,       criterion_uniqueness_contraction,
        criterion_oracle_equivalence, criterion_projection_exactness,
        criterion_kernel_assumptions, criterion_force_bound,
        criterion_sampler_convergence, criterion_flat_histogram,
        criterion_reweighting,        criterion_flow,
    };

    int failures = 0;
    for (int i = 0; i < 10; ++i) {
        if (selected != 0 && selected != i + 1) continue;
        Criterion c{i + 1, "unknown", false, ""};
        try {
            c = criteria[i]();
        } catch (const std::exception& e) {
            c.detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] criterion %d (%s): %s\n", c.pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                    c.detail.c_str());
        std::fflush(stdout);
        if (!c.pass) ++failures;
    }
    return failures;
}

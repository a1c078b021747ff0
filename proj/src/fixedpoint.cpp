#include "abf/fixedpoint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "abf/rng.hpp"

namespace abf {

namespace {

void check_shared_grid(const BiasFunction& B, const FreeEnergyOracle& oracle,
                       const KernelParams& kernel) {
    if (!(B.grid() == oracle.grid())) {
        throw std::invalid_argument("fixedpoint: bias and oracle must share the grid");
    }
    if (kernel.dims() != oracle.grid().dims()) {
        throw std::invalid_argument("fixedpoint: kernel dimension mismatch");
    }
}

// e^(B - bar A_star) nodewise; the omitted constants cancel in every ratio here.
std::vector<double> boltzmann_weights(const BiasFunction& B, const FreeEnergyOracle& oracle) {
    const std::size_t n = oracle.grid().size();
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = std::exp(B.value(i) - oracle.a_star_centered().value(i));
    }
    return w;
}

GridFunction density_from_bias(const BiasFunction& B, const FreeEnergyOracle& oracle) {
    const PeriodicGrid& g = oracle.grid();
    GridFunction q(g);
    double mean = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        q.value(i) = std::exp(-oracle.a_star_centered().value(i) + B.value(i));
        mean += q.value(i);
    }
    mean /= static_cast<double>(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) q.value(i) /= mean;
    return q;
}

double l2_distance(const GridFunction& a, const GridFunction& b) {
    GridFunction d = a;
    for (std::size_t i = 0; i < d.nodes(); ++i) d.value(i) -= b.value(i);
    return lp_norm(d, 2.0);
}

}  // namespace

GridFunction F_of_bias(const BiasFunction& B, const FreeEnergyOracle& oracle,
                       const KernelParams& kernel) {
    check_shared_grid(B, oracle, kernel);
    const PeriodicGrid& g = oracle.grid();
    const int m = g.dims();
    const std::size_t n = g.size();
    const std::vector<double> w = boltzmann_weights(B, oracle);

    GridFunction f(g, m);
    std::vector<double> zt(static_cast<std::size_t>(m));
    std::vector<double> zs(static_cast<std::size_t>(m));
    std::vector<double> num(static_cast<std::size_t>(m));
    for (std::size_t t = 0; t < n; ++t) {
        g.node(t, zt);
        double den = 0.0;
        std::fill(num.begin(), num.end(), 0.0);
        for (std::size_t s = 0; s < n; ++s) {
            g.node(s, zs);
            const double kw = kernel.eval(zs, zt) * w[s];
            den += kw;
            for (int c = 0; c < m; ++c) {
                num[static_cast<std::size_t>(c)] += kw * oracle.grad_a_star().value(c, s);
            }
        }
        for (int c = 0; c < m; ++c) f.value(c, t) = num[static_cast<std::size_t>(c)] / den;
    }
    return f;
}

BiasFunction pi_map(const BiasFunction& B, const FreeEnergyOracle& oracle,
                    const KernelParams& kernel) {
    return project_gradient(F_of_bias(B, oracle, kernel));
}

bool ConvergenceMonitor::feed(double update) {
    if (update > tol_ && last_ >= 0.0 && update > last_) {
        ++growing_;
    } else {
        growing_ = 0;
    }
    last_ = update;
    return growing_ >= 3;
}

FixedPointResult picard_iterate(const BiasFunction& b0, const FreeEnergyOracle& oracle,
                                const KernelParams& kernel, double tol, int max_iter) {
    if (!(tol > 0.0)) throw std::invalid_argument("picard_iterate: tol must be > 0");
    if (max_iter < 1) throw std::invalid_argument("picard_iterate: max_iter must be >= 1");
    check_shared_grid(b0, oracle, kernel);

    const auto finalize = [&](BiasFunction a, int iters, double up_l2, double up_c0) {
        FixedPointResult r{std::move(a), iters, up_l2, up_c0, 0.0, 0.0, 0.0};
        const BiasFunction target = BiasFunction::from_values(oracle.a_star_centered());
        const BiasFunction diff = bias_difference(r.a_inf, target);
        r.err_w12 = sobolev_norm(diff, 2.0);
        r.err_w14 = sobolev_norm(diff, 4.0);
        r.err_c0 = lp_norm(diff.values(), std::numeric_limits<double>::infinity());
        return r;
    };

    BiasFunction b = b0;
    ConvergenceMonitor monitor(tol);
    for (int it = 1; it <= max_iter; ++it) {
        BiasFunction next = pi_map(b, oracle, kernel);
        const BiasFunction diff = bias_difference(next, b);
        const double up_l2 = lp_norm(diff.values(), 2.0);
        const double up_c0 = lp_norm(diff.values(), std::numeric_limits<double>::infinity());
        b = std::move(next);
        if (monitor.feed(up_l2)) {
            throw NonContractionError(
                "picard_iterate: update size grew for 3 consecutive iterations "
                "(epsilon too large for the contraction regime)",
                finalize(std::move(b), it, up_l2, up_c0));
        }
        if (up_l2 < tol) return finalize(std::move(b), it, up_l2, up_c0);
    }
    return finalize(std::move(b), max_iter, std::numeric_limits<double>::quiet_NaN(),
                    std::numeric_limits<double>::quiet_NaN());
}

BiasFunction random_band_limited_bias(const PeriodicGrid& grid, double radius, int degree,
                                      const CounterRng& rng, std::uint64_t trial) {
    if (!(radius > 0.0)) throw std::invalid_argument("random_band_limited_bias: radius must be > 0");
    if (degree < 1 || 2 * degree >= grid.nodes_per_dim()) {
        throw std::invalid_argument("random_band_limited_bias: degree must satisfy 1 <= deg < G/2");
    }
    const int m = grid.dims();
    const std::size_t n = grid.size();
    GridFunction b(grid);
    std::vector<double> z(static_cast<std::size_t>(m));

    // Enumerate half-space modes 1 <= |k|_inf <= degree; lexicographic with
    // first nonzero component positive keeps the field real.
    std::vector<std::vector<int>> modes;
    std::vector<int> k(static_cast<std::size_t>(m), -degree);
    const auto advance = [&]() {
        for (int d = m - 1; d >= 0; --d) {
            if (k[static_cast<std::size_t>(d)] < degree) {
                ++k[static_cast<std::size_t>(d)];
                for (int e = d + 1; e < m; ++e) k[static_cast<std::size_t>(e)] = -degree;
                return true;
            }
        }
        return false;
    };
    do {
        int first_nonzero = 0;
        for (int d = 0; d < m; ++d) {
            if (k[static_cast<std::size_t>(d)] != 0) {
                first_nonzero = k[static_cast<std::size_t>(d)];
                break;
            }
        }
        if (first_nonzero > 0) modes.push_back(k);
    } while (advance());

    const std::uint64_t base = trial * (1ULL << 24);
    for (std::size_t mi = 0; mi < modes.size(); ++mi) {
        double knorm = 0.0;
        for (int d = 0; d < m; ++d) knorm += static_cast<double>(modes[mi][static_cast<std::size_t>(d)]) * modes[mi][static_cast<std::size_t>(d)];
        knorm = std::sqrt(knorm);
        const double ca = rng.normal(base + 2 * mi) / knorm;
        const double cb = rng.normal(base + 2 * mi + 1) / knorm;
        for (std::size_t i = 0; i < n; ++i) {
            grid.node(i, z);
            double phase = 0.0;
            for (int d = 0; d < m; ++d) phase += modes[mi][static_cast<std::size_t>(d)] * z[static_cast<std::size_t>(d)];
            b.value(i) += ca * std::cos(phase) + cb * std::sin(phase);
        }
    }
    const double mx = b.max_abs();
    if (mx == 0.0) throw std::runtime_error("random_band_limited_bias: degenerate draw");
    for (std::size_t i = 0; i < n; ++i) b.value(i) *= radius / mx;
    return BiasFunction::from_values(b);
}

double contraction_estimate(const FreeEnergyOracle& oracle, const KernelParams& kernel,
                            double radius, int trials, std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("contraction_estimate: trials must be >= 1");
    const PeriodicGrid& g = oracle.grid();
    const CounterRng rng(seed, 0x5eedULL);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        const BiasFunction b1 = random_band_limited_bias(g, radius, 8, rng, 2 * static_cast<std::uint64_t>(t));
        const BiasFunction b2 = random_band_limited_bias(g, radius, 8, rng, 2 * static_cast<std::uint64_t>(t) + 1);
        const double den = l2_distance(density_from_bias(b1, oracle), density_from_bias(b2, oracle));
        if (den == 0.0) continue;  // degenerate pair
        const BiasFunction p1 = pi_map(b1, oracle, kernel);
        const BiasFunction p2 = pi_map(b2, oracle, kernel);
        const double num = l2_distance(density_from_bias(p1, oracle), density_from_bias(p2, oracle));
        worst = std::max(worst, num / den);
    }
    return worst;
}

GridFunction direct_force_quadrature(const PotentialSpec& spec, const BiasFunction& B,
                                     const KernelParams& kernel, int g_dense) {
    if (g_dense < 8) throw std::invalid_argument("direct_force_quadrature: lattice too coarse");
    const PeriodicGrid& g = B.grid();
    const int m = spec.zdim();
    const int yd = spec.ydim();
    const int d = spec.dim();
    if (g.dims() != m || kernel.dims() != m) {
        throw std::invalid_argument("direct_force_quadrature: dimension mismatch");
    }

    std::size_t z_count = 1;
    for (int i = 0; i < m; ++i) z_count *= static_cast<std::size_t>(g_dense);
    std::size_t y_count = 1;
    for (int i = 0; i < yd; ++i) y_count *= static_cast<std::size_t>(g_dense);
    const double spacing = two_pi / g_dense;

    // y-marginal sums of e^(-V+B) and grad_z V e^(-V+B) at each dense z'.
    std::vector<double> sum_e(z_count, 0.0);
    std::vector<double> sum_g(z_count * static_cast<std::size_t>(m), 0.0);
    std::vector<double> coords(static_cast<std::size_t>(d));
    std::vector<double> gz(static_cast<std::size_t>(m));
    std::vector<double> zprime(static_cast<std::size_t>(m));
    for (std::size_t zi = 0; zi < z_count; ++zi) {
        std::size_t rem = zi;
        for (int k = m - 1; k >= 0; --k) {
            zprime[static_cast<std::size_t>(k)] = static_cast<double>(rem % g_dense) * spacing;
            rem /= static_cast<std::size_t>(g_dense);
        }
        for (int k = 0; k < m; ++k) coords[static_cast<std::size_t>(yd + k)] = zprime[static_cast<std::size_t>(k)];
        const double bz = eval_bias(B, zprime);
        for (std::size_t yi = 0; yi < y_count; ++yi) {
            std::size_t yrem = yi;
            for (int k = yd - 1; k >= 0; --k) {
                coords[static_cast<std::size_t>(k)] = static_cast<double>(yrem % g_dense) * spacing;
                yrem /= static_cast<std::size_t>(g_dense);
            }
            const double w = std::exp(-spec.value_at(coords) + bz);
            spec.grad_z_at(coords, gz);
            sum_e[zi] += w;
            for (int k = 0; k < m; ++k) sum_g[zi * m + static_cast<std::size_t>(k)] += gz[static_cast<std::size_t>(k)] * w;
        }
    }

    GridFunction f(g, m);
    std::vector<double> zt(static_cast<std::size_t>(m));
    std::vector<double> num(static_cast<std::size_t>(m));
    for (std::size_t t = 0; t < g.size(); ++t) {
        g.node(t, zt);
        double den = 0.0;
        std::fill(num.begin(), num.end(), 0.0);
        for (std::size_t zi = 0; zi < z_count; ++zi) {
            std::size_t rem = zi;
            for (int k = m - 1; k >= 0; --k) {
                zprime[static_cast<std::size_t>(k)] = static_cast<double>(rem % g_dense) * spacing;
                rem /= static_cast<std::size_t>(g_dense);
            }
            const double kv = kernel.eval(zprime, zt);
            den += kv * sum_e[zi];
            for (int k = 0; k < m; ++k) num[static_cast<std::size_t>(k)] += kv * sum_g[zi * m + static_cast<std::size_t>(k)];
        }
        for (int k = 0; k < m; ++k) f.value(k, t) = num[static_cast<std::size_t>(k)] / den;
    }
    return f;
}

AttractorState AttractorState::uniform(const PeriodicGrid& grid) {
    return {GridFunction(grid, 1, 1.0)};
}

AttractorState AttractorState::from_bias(const BiasFunction& B, const FreeEnergyOracle& oracle) {
    return {density_from_bias(B, oracle)};
}

void AttractorState::validate() const {
    if (!q.scalar()) throw std::invalid_argument("AttractorState: q must be scalar");
    for (std::size_t i = 0; i < q.nodes(); ++i) {
        if (!(q.value(i) > 0.0)) throw std::invalid_argument("AttractorState: q must be positive");
    }
    if (std::fabs(q.mean() - 1.0) > 1e-10) {
        throw std::invalid_argument("AttractorState: q must have unit grid mean");
    }
}

FlowTrajectory flow_integrate(const AttractorState& q0, const FreeEnergyOracle& oracle,
                              const KernelParams& kernel, double T, double dt) {
    if (!(dt > 0.0) || dt > 0.1) throw std::invalid_argument("flow_integrate: need 0 < dt <= 0.1");
    if (!(T >= dt)) throw std::invalid_argument("flow_integrate: T must be >= dt");
    q0.validate();
    const PeriodicGrid& g = oracle.grid();

    const FixedPointResult fp = picard_iterate(BiasFunction::zero(g), oracle, kernel, 1e-12, 500);
    const GridFunction h_inf = density_from_bias(fp.a_inf, oracle);

    const auto rhs = [&](const GridFunction& q) {
        GridFunction b(g);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double qi = q.value(i);
            if (!(qi > 0.0)) {
                throw std::runtime_error("flow_integrate: q lost positivity; reduce dt");
            }
            b.value(i) = std::log(qi) + oracle.a_star_centered().value(i);
        }
        const BiasFunction bq = BiasFunction::from_values(b);  // removes the mean
        const GridFunction r = density_from_bias(pi_map(bq, oracle, kernel), oracle);
        GridFunction out(g);
        for (std::size_t i = 0; i < g.size(); ++i) out.value(i) = r.value(i) - q.value(i);
        return out;
    };

    std::vector<FlowSample> samples;
    double mass_error = 0.0;
    GridFunction q = q0.q;
    const long steps = static_cast<long>(std::llround(T / dt));
    samples.push_back({0.0, l2_distance(q, h_inf)});

    const auto axpy = [&](const GridFunction& base, double coef, const GridFunction& k) {
        GridFunction out = base;
        for (std::size_t i = 0; i < out.nodes(); ++i) out.value(i) += coef * k.value(i);
        return out;
    };

    for (long n = 0; n < steps; ++n) {
        const GridFunction k1 = rhs(q);
        const GridFunction k2 = rhs(axpy(q, 0.5 * dt, k1));
        const GridFunction k3 = rhs(axpy(q, 0.5 * dt, k2));
        const GridFunction k4 = rhs(axpy(q, dt, k3));
        for (std::size_t i = 0; i < q.nodes(); ++i) {
            q.value(i) += dt / 6.0 *
                          (k1.value(i) + 2.0 * k2.value(i) + 2.0 * k3.value(i) + k4.value(i));
        }
        const double t = static_cast<double>(n + 1) * dt;
        samples.push_back({t, l2_distance(q, h_inf)});
        mass_error = std::max(mass_error, std::fabs(q.mean() - 1.0));
    }
    return FlowTrajectory{std::move(samples), std::move(q), h_inf, mass_error};
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("linear_fit: need at least two matched points");
    }
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("linear_fit: degenerate abscissae");
    LinearFit fit{};
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss_res = 0.0, ss_tot = 0.0;
    const double ymean = sy / n;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double pred = fit.slope * x[i] + fit.intercept;
        ss_res += (y[i] - pred) * (y[i] - pred);
        ss_tot += (y[i] - ymean) * (y[i] - ymean);
    }
    fit.r2 = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
    return fit;
}

}  // namespace abf

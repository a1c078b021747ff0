#include "abf/kernel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace abf {

namespace {
// Unnormalized factor; sin^2(u/2)/(eps^2/2) == (1 - cos u)/eps^2.
double unnormalized(double u, double inv_eps_sq) { return std::exp((std::cos(u) - 1.0) * inv_eps_sq); }

double quad_mass(double inv_eps_sq, int resolution) {
    double s = 0.0;
    for (int j = 0; j < resolution; ++j) {
        s += unnormalized(j * two_pi / resolution, inv_eps_sq);
    }
    return s / resolution;
}
}  // namespace

KernelParams::KernelParams(double epsilon, int dims) : epsilon_(epsilon), dims_(dims) {
    if (!(epsilon_ > 0.0) || !(epsilon_ <= 1.0)) {
        throw std::invalid_argument("KernelParams: epsilon must lie in (0, 1]");
    }
    if (dims_ < 1) throw std::invalid_argument("KernelParams: dims must be >= 1");
    inv_eps_sq_ = 1.0 / (epsilon_ * epsilon_);
    quad_resolution_ = std::max(1024, static_cast<int>(std::ceil(32.0 / epsilon_)));
    normalizer_ = quad_mass(inv_eps_sq_, quad_resolution_);
    // quadrature convergence check: doubling the resolution must not move Z_eps
    const double z2 = quad_mass(inv_eps_sq_, 2 * quad_resolution_);
    if (!(normalizer_ > 0.0) || std::fabs(z2 / normalizer_ - 1.0) > 1e-10) {
        throw std::runtime_error("KernelParams: normalizer quadrature did not converge");
    }
}

double KernelParams::eval1(double u) const { return unnormalized(u, inv_eps_sq_) / normalizer_; }

double KernelParams::eval(std::span<const double> z_sample, std::span<const double> z_target) const {
    if (z_sample.size() != static_cast<std::size_t>(dims_) ||
        z_target.size() != static_cast<std::size_t>(dims_)) {
        throw std::invalid_argument("KernelParams::eval: dimension mismatch");
    }
    double k = 1.0;
    for (int j = 0; j < dims_; ++j) k *= eval1(z_target[j] - z_sample[j]);
    return k;
}

KernelAssumptionReport check_kernel_assumptions(const KernelParams& params, const PeriodicGrid& grid) {
    if (grid.dims() != params.dims()) {
        throw std::invalid_argument("check_kernel_assumptions: grid dimension mismatch");
    }
    const int G = grid.nodes_per_dim();
    const int needed = std::max(64, static_cast<int>(std::ceil(8.0 / params.epsilon())));
    if (G < needed) {
        throw std::invalid_argument(
            "check_kernel_assumptions: under-resolved grid: G >= max(64, 8/eps) required");
    }

    const std::size_t n = grid.size();
    const int m = grid.dims();
    std::vector<double> zt(static_cast<std::size_t>(m));
    std::vector<double> zs(static_cast<std::size_t>(m));

    KernelAssumptionReport report{0.0, 0.0, std::numeric_limits<double>::infinity(), 0.0};
    for (std::size_t t = 0; t < n; ++t) {
        grid.node(t, zt);
        double mass = 0.0;
        double moment = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            grid.node(s, zs);
            const double k_st = params.eval(zs, zt);
            const double k_ts = params.eval(zt, zs);
            const double d = torus_distance(zs, zt);
            mass += k_st;
            moment += d * d * (k_st + k_ts);
        }
        mass *= grid.node_weight();
        moment *= grid.node_weight();
        report.mass_error = std::max(report.mass_error, std::fabs(mass - 1.0));
        report.second_moment_sup = std::max(report.second_moment_sup, moment);
        report.second_moment_min = std::min(report.second_moment_min, moment);
    }
    report.c_k_estimate = report.second_moment_sup / params.epsilon();
    return report;
}

}  // namespace abf

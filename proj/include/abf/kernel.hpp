#pragma once

#include <span>

#include "abf/torus.hpp"

namespace abf {

/// Von Mises product kernel K_eps(z1, z2) = prod_j k_eps(z2_j - z1_j) with
/// k_eps(u) = Z_eps^-1 exp(-sin^2(u/2) / (eps^2/2)). Normalized against the
/// normalized Lebesgue measure: (1/2pi) int k_eps = 1. Z_eps is computed once
/// by periodic trapezoid quadrature at resolution max(1024, ceil(32/eps)).
class KernelParams {
public:
    KernelParams(double epsilon, int dims);

    double epsilon() const { return epsilon_; }
    int dims() const { return dims_; }
    double normalizer() const { return normalizer_; }
    int quad_resolution() const { return quad_resolution_; }

    /// One-dimensional factor k_eps(u).
    double eval1(double u) const;

    /// K_eps(z_sample, z_target); symmetric and translation invariant.
    double eval(std::span<const double> z_sample, std::span<const double> z_target) const;

private:
    double epsilon_;
    int dims_;
    double inv_eps_sq_;
    double normalizer_;
    int quad_resolution_;
};

struct KernelAssumptionReport {
    double mass_error;        // max over targets of |quadrature mass - 1|
    double second_moment_sup; // sup_z int |z-z'|^2 (K(z',z) + K(z,z')) dz'
    double second_moment_min; // min over targets of the same (equal to sup for
                              // a translation-invariant kernel)
    double c_k_estimate;      // second_moment_sup / eps
};

/// Measures the quantities of the kernel assumption on `grid`. Requires the
/// grid to resolve the kernel: G >= max(64, 8/eps), else throws.
KernelAssumptionReport check_kernel_assumptions(const KernelParams& params, const PeriodicGrid& grid);

}  // namespace abf

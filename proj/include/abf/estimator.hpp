#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "abf/kernel.hpp"
#include "abf/torus.hpp"

namespace abf {

/// Running kernel-weighted sums over the z-grid representing F_eps of the
/// time-weighted empirical measure: numerator(g) = sum_s w_s grad_zV(X_s) K_eps(Z_s, g),
/// denominator(g) = sum_s w_s K_eps(Z_s, g). The empirical measure is held only
/// through these grids; memory and per-sample work are O(G^m) regardless of
/// trajectory length.
class BiasAccumulator {
public:
    BiasAccumulator(PeriodicGrid grid, KernelParams kernel);

    const PeriodicGrid& grid() const { return grid_; }
    const KernelParams& kernel() const { return kernel_; }
    const GridFunction& numerator() const { return numerator_; }
    const GridFunction& denominator() const { return denominator_; }
    double total_weight() const { return total_weight_; }

    /// Adds one sample with the given time weight (> 0). grad_z_V must be the
    /// analytic z-gradient of V at x.
    void accumulate(const TorusPoint& x, std::span<const double> grad_z_V, double weight);
    void accumulate_z(std::span<const double> z, std::span<const double> grad_z_V, double weight);

    /// Nodewise numerator/denominator. Nodes whose denominator underflowed to
    /// zero (possible for very small eps with isolated far samples) report a
    /// zero force. Throws if total_weight is zero.
    GridFunction force_estimate() const;

    /// Fieldwise sum; grids and kernels must match.
    void merge_in(const BiasAccumulator& other);

    /// Writes "node,z...,denominator,num..." rows with 17 significant digits.
    void write_csv(std::ostream& os) const;

private:
    PeriodicGrid grid_;
    KernelParams kernel_;
    GridFunction numerator_;
    GridFunction denominator_;
    double total_weight_ = 0.0;
    std::vector<double> node_cos_;  // per-dim node tables, size m*G
    std::vector<double> node_sin_;
    std::vector<double> kbuf_;  // per-dim kernel factors, size m*G
};

BiasAccumulator merge(const BiasAccumulator& a, const BiasAccumulator& b);

/// Exact mode: keeps the sample list and evaluates F_eps directly. Oracle for
/// the accumulator path on small runs.
class ExactEmpiricalMeasure {
public:
    explicit ExactEmpiricalMeasure(int zdim) : zdim_(zdim) {}

    void add(std::span<const double> z, std::span<const double> grad_z_V, double weight);
    std::size_t size() const { return weights_.size(); }

    GridFunction force_estimate(const PeriodicGrid& grid, const KernelParams& kernel) const;

private:
    int zdim_;
    std::vector<double> zs_;
    std::vector<double> grads_;
    std::vector<double> weights_;
};

}  // namespace abf

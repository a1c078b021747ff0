#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "abf/kernel.hpp"
#include "abf/potential.hpp"
#include "abf/projection.hpp"
#include "abf/rng.hpp"

namespace abf {

/// F_eps[mu_B] reduced to the z-grid through the mean-force identity:
///   F(.) = int grad A_star(z') K_eps(z', .) e^(B - A_star) dz'
///        / int K_eps(z', .) e^(B - A_star) dz'
/// (periodic trapezoid over the shared grid). A weighted average of grad A_star.
GridFunction F_of_bias(const BiasFunction& B, const FreeEnergyOracle& oracle,
                       const KernelParams& kernel);

/// One application of the fixed-point map B -> A_eps[mu_B] = P(F_eps[mu_B]).
BiasFunction pi_map(const BiasFunction& B, const FreeEnergyOracle& oracle,
                    const KernelParams& kernel);

struct FixedPointResult {
    BiasFunction a_inf;
    int iterations = 0;
    double final_update_l2 = 0.0;
    double final_update_c0 = 0.0;
    // distances to bar A_star
    double err_w12 = 0.0;
    double err_w14 = 0.0;
    double err_c0 = 0.0;
};

/// Thrown when picard_iterate sees the update size grow for three consecutive
/// iterations above tolerance (epsilon too large for the contraction regime).
class NonContractionError : public std::runtime_error {
public:
    NonContractionError(std::string msg, FixedPointResult partial)
        : std::runtime_error(std::move(msg)), partial_(std::move(partial)) {}
    const FixedPointResult& partial() const { return partial_; }

private:
    FixedPointResult partial_;
};

/// Detects three consecutive growing update sizes above tolerance.
class ConvergenceMonitor {
public:
    explicit ConvergenceMonitor(double tol) : tol_(tol) {}
    /// Feeds one update size; returns true once non-contraction is detected.
    bool feed(double update);

private:
    double tol_;
    double last_ = -1.0;
    int growing_ = 0;
};

/// Iterates B <- pi_map(B) until the L2 update drops below tol (or max_iter).
FixedPointResult picard_iterate(const BiasFunction& b0, const FreeEnergyOracle& oracle,
                                const KernelParams& kernel, double tol, int max_iter);

/// Zero-mean trig polynomial of degree <= `degree`, coefficients ~ N(0, 1/k),
/// rescaled to the exact C0 radius. Deterministic in (rng, trial).
BiasFunction random_band_limited_bias(const PeriodicGrid& grid, double radius, int degree,
                                      const CounterRng& rng, std::uint64_t trial);

/// Max over random pairs B1, B2 in the C0-ball of radius M of
///   ||h_pi(B1) - h_pi(B2)||_2 / ||h_B1 - h_B2||_2,
/// where h_B = e^(-A_star + B) normalized to unit grid mean (z-marginal density).
double contraction_estimate(const FreeEnergyOracle& oracle, const KernelParams& kernel,
                            double radius, int trials, std::uint64_t seed);

/// The d-dimensional definition of F_eps[mu_B] as a quadrature oracle: full
/// trapezoid sum over a g_dense lattice in (y, z') of
///   grad_z V(y,z') K_eps(z', .) e^(-V + B(z')) over the same without grad_z V,
/// evaluated at the nodes of B's grid. Uses only V, grad_z V and B; kept to tie
/// the mean-force identity implementation back to the definition.
GridFunction direct_force_quadrature(const PotentialSpec& spec, const BiasFunction& B,
                                     const KernelParams& kernel, int g_dense);

/// Probability density of the z-marginal on the grid (positive, grid mean 1).
struct AttractorState {
    GridFunction q;

    static AttractorState uniform(const PeriodicGrid& grid);
    /// q proportional to e^(-A_star + B), normalized.
    static AttractorState from_bias(const BiasFunction& B, const FreeEnergyOracle& oracle);
    void validate() const;
};

struct FlowSample {
    double t;
    double l2_distance;  // to the Picard fixed-point density
};

struct FlowTrajectory {
    std::vector<FlowSample> samples;
    GridFunction q_final;
    GridFunction fixed_point_density;
    double mass_error = 0.0;  // max |mean(q) - 1| over the trajectory
};

/// Integrates the limiting flow restricted to the attracting set,
///   qdot = r[q] - q,  r[q] ~ e^(-A_star + pi_map(B_q)) normalized,
///   B_q = log q + A_star - mean(log q + A_star),
/// with classical RK4. Throws if q loses positivity (dt too large).
FlowTrajectory flow_integrate(const AttractorState& q0, const FreeEnergyOracle& oracle,
                              const KernelParams& kernel, double T, double dt);

/// Least-squares fit y ~ slope*x + intercept with coefficient of determination.
struct LinearFit {
    double slope;
    double intercept;
    double r2;
};
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

}  // namespace abf

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "abf/estimator.hpp"
#include "abf/potential.hpp"
#include "abf/projection.hpp"
#include "abf/torus.hpp"

namespace abf {

enum class BiasEvalMode { spectral, interpolated };

/// Named observables usable in reweighted estimates.
double evaluate_observable(const std::string& name, const TorusPoint& x);
bool observable_known(const std::string& name);

struct SimConfig {
    PotentialSpec potential = PotentialSpec::coupled_well(2.0, 1.0, 0.5);
    double epsilon = 0.2;
    int grid_size = 64;
    double step = 1e-3;
    long n_steps = 1;
    long bias_refresh_stride = 1;
    std::uint64_t seed = 1;
    std::vector<double> initial;  // d angles; defaults to the origin
    std::vector<std::string> observables;
    long snapshot_stride = 0;  // 0: pick ~100 snapshots per run
    int replica_count = 1;
    long freeze_after_steps = -1;  // -1: adaptive throughout; 0: bias frozen at 0
    BiasEvalMode bias_eval = BiasEvalMode::spectral;
    int threads = 1;

    /// Throws std::invalid_argument on violated invariants
    /// (h * max|grad V| < pi/2, n_steps >= 1, stride >= 1, ...).
    void validate() const;
};

struct BiasSnapshot {
    double time;
    BiasFunction bias;
};

struct DiagnosticsRow {
    double time;
    double c0_error;   // ||A_t - A_ref||_C0 (A_ref = 0 when no reference given)
    double w12_error;  // ||A_t - A_ref||_W12
    double flat_histogram_tv;
    double grad_max;  // max node |grad A_t|
};

struct ReweightedSums {
    double num = 0.0;
    double den = 0.0;
    std::vector<double> batch_num;
    std::vector<double> batch_den;
};

struct RunRecord {
    std::vector<BiasSnapshot> snapshots;
    std::vector<DiagnosticsRow> diagnostics;
    GridFunction histogram;  // time-weighted z-cell masses, normalized to 1
    std::map<std::string, ReweightedSums> reweighted;
    BiasAccumulator accumulator;
    BiasFunction final_bias;
    double final_time = 0.0;
    double max_grad_bias = 0.0;  // max over refreshes of max node |grad A_t|

    RunRecord(PeriodicGrid grid, KernelParams kernel);
};

/// One Euler-Maruyama step of the biased dynamics:
///   y' = wrap(y - h grad_y V + sqrt(2h) xi_y)
///   z' = wrap(z - h grad_z V + h grad A(z) + sqrt(2h) xi_z)
/// The d standard normals are supplied by the caller.
TorusPoint em_step(const TorusPoint& x, const PotentialSpec& spec, const BiasFunction& A, double h,
                   std::span<const double> noise);

/// Runs the self-interacting dynamics. Per step: the current state is
/// accumulated with weight h (the first accumulate realizes mu_0 = delta_x0),
/// the bias is refreshed from the accumulator every bias_refresh_stride steps,
/// reweighting sums and the histogram are updated, then the state moves.
/// `reference` (if given) is the target of the diagnostics norms.
RunRecord run(const SimConfig& config, const BiasFunction* reference = nullptr);

struct EstimateWithError {
    double value;
    double stderr_batch;  // batch-means standard error
};

double reweighted_estimate(const RunRecord& record, const std::string& observable);
EstimateWithError reweighted_estimate_with_error(const RunRecord& record,
                                                 const std::string& observable);

/// Total-variation distance between the time-weighted z-occupation histogram
/// and the uniform distribution on the grid cells.
double flat_histogram_distance(const RunRecord& record);

}  // namespace abf

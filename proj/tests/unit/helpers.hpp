#pragma once

// Test-only oracles, independent of the library paths they check.

#include <cmath>
#include <vector>

#include "abf/rng.hpp"
#include "abf/torus.hpp"

namespace testhelp {

// First circular-harmonic attenuation of the von Mises kernel,
//   rho(eps) = int cos(u) e^(-sin^2(u/2)/(eps^2/2)) du / int e^(-...) du,
// by dense trapezoid quadrature on the raw formula (no library calls).
inline double vm_first_harmonic(double eps, int resolution = 8192) {
    double num = 0.0, den = 0.0;
    for (int j = 0; j < resolution; ++j) {
        const double u = j * abf::two_pi / resolution;
        const double s = std::sin(0.5 * u);
        const double k = std::exp(-s * s / (0.5 * eps * eps));
        num += std::cos(u) * k;
        den += k;
    }
    return num / den;
}

// Modified Bessel function of the first kind by power series.
inline double bessel_i(int n, double x) {
    double term = 1.0;
    for (int k = 1; k <= n; ++k) term *= 0.5 * x / k;
    double sum = term;
    const double q = 0.25 * x * x;
    for (int j = 1; j < 60; ++j) {
        term *= q / (j * (j + n));
        sum += term;
    }
    return sum;
}

// m=1 projection closed form A(z) = int_0^z F - (z/2pi) int_0^2pi F, computed
// by cumulative trapezoid on a dense grid, then mean-removed and sampled at
// the G nodes of the coarse grid. F is supplied as a callable.
template <typename F>
std::vector<double> closed_form_projection(F&& f, int g_nodes, int dense = 1 << 15) {
    const double h = abf::two_pi / dense;
    std::vector<double> cumulative(static_cast<std::size_t>(dense) + 1, 0.0);
    for (int j = 0; j < dense; ++j) {
        const double a = f(j * h), b = f((j + 1) * h);
        cumulative[static_cast<std::size_t>(j) + 1] = cumulative[static_cast<std::size_t>(j)] + 0.5 * h * (a + b);
    }
    const double total = cumulative.back();
    std::vector<double> at_nodes(static_cast<std::size_t>(g_nodes));
    double mean = 0.0;
    for (int i = 0; i < g_nodes; ++i) {
        const double z = i * abf::two_pi / g_nodes;
        const double pos = z / h;
        const int lo = static_cast<int>(pos);
        const double frac = pos - lo;
        const double integral = cumulative[static_cast<std::size_t>(lo)] +
                                frac * (cumulative[static_cast<std::size_t>(lo) + 1] -
                                        cumulative[static_cast<std::size_t>(lo)]);
        at_nodes[static_cast<std::size_t>(i)] = integral - z / abf::two_pi * total;
        mean += at_nodes[static_cast<std::size_t>(i)];
    }
    mean /= g_nodes;
    for (double& v : at_nodes) v -= mean;
    return at_nodes;
}

inline double rand_angle(const abf::CounterRng& rng, std::uint64_t ctr) {
    return rng.uniform(ctr) * abf::two_pi;
}

}  // namespace testhelp

#pragma once

#include <complex>
#include <span>

#include "abf/fft.hpp"
#include "abf/torus.hpp"

namespace abf {

/// A zero-mean bias potential A on T^m, held both as nodal values and as the
/// trigonometric interpolant's coefficients, A(z) = sum_k spectrum[k] e^(i k.z).
/// The k=0 coefficient is exactly zero.
class BiasFunction {
public:
    static BiasFunction zero(const PeriodicGrid& grid);

    /// Builds the zero-mean bias with the same nodal values as `scalar` minus
    /// its grid mean.
    static BiasFunction from_values(const GridFunction& scalar);

    const PeriodicGrid& grid() const { return values_.grid(); }
    const GridFunction& values() const { return values_; }
    const fft::cvec& spectrum() const { return spectrum_; }
    double value(std::size_t node) const { return values_.value(node); }
    double mean() const { return values_.mean(); }

private:
    BiasFunction(GridFunction values, fft::cvec spectrum);
    void build_gradient_table();

    GridFunction values_;
    fft::cvec spectrum_;
    fft::cvec grad_coef_;  // m=1 fast path: i*k*A_k for k=1..G/2-1

    friend BiasFunction project_gradient(const GridFunction& field);
    friend void eval_bias_gradient(const BiasFunction&, std::span<const double>, std::span<double>);
    friend double eval_bias(const BiasFunction&, std::span<const double>);
};

/// L2-orthogonal projection of a vector field on T^m onto gradients of
/// zero-mean scalars: the solution A of Delta A = div F with int A = 0,
/// computed spectrally (A_k = -i k.F_k / |k|^2, Nyquist modes dropped).
BiasFunction project_gradient(const GridFunction& field);

/// Spectral gradient of A, exact on the stored band (Nyquist modes zeroed).
GridFunction gradient_of(const BiasFunction& A);

/// grad A at an arbitrary point, by evaluation of the trigonometric series.
void eval_bias_gradient(const BiasFunction& A, std::span<const double> z, std::span<double> out);

/// A itself at an arbitrary point (trigonometric series).
double eval_bias(const BiasFunction& A, std::span<const double> z);

/// grad A at an arbitrary point by multilinear interpolation of a nodal
/// gradient grid (the opt-in fast path; `grad` should come from gradient_of).
void eval_gradient_interpolated(const GridFunction& grad, std::span<const double> z,
                                std::span<double> out);

/// W^(1,p) norm: (lp_norm(A,p)^p + lp_norm(grad A,p)^p)^(1/p), p in [2, inf).
double sobolev_norm(const BiasFunction& A, double p);

BiasFunction bias_difference(const BiasFunction& a, const BiasFunction& b);

}  // namespace abf

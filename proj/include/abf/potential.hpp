#pragma once

#include <functional>
#include <span>
#include <string>

#include "abf/torus.hpp"

namespace abf {

enum class PotentialFamily { separable, coupled_well, z_only };

/// Optional separable extra coordinate, lifting the d=2, m=1 builtins to d=3:
/// extra_y adds coef*cos(y2) (m stays 1), extra_z adds coef*cos(z2) (m becomes 2).
enum class ProductExtension { none, extra_y, extra_z };

/// Closed-form test potential V(y, z) on T^d with analytic gradients.
///   separable:    V = a cos(y) + b cos(z)
///   coupled_well: V = a cos(2z) + b cos(z - y) + c cos(y)
///   z_only:       V = b cos(z)
class PotentialSpec {
public:
    PotentialSpec(PotentialFamily family, double a, double b, double c,
                  ProductExtension ext = ProductExtension::none, double ext_coef = 0.0);

    static PotentialSpec separable(double a, double b);
    static PotentialSpec coupled_well(double a, double b, double c);
    static PotentialSpec z_only(double b);

    PotentialFamily family() const { return family_; }
    ProductExtension extension() const { return ext_; }
    double a() const { return a_; }
    double b() const { return b_; }
    double c() const { return c_; }
    double extension_coef() const { return ext_coef_; }

    int dim() const;
    int zdim() const;
    int ydim() const { return dim() - zdim(); }

    double value(const TorusPoint& x) const;
    void grad_y(const TorusPoint& x, std::span<double> out) const;
    void grad_z(const TorusPoint& x, std::span<double> out) const;

    // Allocation-free variants for hot loops; coords holds d angles.
    double value_at(std::span<const double> coords) const;
    void grad_y_at(std::span<const double> coords, std::span<double> out) const;
    void grad_z_at(std::span<const double> coords, std::span<double> out) const;

    /// Exact sup over T^d of the Euclidean norm of grad_z V.
    double max_grad_z_norm() const;
    /// Upper bound for the Euclidean norm of the full gradient (step-size checks).
    double max_grad_norm() const;

    std::string family_name() const;

private:
    void check_point(const TorusPoint& x) const;

    PotentialFamily family_;
    double a_, b_, c_;
    ProductExtension ext_;
    double ext_coef_;
};

double eval_potential(const PotentialSpec& spec, const TorusPoint& x);

/// Quadrature reference for the free energy A_star(z) = -log int e^(-V) dy and
/// the mean force grad A_star (periodic trapezoid in y, spectrally accurate).
class FreeEnergyOracle {
public:
    FreeEnergyOracle(PeriodicGrid grid, GridFunction a_star, GridFunction grad_a_star,
                     int quad_resolution);

    const PeriodicGrid& grid() const { return grid_; }
    const GridFunction& a_star() const { return a_star_; }
    /// bar A_star = A_star minus its grid mean.
    const GridFunction& a_star_centered() const { return a_star_centered_; }
    const GridFunction& grad_a_star() const { return grad_a_star_; }
    double mean_a_star() const { return mean_a_star_; }
    int quad_resolution() const { return quad_resolution_; }

private:
    PeriodicGrid grid_;
    GridFunction a_star_;
    GridFunction a_star_centered_;
    GridFunction grad_a_star_;
    double mean_a_star_;
    int quad_resolution_;
};

/// Builds the free-energy oracle on `grid` with G_y quadrature points per
/// y-dimension (G_y >= 32). Throws if e^(-V) overflows.
FreeEnergyOracle free_energy_reference(const PotentialSpec& spec, const PeriodicGrid& grid, int g_y);

/// Full-dimensional trapezoid quadrature of int phi e^(-V) / int e^(-V).
double mu_star_observable(const PotentialSpec& spec,
                          const std::function<double(const TorusPoint&)>& phi, int g_full);

}  // namespace abf

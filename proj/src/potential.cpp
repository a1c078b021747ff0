#include "abf/potential.hpp"

#include <cmath>
#include <stdexcept>

namespace abf {

PotentialSpec::PotentialSpec(PotentialFamily family, double a, double b, double c,
                             ProductExtension ext, double ext_coef)
    : family_(family), a_(a), b_(b), c_(c), ext_(ext), ext_coef_(ext_coef) {
    if (!std::isfinite(a_) || !std::isfinite(b_) || !std::isfinite(c_) || !std::isfinite(ext_coef_)) {
        throw std::invalid_argument("PotentialSpec: non-finite parameter");
    }
}

PotentialSpec PotentialSpec::separable(double a, double b) {
    return {PotentialFamily::separable, a, b, 0.0};
}
PotentialSpec PotentialSpec::coupled_well(double a, double b, double c) {
    return {PotentialFamily::coupled_well, a, b, c};
}
PotentialSpec PotentialSpec::z_only(double b) { return {PotentialFamily::z_only, 0.0, b, 0.0}; }

int PotentialSpec::dim() const { return ext_ == ProductExtension::none ? 2 : 3; }
int PotentialSpec::zdim() const { return ext_ == ProductExtension::extra_z ? 2 : 1; }

void PotentialSpec::check_point(const TorusPoint& x) const {
    if (x.dim() != dim() || x.zdim() != zdim()) {
        throw std::invalid_argument("PotentialSpec: point dimension mismatch");
    }
}

namespace {
// The base families live on (y, z) in T^2.
double base_value(PotentialFamily f, double a, double b, double c, double y, double z) {
    switch (f) {
        case PotentialFamily::separable: return a * std::cos(y) + b * std::cos(z);
        case PotentialFamily::coupled_well:
            return a * std::cos(2.0 * z) + b * std::cos(z - y) + c * std::cos(y);
        case PotentialFamily::z_only: return b * std::cos(z);
    }
    throw std::logic_error("unreachable");
}

double base_grad_y(PotentialFamily f, double a, double b, double c, double y, double z) {
    switch (f) {
        case PotentialFamily::separable: return -a * std::sin(y);
        case PotentialFamily::coupled_well: return b * std::sin(z - y) - c * std::sin(y);
        case PotentialFamily::z_only: return 0.0;
    }
    throw std::logic_error("unreachable");
}

double base_grad_z(PotentialFamily f, double a, double b, double y, double z) {
    switch (f) {
        case PotentialFamily::separable: return -b * std::sin(z);
        case PotentialFamily::coupled_well:
            return -2.0 * a * std::sin(2.0 * z) - b * std::sin(z - y);
        case PotentialFamily::z_only: return -b * std::sin(z);
    }
    throw std::logic_error("unreachable");
}

double base_max_grad_z(PotentialFamily f, double a, double b) {
    switch (f) {
        case PotentialFamily::separable: return std::fabs(b);
        // sup over y of |...| adds |b| to the 2|a| swing; both attainable jointly.
        case PotentialFamily::coupled_well: return 2.0 * std::fabs(a) + std::fabs(b);
        case PotentialFamily::z_only: return std::fabs(b);
    }
    throw std::logic_error("unreachable");
}

double base_max_grad_y(PotentialFamily f, double a, double b, double c) {
    switch (f) {
        case PotentialFamily::separable: return std::fabs(a);
        case PotentialFamily::coupled_well: return std::fabs(b) + std::fabs(c);
        case PotentialFamily::z_only: return 0.0;
    }
    throw std::logic_error("unreachable");
}
}  // namespace

double PotentialSpec::value_at(std::span<const double> coords) const {
    const double y0 = coords[0];
    const double zb = ext_ == ProductExtension::extra_y ? coords[2] : coords[1];
    double v = base_value(family_, a_, b_, c_, y0, zb);
    if (ext_ == ProductExtension::extra_y) v += ext_coef_ * std::cos(coords[1]);
    if (ext_ == ProductExtension::extra_z) v += ext_coef_ * std::cos(coords[2]);
    return v;
}

void PotentialSpec::grad_y_at(std::span<const double> coords, std::span<double> out) const {
    const double y0 = coords[0];
    const double zb = ext_ == ProductExtension::extra_y ? coords[2] : coords[1];
    out[0] = base_grad_y(family_, a_, b_, c_, y0, zb);
    if (ext_ == ProductExtension::extra_y) out[1] = -ext_coef_ * std::sin(coords[1]);
}

void PotentialSpec::grad_z_at(std::span<const double> coords, std::span<double> out) const {
    const double y0 = coords[0];
    const double zb = ext_ == ProductExtension::extra_y ? coords[2] : coords[1];
    out[0] = base_grad_z(family_, a_, b_, y0, zb);
    if (ext_ == ProductExtension::extra_z) out[1] = -ext_coef_ * std::sin(coords[2]);
}

double PotentialSpec::value(const TorusPoint& x) const {
    check_point(x);
    return value_at(x.coords);
}

void PotentialSpec::grad_y(const TorusPoint& x, std::span<double> out) const {
    check_point(x);
    if (out.size() != static_cast<std::size_t>(ydim())) {
        throw std::invalid_argument("grad_y: output span size mismatch");
    }
    grad_y_at(x.coords, out);
}

void PotentialSpec::grad_z(const TorusPoint& x, std::span<double> out) const {
    check_point(x);
    if (out.size() != static_cast<std::size_t>(zdim())) {
        throw std::invalid_argument("grad_z: output span size mismatch");
    }
    grad_z_at(x.coords, out);
}

double PotentialSpec::max_grad_z_norm() const {
    const double base = base_max_grad_z(family_, a_, b_);
    if (ext_ == ProductExtension::extra_z) return std::hypot(base, ext_coef_);
    return base;
}

double PotentialSpec::max_grad_norm() const {
    double gy = base_max_grad_y(family_, a_, b_, c_);
    double gz = base_max_grad_z(family_, a_, b_);
    double ge = ext_ == ProductExtension::none ? 0.0 : std::fabs(ext_coef_);
    return std::sqrt(gy * gy + gz * gz + ge * ge);
}

std::string PotentialSpec::family_name() const {
    switch (family_) {
        case PotentialFamily::separable: return "separable";
        case PotentialFamily::coupled_well: return "coupled_well";
        case PotentialFamily::z_only: return "z_only";
    }
    throw std::logic_error("unreachable");
}

double eval_potential(const PotentialSpec& spec, const TorusPoint& x) { return spec.value(x); }

FreeEnergyOracle::FreeEnergyOracle(PeriodicGrid grid, GridFunction a_star, GridFunction grad_a_star,
                                   int quad_resolution)
    : grid_(grid),
      a_star_(std::move(a_star)),
      a_star_centered_(a_star_),
      grad_a_star_(std::move(grad_a_star)),
      mean_a_star_(a_star_.mean()),
      quad_resolution_(quad_resolution) {
    for (std::size_t i = 0; i < a_star_centered_.nodes(); ++i) {
        a_star_centered_.value(i) -= mean_a_star_;
    }
}

FreeEnergyOracle free_energy_reference(const PotentialSpec& spec, const PeriodicGrid& grid, int g_y) {
    if (g_y < 32) throw std::invalid_argument("free_energy_reference: G_y must be >= 32");
    if (grid.dims() != spec.zdim()) {
        throw std::invalid_argument("free_energy_reference: grid dimension must equal m");
    }
    const int m = spec.zdim();
    const int yd = spec.ydim();
    const int d = spec.dim();

    std::size_t y_count = 1;
    for (int i = 0; i < yd; ++i) y_count *= static_cast<std::size_t>(g_y);
    const double y_weight = 1.0 / static_cast<double>(y_count);
    const double y_spacing = two_pi / g_y;

    GridFunction a_star(grid);
    GridFunction grad(grid, m);
    std::vector<double> coords(static_cast<std::size_t>(d));
    std::vector<double> gz(static_cast<std::size_t>(m));

    for (std::size_t node = 0; node < grid.size(); ++node) {
        grid.node(node, std::span<double>(coords.data() + yd, static_cast<std::size_t>(m)));
        double sum_e = 0.0;
        std::vector<double> sum_g(static_cast<std::size_t>(m), 0.0);
        for (std::size_t yi = 0; yi < y_count; ++yi) {
            std::size_t rem = yi;
            for (int k = yd - 1; k >= 0; --k) {
                coords[static_cast<std::size_t>(k)] = static_cast<double>(rem % g_y) * y_spacing;
                rem /= static_cast<std::size_t>(g_y);
            }
            TorusPoint x(coords, m);
            const double e = std::exp(-spec.value(x));
            if (!std::isfinite(e)) {
                throw std::runtime_error("free_energy_reference: overflow in exp(-V)");
            }
            spec.grad_z(x, gz);
            sum_e += e;
            for (int k = 0; k < m; ++k) sum_g[static_cast<std::size_t>(k)] += gz[static_cast<std::size_t>(k)] * e;
        }
        a_star.value(node) = -std::log(sum_e * y_weight);
        for (int k = 0; k < m; ++k) grad.value(k, node) = sum_g[static_cast<std::size_t>(k)] / sum_e;
    }
    return {grid, std::move(a_star), std::move(grad), g_y};
}

double mu_star_observable(const PotentialSpec& spec,
                          const std::function<double(const TorusPoint&)>& phi, int g_full) {
    if (g_full < 2) throw std::invalid_argument("mu_star_observable: resolution too small");
    const int d = spec.dim();
    std::size_t count = 1;
    for (int i = 0; i < d; ++i) count *= static_cast<std::size_t>(g_full);
    const double spacing = two_pi / g_full;

    double num = 0.0, den = 0.0;
    std::vector<double> coords(static_cast<std::size_t>(d));
    for (std::size_t flat = 0; flat < count; ++flat) {
        std::size_t rem = flat;
        for (int k = d - 1; k >= 0; --k) {
            coords[static_cast<std::size_t>(k)] = static_cast<double>(rem % g_full) * spacing;
            rem /= static_cast<std::size_t>(g_full);
        }
        TorusPoint x(coords, spec.zdim());
        const double w = std::exp(-spec.value(x));
        num += phi(x) * w;
        den += w;
    }
    return num / den;
}

}  // namespace abf

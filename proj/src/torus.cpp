#include "abf/torus.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace abf {

double wrap(double angle) {
    if (!std::isfinite(angle)) {
        throw std::invalid_argument("wrap: non-finite angle");
    }
    double r = std::fmod(angle, two_pi);
    if (r < 0.0) r += two_pi;
    if (r >= two_pi) r = 0.0;  // fmod/rounding can land exactly on 2pi
    return r;
}

double torus_distance(std::span<const double> z1, std::span<const double> z2) {
    if (z1.size() != z2.size()) {
        throw std::invalid_argument("torus_distance: dimension mismatch");
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < z1.size(); ++i) {
        double d = std::fabs(wrap(z1[i]) - wrap(z2[i]));
        d = std::min(d, two_pi - d);
        sq += d * d;
    }
    return std::sqrt(sq);
}

TorusPoint::TorusPoint(std::vector<double> c, int split_index) : coords(std::move(c)), split(split_index) {
    if (split < 1 || split > dim()) {
        throw std::invalid_argument("TorusPoint: split index must satisfy 1 <= m <= d");
    }
    for (double& a : coords) a = wrap(a);
}

PeriodicGrid::PeriodicGrid(int dims, int nodes_per_dim) : dims_(dims), nodes_(nodes_per_dim) {
    if (dims_ < 1) throw std::invalid_argument("PeriodicGrid: dims must be >= 1");
    if (nodes_ < 1) throw std::invalid_argument("PeriodicGrid: empty grid");
    size_ = 1;
    for (int d = 0; d < dims_; ++d) size_ *= static_cast<std::size_t>(nodes_);
}

void PeriodicGrid::node(std::size_t flat, std::span<double> out) const {
    if (out.size() != static_cast<std::size_t>(dims_)) {
        throw std::invalid_argument("PeriodicGrid::node: output span has wrong dimension");
    }
    for (int d = dims_ - 1; d >= 0; --d) {
        out[d] = node_angle(static_cast<int>(flat % nodes_));
        flat /= nodes_;
    }
}

std::size_t PeriodicGrid::cell_of(std::span<const double> z) const {
    if (z.size() != static_cast<std::size_t>(dims_)) {
        throw std::invalid_argument("PeriodicGrid::cell_of: dimension mismatch");
    }
    std::size_t flat = 0;
    for (int d = 0; d < dims_; ++d) {
        auto j = static_cast<long>(std::floor(wrap(z[d]) / spacing()));
        if (j < 0) j = 0;
        if (j >= nodes_) j = nodes_ - 1;
        flat = flat * nodes_ + static_cast<std::size_t>(j);
    }
    return flat;
}

GridFunction::GridFunction(PeriodicGrid grid, int components, double fill)
    : grid_(grid), components_(components), values_(grid.size() * components, fill) {
    if (components_ < 1) throw std::invalid_argument("GridFunction: components must be >= 1");
}

GridFunction GridFunction::from_values(PeriodicGrid grid, int components, std::vector<double> values) {
    GridFunction f(grid, components);
    if (values.size() != f.values_.size()) {
        throw std::invalid_argument("GridFunction: value count must equal components * G^m");
    }
    f.values_ = std::move(values);
    return f;
}

double GridFunction::node_norm(std::size_t node) const {
    if (components_ == 1) return std::fabs(values_[node]);
    double sq = 0.0;
    for (int c = 0; c < components_; ++c) {
        double v = value(c, node);
        sq += v * v;
    }
    return std::sqrt(sq);
}

double GridFunction::mean(int comp) const {
    double s = 0.0;
    for (double v : component(comp)) s += v;
    return s / static_cast<double>(nodes());
}

double GridFunction::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::fabs(v));
    return m;
}

bool GridFunction::all_finite() const {
    for (double v : values_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

double lp_norm(const GridFunction& f, double p) {
    if (f.nodes() == 0) throw std::invalid_argument("lp_norm: empty grid");
    if (p == std::numeric_limits<double>::infinity()) {
        double m = 0.0;
        for (std::size_t i = 0; i < f.nodes(); ++i) m = std::max(m, f.node_norm(i));
        return m;
    }
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be in [1, inf]");
    double s = 0.0;
    for (std::size_t i = 0; i < f.nodes(); ++i) s += std::pow(f.node_norm(i), p);
    return std::pow(s / static_cast<double>(f.nodes()), 1.0 / p);
}

}  // namespace abf

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace abf {

inline constexpr double two_pi = 6.283185307179586476925286766559;

/// Reduce an angle to the canonical interval [0, 2pi). Throws on non-finite input.
double wrap(double angle);

/// Euclidean norm of the per-coordinate geodesic distances min(|d|, 2pi-|d|).
double torus_distance(std::span<const double> z1, std::span<const double> z2);

/// A point x = (y, z) on T^d; the last `split` coordinates are the reaction
/// coordinate z. All coordinates are kept in [0, 2pi).
struct TorusPoint {
    std::vector<double> coords;
    int split = 1;

    TorusPoint(std::vector<double> c, int split_index);

    int dim() const { return static_cast<int>(coords.size()); }
    int zdim() const { return split; }
    int ydim() const { return dim() - split; }

    std::span<const double> y() const { return {coords.data(), static_cast<std::size_t>(ydim())}; }
    std::span<const double> z() const {
        return {coords.data() + ydim(), static_cast<std::size_t>(split)};
    }
};

/// Uniform periodic grid over T^m: G nodes per dimension at angles j*2pi/G,
/// quadrature weight 1/G^m per node (normalized Lebesgue measure).
class PeriodicGrid {
public:
    PeriodicGrid(int dims, int nodes_per_dim);

    int dims() const { return dims_; }
    int nodes_per_dim() const { return nodes_; }
    std::size_t size() const { return size_; }

    double spacing() const { return two_pi / nodes_; }
    double node_weight() const { return 1.0 / static_cast<double>(size_); }
    double node_angle(int j) const { return j * (two_pi / nodes_); }

    /// Angles of the node with the given flat index (row-major, last dim fastest).
    void node(std::size_t flat, std::span<double> out) const;

    /// Flat index of the cell [j*spacing, (j+1)*spacing) containing z.
    std::size_t cell_of(std::span<const double> z) const;

    bool operator==(const PeriodicGrid&) const = default;

private:
    int dims_;
    int nodes_;
    std::size_t size_;
};

/// Scalar- or vector-valued samples on a PeriodicGrid, stored component-major.
class GridFunction {
public:
    explicit GridFunction(PeriodicGrid grid, int components = 1, double fill = 0.0);
    static GridFunction from_values(PeriodicGrid grid, int components, std::vector<double> values);

    const PeriodicGrid& grid() const { return grid_; }
    int components() const { return components_; }
    bool scalar() const { return components_ == 1; }
    std::size_t nodes() const { return grid_.size(); }

    double value(std::size_t node) const { return values_[node]; }
    double& value(std::size_t node) { return values_[node]; }
    double value(int comp, std::size_t node) const { return values_[comp * nodes() + node]; }
    double& value(int comp, std::size_t node) { return values_[comp * nodes() + node]; }

    std::span<const double> component(int c) const { return {values_.data() + c * nodes(), nodes()}; }
    std::span<double> component(int c) { return {values_.data() + c * nodes(), nodes()}; }
    std::span<const double> raw() const { return values_; }
    std::span<double> raw() { return values_; }

    /// Euclidean norm across components at one node.
    double node_norm(std::size_t node) const;

    double mean(int comp = 0) const;
    double max_abs() const;
    bool all_finite() const;

private:
    PeriodicGrid grid_;
    int components_;
    std::vector<double> values_;
};

/// (sum_nodes |f|^p / G^m)^(1/p); p = infinity gives the max-norm.
/// |f| at a node is the Euclidean norm across components.
double lp_norm(const GridFunction& f, double p);

}  // namespace abf

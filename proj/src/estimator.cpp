#include "abf/estimator.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace abf {

BiasAccumulator::BiasAccumulator(PeriodicGrid grid, KernelParams kernel)
    : grid_(grid),
      kernel_(kernel),
      numerator_(grid, grid.dims()),
      denominator_(grid, 1) {
    if (grid_.dims() != kernel_.dims()) {
        throw std::invalid_argument("BiasAccumulator: grid/kernel dimension mismatch");
    }
    const int G = grid_.nodes_per_dim();
    const int m = grid_.dims();
    node_cos_.resize(static_cast<std::size_t>(m) * G);
    node_sin_.resize(static_cast<std::size_t>(m) * G);
    kbuf_.resize(static_cast<std::size_t>(m) * G);
    for (int j = 0; j < G; ++j) {
        const double a = grid_.node_angle(j);
        for (int d = 0; d < m; ++d) {
            node_cos_[static_cast<std::size_t>(d) * G + j] = std::cos(a);
            node_sin_[static_cast<std::size_t>(d) * G + j] = std::sin(a);
        }
    }
}

void BiasAccumulator::accumulate(const TorusPoint& x, std::span<const double> grad_z_V, double weight) {
    accumulate_z(x.z(), grad_z_V, weight);
}

void BiasAccumulator::accumulate_z(std::span<const double> z, std::span<const double> grad_z_V,
                                   double weight) {
    const int m = grid_.dims();
    const int G = grid_.nodes_per_dim();
    if (z.size() != static_cast<std::size_t>(m) || grad_z_V.size() != static_cast<std::size_t>(m)) {
        throw std::invalid_argument("accumulate: dimension mismatch");
    }
    if (!(weight > 0.0)) throw std::invalid_argument("accumulate: weight must be > 0");
    for (double gc : grad_z_V) {
        if (!std::isfinite(gc)) throw std::invalid_argument("accumulate: non-finite gradient");
    }

    // Per-dimension kernel factors via cos(z - theta_j) = cos z cos theta_j + sin z sin theta_j.
    const double inv_eps_sq = 1.0 / (kernel_.epsilon() * kernel_.epsilon());
    const double inv_z = 1.0 / kernel_.normalizer();
    for (int d = 0; d < m; ++d) {
        const double cz = std::cos(z[static_cast<std::size_t>(d)]);
        const double sz = std::sin(z[static_cast<std::size_t>(d)]);
        const double* ct = node_cos_.data() + static_cast<std::size_t>(d) * G;
        const double* st = node_sin_.data() + static_cast<std::size_t>(d) * G;
        double* kb = kbuf_.data() + static_cast<std::size_t>(d) * G;
        for (int j = 0; j < G; ++j) {
            kb[j] = std::exp((cz * ct[j] + sz * st[j] - 1.0) * inv_eps_sq) * inv_z;
        }
    }

    double* den = denominator_.component(0).data();
    if (m == 1) {
        const double* kb = kbuf_.data();
        const double g0 = grad_z_V[0];
        double* num = numerator_.component(0).data();
        for (int j = 0; j < G; ++j) {
            const double wk = weight * kb[j];
            den[j] += wk;
            num[j] += wk * g0;
        }
    } else {
        const std::size_t n = grid_.size();
        for (std::size_t flat = 0; flat < n; ++flat) {
            std::size_t rem = flat;
            double k = 1.0;
            for (int d = m - 1; d >= 0; --d) {
                k *= kbuf_[static_cast<std::size_t>(d) * G + rem % G];
                rem /= static_cast<std::size_t>(G);
            }
            const double wk = weight * k;
            den[flat] += wk;
            for (int c = 0; c < m; ++c) {
                numerator_.value(c, flat) += wk * grad_z_V[static_cast<std::size_t>(c)];
            }
        }
    }
    total_weight_ += weight;
}

GridFunction BiasAccumulator::force_estimate() const {
    if (!(total_weight_ > 0.0)) throw std::runtime_error("force_estimate: no samples");
    const int m = grid_.dims();
    GridFunction f(grid_, m);
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        const double den = denominator_.value(i);
        for (int c = 0; c < m; ++c) {
            f.value(c, i) = den > 0.0 ? numerator_.value(c, i) / den : 0.0;
        }
    }
    return f;
}

void BiasAccumulator::merge_in(const BiasAccumulator& other) {
    if (!(grid_ == other.grid_) || kernel_.epsilon() != other.kernel_.epsilon() ||
        kernel_.dims() != other.kernel_.dims()) {
        throw std::invalid_argument("merge: mismatched grid or kernel");
    }
    for (std::size_t i = 0; i < denominator_.raw().size(); ++i) {
        denominator_.raw()[i] += other.denominator_.raw()[i];
    }
    for (std::size_t i = 0; i < numerator_.raw().size(); ++i) {
        numerator_.raw()[i] += other.numerator_.raw()[i];
    }
    total_weight_ += other.total_weight_;
}

void BiasAccumulator::write_csv(std::ostream& os) const {
    const int m = grid_.dims();
    os << "node";
    for (int d = 0; d < m; ++d) os << ",z" << d + 1;
    os << ",denominator";
    for (int c = 0; c < m; ++c) os << ",num" << c + 1;
    os << "\n";
    std::vector<double> z(static_cast<std::size_t>(m));
    char buf[64];
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        grid_.node(i, z);
        os << i;
        for (int d = 0; d < m; ++d) {
            std::snprintf(buf, sizeof buf, ",%.17g", z[static_cast<std::size_t>(d)]);
            os << buf;
        }
        std::snprintf(buf, sizeof buf, ",%.17g", denominator_.value(i));
        os << buf;
        for (int c = 0; c < m; ++c) {
            std::snprintf(buf, sizeof buf, ",%.17g", numerator_.value(c, i));
            os << buf;
        }
        os << "\n";
    }
}

BiasAccumulator merge(const BiasAccumulator& a, const BiasAccumulator& b) {
    BiasAccumulator out = a;
    out.merge_in(b);
    return out;
}

void ExactEmpiricalMeasure::add(std::span<const double> z, std::span<const double> grad_z_V,
                                double weight) {
    if (z.size() != static_cast<std::size_t>(zdim_) || grad_z_V.size() != static_cast<std::size_t>(zdim_)) {
        throw std::invalid_argument("ExactEmpiricalMeasure::add: dimension mismatch");
    }
    zs_.insert(zs_.end(), z.begin(), z.end());
    grads_.insert(grads_.end(), grad_z_V.begin(), grad_z_V.end());
    weights_.push_back(weight);
}

GridFunction ExactEmpiricalMeasure::force_estimate(const PeriodicGrid& grid,
                                                   const KernelParams& kernel) const {
    if (weights_.empty()) throw std::runtime_error("ExactEmpiricalMeasure: no samples");
    const int m = zdim_;
    GridFunction f(grid, m);
    std::vector<double> zt(static_cast<std::size_t>(m));
    for (std::size_t g = 0; g < grid.size(); ++g) {
        grid.node(g, zt);
        double den = 0.0;
        std::vector<double> num(static_cast<std::size_t>(m), 0.0);
        for (std::size_t s = 0; s < weights_.size(); ++s) {
            const double k = kernel.eval({zs_.data() + s * m, static_cast<std::size_t>(m)}, zt);
            const double wk = weights_[s] * k;
            den += wk;
            for (int c = 0; c < m; ++c) num[static_cast<std::size_t>(c)] += wk * grads_[s * m + c];
        }
        for (int c = 0; c < m; ++c) f.value(c, g) = den > 0.0 ? num[static_cast<std::size_t>(c)] / den : 0.0;
    }
    return f;
}

}  // namespace abf

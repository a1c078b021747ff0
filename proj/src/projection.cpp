#include "abf/projection.hpp"

#include <cmath>
#include <stdexcept>

namespace abf {

namespace {

std::vector<int> grid_shape(const PeriodicGrid& g) {
    return std::vector<int>(static_cast<std::size_t>(g.dims()), g.nodes_per_dim());
}

// Signed frequency vector of a flat spectral index (row-major, last dim fastest).
void frequencies(const PeriodicGrid& g, std::size_t flat, std::span<int> k) {
    const int G = g.nodes_per_dim();
    for (int d = g.dims() - 1; d >= 0; --d) {
        k[d] = fft::frequency(static_cast<int>(flat % G), G);
        flat /= G;
    }
}

bool has_nyquist(std::span<const int> k, int G) {
    for (int kd : k) {
        if (kd == -G / 2) return true;
    }
    return false;
}

fft::cvec forward_normalized(std::span<const double> values, const PeriodicGrid& g) {
    fft::cvec a(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) a[i] = values[i];
    auto shape = grid_shape(g);
    fft::transform_nd(a, shape, false);
    const double inv_n = 1.0 / static_cast<double>(values.size());
    for (auto& x : a) x *= inv_n;
    return a;
}

GridFunction inverse_to_values(const fft::cvec& spectrum, const PeriodicGrid& g) {
    fft::cvec a = spectrum;
    auto shape = grid_shape(g);
    fft::transform_nd(a, shape, true);
    // transform_nd's inverse divides by N; our coefficients are already
    // normalized, so undo that factor.
    GridFunction out(g);
    const double n = static_cast<double>(g.size());
    for (std::size_t i = 0; i < a.size(); ++i) out.value(i) = a[i].real() * n;
    return out;
}

}  // namespace

BiasFunction::BiasFunction(GridFunction values, fft::cvec spectrum)
    : values_(std::move(values)), spectrum_(std::move(spectrum)) {
    build_gradient_table();
}

void BiasFunction::build_gradient_table() {
    if (grid().dims() != 1) return;
    const int G = grid().nodes_per_dim();
    grad_coef_.assign(static_cast<std::size_t>((G + 1) / 2), {0.0, 0.0});
    for (int k = 1; k < (G + 1) / 2; ++k) {
        grad_coef_[k] = std::complex<double>(0.0, static_cast<double>(k)) * spectrum_[k];
    }
}

BiasFunction BiasFunction::zero(const PeriodicGrid& grid) {
    return BiasFunction(GridFunction(grid), fft::cvec(grid.size(), {0.0, 0.0}));
}

BiasFunction BiasFunction::from_values(const GridFunction& scalar) {
    if (!scalar.scalar()) throw std::invalid_argument("BiasFunction: expected a scalar grid function");
    if (!scalar.all_finite()) throw std::invalid_argument("BiasFunction: non-finite values");
    GridFunction centered = scalar;
    const double m = scalar.mean();
    for (std::size_t i = 0; i < centered.nodes(); ++i) centered.value(i) -= m;
    fft::cvec spec = forward_normalized(centered.raw(), scalar.grid());
    spec[0] = {0.0, 0.0};
    return BiasFunction(std::move(centered), std::move(spec));
}

BiasFunction project_gradient(const GridFunction& field) {
    const PeriodicGrid& g = field.grid();
    if (field.components() != g.dims()) {
        throw std::invalid_argument("project_gradient: field must have one component per dimension");
    }
    if (!field.all_finite()) throw std::invalid_argument("project_gradient: non-finite field");

    const int m = g.dims();
    const int G = g.nodes_per_dim();
    std::vector<fft::cvec> fhat(static_cast<std::size_t>(m));
    for (int c = 0; c < m; ++c) fhat[c] = forward_normalized(field.component(c), g);

    fft::cvec ahat(g.size(), {0.0, 0.0});
    std::vector<int> k(static_cast<std::size_t>(m));
    for (std::size_t idx = 1; idx < g.size(); ++idx) {
        frequencies(g, idx, k);
        if (has_nyquist(k, G)) continue;
        double k2 = 0.0;
        std::complex<double> kdotf(0.0, 0.0);
        for (int c = 0; c < m; ++c) {
            k2 += static_cast<double>(k[c]) * k[c];
            kdotf += static_cast<double>(k[c]) * fhat[static_cast<std::size_t>(c)][idx];
        }
        ahat[idx] = std::complex<double>(0.0, -1.0) * kdotf / k2;
    }
    GridFunction values = inverse_to_values(ahat, g);
    return BiasFunction(std::move(values), std::move(ahat));
}

GridFunction gradient_of(const BiasFunction& A) {
    const PeriodicGrid& g = A.grid();
    const int m = g.dims();
    const int G = g.nodes_per_dim();
    GridFunction out(g, m);
    std::vector<int> k(static_cast<std::size_t>(m));
    fft::cvec dhat(g.size());
    for (int c = 0; c < m; ++c) {
        for (std::size_t idx = 0; idx < g.size(); ++idx) {
            frequencies(g, idx, k);
            if (has_nyquist(k, G)) {
                dhat[idx] = {0.0, 0.0};
            } else {
                dhat[idx] = std::complex<double>(0.0, static_cast<double>(k[c])) * A.spectrum()[idx];
            }
        }
        GridFunction comp = inverse_to_values(dhat, g);
        for (std::size_t i = 0; i < g.size(); ++i) out.value(c, i) = comp.value(i);
    }
    return out;
}

void eval_bias_gradient(const BiasFunction& A, std::span<const double> z, std::span<double> out) {
    const PeriodicGrid& g = A.grid();
    const int m = g.dims();
    if (z.size() != static_cast<std::size_t>(m) || out.size() != static_cast<std::size_t>(m)) {
        throw std::invalid_argument("eval_bias_gradient: dimension mismatch");
    }
    if (m == 1 && !A.grad_coef_.empty()) {
        // A'(z) = 2 Re sum_{k>=1} (i k A_k) e^(ikz)
        const std::complex<double> w(std::cos(z[0]), std::sin(z[0]));
        std::complex<double> wk = w;
        std::complex<double> s(0.0, 0.0);
        for (std::size_t k = 1; k < A.grad_coef_.size(); ++k) {
            s += A.grad_coef_[k] * wk;
            wk *= w;
        }
        out[0] = 2.0 * s.real();
        return;
    }
    const int G = g.nodes_per_dim();
    std::vector<int> k(static_cast<std::size_t>(m));
    std::vector<std::complex<double>> acc(static_cast<std::size_t>(m), {0.0, 0.0});
    for (std::size_t idx = 1; idx < g.size(); ++idx) {
        const std::complex<double>& a = A.spectrum()[idx];
        if (a.real() == 0.0 && a.imag() == 0.0) continue;
        frequencies(g, idx, k);
        if (has_nyquist(k, G)) continue;
        double phase = 0.0;
        for (int c = 0; c < m; ++c) phase += k[c] * z[c];
        const std::complex<double> e(std::cos(phase), std::sin(phase));
        for (int c = 0; c < m; ++c) {
            acc[c] += std::complex<double>(0.0, static_cast<double>(k[c])) * a * e;
        }
    }
    for (int c = 0; c < m; ++c) out[c] = acc[c].real();
}

double eval_bias(const BiasFunction& A, std::span<const double> z) {
    const PeriodicGrid& g = A.grid();
    const int m = g.dims();
    if (z.size() != static_cast<std::size_t>(m)) {
        throw std::invalid_argument("eval_bias: dimension mismatch");
    }
    if (m == 1) {
        // A(z) = 2 Re sum_{k>=1} A_k e^(ikz); Nyquist dropped with the gradient table.
        const std::complex<double> w(std::cos(z[0]), std::sin(z[0]));
        std::complex<double> wk = w;
        std::complex<double> s(0.0, 0.0);
        const std::size_t half = A.grad_coef_.size();
        for (std::size_t k = 1; k < half; ++k) {
            s += A.spectrum()[k] * wk;
            wk *= w;
        }
        return 2.0 * s.real();
    }
    const int G = g.nodes_per_dim();
    std::vector<int> k(static_cast<std::size_t>(m));
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t idx = 1; idx < g.size(); ++idx) {
        const std::complex<double>& a = A.spectrum()[idx];
        if (a.real() == 0.0 && a.imag() == 0.0) continue;
        frequencies(g, idx, k);
        if (has_nyquist(k, G)) continue;
        double phase = 0.0;
        for (int c = 0; c < m; ++c) phase += k[c] * z[c];
        acc += a * std::complex<double>(std::cos(phase), std::sin(phase));
    }
    return acc.real();
}

void eval_gradient_interpolated(const GridFunction& grad, std::span<const double> z,
                                std::span<double> out) {
    const PeriodicGrid& g = grad.grid();
    const int m = g.dims();
    if (z.size() != static_cast<std::size_t>(m) || out.size() != static_cast<std::size_t>(m)) {
        throw std::invalid_argument("eval_gradient_interpolated: dimension mismatch");
    }
    const int G = g.nodes_per_dim();
    const double h = g.spacing();
    std::vector<int> lo(static_cast<std::size_t>(m));
    std::vector<double> frac(static_cast<std::size_t>(m));
    for (int d = 0; d < m; ++d) {
        const double s = wrap(z[d]) / h;
        lo[d] = static_cast<int>(std::floor(s)) % G;
        frac[d] = s - std::floor(s);
    }
    for (int c = 0; c < m; ++c) out[c] = 0.0;
    const int corners = 1 << m;
    for (int corner = 0; corner < corners; ++corner) {
        double w = 1.0;
        std::size_t flat = 0;
        for (int d = 0; d < m; ++d) {
            const bool hi = (corner >> d) & 1;
            w *= hi ? frac[d] : 1.0 - frac[d];
            const int j = hi ? (lo[d] + 1) % G : lo[d];
            flat = flat * G + static_cast<std::size_t>(j);
        }
        for (int c = 0; c < m; ++c) out[c] += w * grad.value(c, flat);
    }
}

double sobolev_norm(const BiasFunction& A, double p) {
    if (!(p >= 2.0)) throw std::invalid_argument("sobolev_norm: p must be >= 2");
    const double lp = lp_norm(A.values(), p);
    const double lg = lp_norm(gradient_of(A), p);
    return std::pow(std::pow(lp, p) + std::pow(lg, p), 1.0 / p);
}

BiasFunction bias_difference(const BiasFunction& a, const BiasFunction& b) {
    if (!(a.grid() == b.grid())) throw std::invalid_argument("bias_difference: grid mismatch");
    GridFunction v = a.values();
    for (std::size_t i = 0; i < v.nodes(); ++i) v.value(i) -= b.value(i);
    return BiasFunction::from_values(v);
}

}  // namespace abf

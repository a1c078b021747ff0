#include "abf/fft.hpp"

#include <cmath>
#include <stdexcept>

#include "abf/torus.hpp"

namespace abf::fft {

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Per-size twiddle cache: w[j] = exp(-2 pi i j / n) for j < n/2.
struct TwiddleTable {
    std::size_t n = 0;
    std::vector<double> re, im;
    void build(std::size_t size) {
        n = size;
        re.resize(n / 2);
        im.resize(n / 2);
        for (std::size_t j = 0; j < n / 2; ++j) {
            const double ang = -two_pi * static_cast<double>(j) / static_cast<double>(n);
            re[j] = std::cos(ang);
            im[j] = std::sin(ang);
        }
    }
};

void radix2(std::span<std::complex<double>> a, bool inverse) {
    const std::size_t n = a.size();
    static thread_local TwiddleTable table;
    if (table.n != n) table.build(n);

    // bit reversal
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const double sign = inverse ? -1.0 : 1.0;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t stride = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const double wr = table.re[k * stride];
                const double wi = sign * table.im[k * stride];
                const std::complex<double> u = a[i + k];
                const std::complex<double> x = a[i + k + half];
                const double vr = x.real() * wr - x.imag() * wi;
                const double vi = x.real() * wi + x.imag() * wr;
                a[i + k] = {u.real() + vr, u.imag() + vi};
                a[i + k + half] = {u.real() - vr, u.imag() - vi};
            }
        }
    }
}

void naive(std::span<std::complex<double>> a, bool inverse) {
    const std::size_t n = a.size();
    const double sgn = inverse ? 1.0 : -1.0;
    cvec out(n, {0.0, 0.0});
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < n; ++j) {
            const double ang = sgn * two_pi * static_cast<double>(j * k % n) / static_cast<double>(n);
            out[k] += a[j] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
    }
    for (std::size_t k = 0; k < n; ++k) a[k] = out[k];
}

}  // namespace

void transform(std::span<std::complex<double>> a, bool inverse) {
    const std::size_t n = a.size();
    if (n == 0) throw std::invalid_argument("fft: empty input");
    if (n > 1) {
        if (is_pow2(n)) {
            radix2(a, inverse);
        } else {
            naive(a, inverse);
        }
    }
    if (inverse) {
        for (auto& x : a) x /= static_cast<double>(n);
    }
}

void transform_nd(cvec& a, std::span<const int> shape, bool inverse) {
    std::size_t total = 1;
    for (int s : shape) total *= static_cast<std::size_t>(s);
    if (a.size() != total) throw std::invalid_argument("fft: shape does not match data size");

    const int ndim = static_cast<int>(shape.size());
    std::size_t stride = 1;  // stride of the current axis (last axis fastest)
    for (int axis = ndim - 1; axis >= 0; --axis) {
        const std::size_t n = static_cast<std::size_t>(shape[axis]);
        const std::size_t block = n * stride;
        cvec line(n);
        for (std::size_t base = 0; base < total; base += block) {
            for (std::size_t off = 0; off < stride; ++off) {
                for (std::size_t i = 0; i < n; ++i) line[i] = a[base + off + i * stride];
                transform(line, inverse);
                for (std::size_t i = 0; i < n; ++i) a[base + off + i * stride] = line[i];
            }
        }
        stride = block;
    }
}

}  // namespace abf::fft

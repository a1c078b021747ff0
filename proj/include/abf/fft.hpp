#pragma once

#include <complex>
#include <span>
#include <vector>

namespace abf::fft {

using cvec = std::vector<std::complex<double>>;

/// In-place DFT: X_k = sum_j x_j e^(-2*pi*i*j*k/N). The inverse applies the
/// conjugate transform and divides by N. Radix-2 for power-of-two lengths,
/// naive O(N^2) otherwise.
void transform(std::span<std::complex<double>> a, bool inverse);

/// Separable transform of a row-major m-dimensional array (last dim fastest).
void transform_nd(cvec& a, std::span<const int> shape, bool inverse);

/// Signed frequency of DFT bin i for length n: 0,1,...,n/2-1,-n/2,...,-1.
inline int frequency(int i, int n) { return i <= (n - 1) / 2 ? i : i - n; }

}  // namespace abf::fft

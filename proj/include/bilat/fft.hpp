#pragma once
#include <complex>
#include <vector>

namespace bilat::fft {

// Thin FFTW3 wrappers. Unnormalized, FFTW sign convention:
// sign = -1 (forward)  X_k = sum_j x_j exp(-2*pi*i*j*k/N)
// sign = +1 (backward) x_j = sum_k X_k exp(+2*pi*i*j*k/N)
// Plan creation/destruction is serialized internally (FFTW planning is not
// thread-safe); transforms themselves may run concurrently on distinct data.

void transform_1d(std::vector<std::complex<double>>& data, int sign);

// Row-major data, index = iy*nx + ix.
void transform_2d(std::vector<std::complex<double>>& data, int nx, int ny, int sign);

} // namespace bilat::fft

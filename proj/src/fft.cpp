#include "bilat/fft.hpp"

#include <fftw3.h>

#include <mutex>

#include "bilat/errors.hpp"

namespace bilat::fft {
namespace {

std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

} // namespace

void transform_1d(std::vector<std::complex<double>>& data, int sign) {
    if (data.empty())
        throw ValidationError("fft: empty input");
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan = nullptr;
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        plan = fftw_plan_dft_1d(int(data.size()), p, p,
                                sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                                FFTW_ESTIMATE);
    }
    if (!plan)
        throw NumericError("fft: plan creation failed");
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        fftw_destroy_plan(plan);
    }
}

void transform_2d(std::vector<std::complex<double>>& data, int nx, int ny, int sign) {
    if (nx <= 0 || ny <= 0 || data.size() != std::size_t(nx) * std::size_t(ny))
        throw ValidationError("fft: bad 2d dimensions");
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan = nullptr;
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        // FFTW wants the slowest-varying dimension first; our rows are y.
        plan = fftw_plan_dft_2d(ny, nx, p, p,
                                sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                                FFTW_ESTIMATE);
    }
    if (!plan)
        throw NumericError("fft: plan creation failed");
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        fftw_destroy_plan(plan);
    }
}

} // namespace bilat::fft

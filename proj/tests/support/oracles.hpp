#pragma once
#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

// Independent closed-form references used to pin expected values in tests.
namespace oracles {

inline constexpr double pi = std::numbers::pi;

// Unit-cell Fourier power |c_mn|^2 of exp(i*phase) for the equal-area
// triangular two-level tiling with step s. Derived by integrating
// exp(-i G_mn . r) over the down triangle {a1, a2, a1+a2} in lattice
// coordinates (affine map onto the unit simplex):
//   c_00 = (1 + e^{is})/2
//   c_m0 = c_0n = c_mm = (e^{is} - 1) * (+-i)/(2*pi*k)   (k = m, n)
//   all other orders vanish exactly.
// Hence |c|^2 = cos^2(s/2) at the origin and sin^2(s/2)/(pi*k)^2 on the three
// index families; total power sums to 1 for every s.
inline double triangle_mask_order_power(int m, int n, double s) {
    if (m == 0 && n == 0) {
        const double c = std::cos(s / 2.0);
        return c * c;
    }
    int k = 0;
    if (n == 0)
        k = m;
    else if (m == 0)
        k = n;
    else if (m == n)
        k = m;
    else
        return 0.0;
    const double amp = std::sin(s / 2.0);
    return amp * amp / (pi * pi * double(k) * double(k));
}

// Ideal first-order efficiency at step pi: 1/pi^2.
inline constexpr double kFirstOrderPowerAtPi = 0.10132118364233778; // 1/pi^2

// Ground-state energy of -hbar^2/2m d2/dx2 + V(x) on [x_lo, x_hi] with hard
// walls, by Sturm-sequence bisection on the central-difference tridiagonal
// matrix (diag 2t + V_i, off-diagonal -t, t = hbar^2 / 2 m dx^2). The Sturm
// count of a symmetric tridiagonal matrix at shift lambda is the number of
// negative values in the recurrence d_i = (a_i - lambda) - b^2 / d_{i-1};
// bisecting until the bracket collapses isolates the lowest eigenvalue
// without ever forming eigenvectors. Entirely independent of the FFT-based
// propagation it cross-checks.
template <typename Potential>
double fd_ground_energy(Potential&& v, double x_lo, double x_hi, int n, double mass,
                        double hbar) {
    const double dx = (x_hi - x_lo) / double(n + 1);  // interior points only
    const double t = hbar * hbar / (2.0 * mass * dx * dx);
    std::vector<double> diag(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) diag[size_t(i)] = 2.0 * t + v(x_lo + (i + 1) * dx);
    const auto count_below = [&](double lambda) {
        int count = 0;
        double d = 1.0;
        for (int i = 0; i < n; ++i) {
            d = diag[size_t(i)] - lambda - (i > 0 ? t * t / d : 0.0);
            if (d == 0.0) d = 1e-300;
            if (d < 0.0) ++count;
        }
        return count;
    };
    double lo = *std::min_element(diag.begin(), diag.end()) - 2.0 * t;
    double hi = *std::max_element(diag.begin(), diag.end()) + 2.0 * t;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (count_below(mid) >= 1)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace oracles

#include "bilat/doe.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "bilat/fft.hpp"
#include "bilat/units.hpp"

namespace bilat::doe {

using units::pi;

namespace {
constexpr double kSqrt3 = 1.7320508075688772;
constexpr int kMinSamplesPerCell = 16;
} // namespace

void GratingSpec::validate() const {
    if (!(triangle_side > 0.0))
        throw ValidationError("grating: triangle_side must be > 0");
    if (!(etch_depth > 0.0))
        throw ValidationError("grating: etch_depth must be > 0");
    if (!(incidence_angle >= 0.0 && incidence_angle < pi / 2))
        throw ValidationError("grating: incidence_angle must be in [0, pi/2)");
}

double PhaseMask::raised_area_fraction() const {
    std::size_t up = 0;
    for (double p : phase)
        if (p == 0.0)
            ++up;
    return double(up) / double(phase.size());
}

double EfficiencyTable::total() const {
    double sum = 0.0;
    for (const auto& o : orders)
        sum += o.efficiency;
    return sum;
}

double EfficiencyTable::efficiency(int m, int n) const {
    for (const auto& o : orders)
        if (o.m == m && o.n == n)
            return o.efficiency;
    return 0.0;
}

bool raised_at_fractional(double u, double v) {
    double uf = u - std::floor(u);
    double vf = v - std::floor(v);
    const double s = uf + vf;
    if (s < 1.0)
        return true;
    if (s > 1.0)
        return false;
    return uf > vf; // split boundary samples evenly between the two triangles
}

bool raised_at_point(const GratingSpec& spec, Vec2 r) {
    spec.validate();
    const double L = spec.triangle_side;
    // invert r = u*a1 + v*a2 with a1 = L*(1,0), a2 = L*(1/2, sqrt(3)/2)
    const double v = r.y / (L * kSqrt3 / 2.0);
    const double u = r.x / L - 0.5 * v;
    return raised_at_fractional(u, v);
}

Vec2 reciprocal_vector(const GratingSpec& spec, int m, int n) {
    const double G = 4.0 * pi / (kSqrt3 * spec.triangle_side);
    const Vec2 b1{G * kSqrt3 / 2.0, -G / 2.0};
    const Vec2 b2{0.0, G};
    return m * b1 + n * b2;
}

double first_order_angle(const GratingSpec& spec, double wavelength) {
    spec.validate();
    if (!(wavelength > 0.0))
        throw ValidationError("grating: wavelength must be > 0");
    const double s = 2.0 * wavelength / (kSqrt3 * spec.triangle_side);
    if (s >= 1.0)
        throw ValidationError("grating: first order is evanescent at this wavelength");
    return std::asin(s);
}

double reflection_phase_step(const GratingSpec& spec, double wavelength) {
    spec.validate();
    if (spec.mode != WavefrontMode::reflection)
        throw ValidationError("grating: phase step model covers reflection masks only");
    if (!(wavelength > 0.0))
        throw ValidationError("grating: wavelength must be > 0");
    return 4.0 * pi * spec.etch_depth * std::cos(spec.incidence_angle) / wavelength;
}

double compromise_depth(double lambda1, double lambda2) {
    if (!(lambda1 > 0.0) || !(lambda2 > 0.0))
        throw ValidationError("grating: wavelengths must be > 0");
    return (lambda1 + lambda2) / 8.0;
}

PhaseMask synthesize_grating_profile(const GratingSpec& spec, const Grid2D& grid,
                                     double wavelength) {
    spec.validate();
    grid.validate();

    const double L = spec.triangle_side;
    if (grid.pitch > L / kMinSamplesPerCell * (1.0 + 1e-12))
        throw ValidationError("grating: grid pitch coarser than triangle_side/16");

    const double span_x = grid.pitch * grid.nx;
    const double span_y = grid.pitch * grid.ny;
    const double cx_real = span_x / L;
    const double cy_real = span_y / L;
    const int cx = int(std::lround(cx_real));
    const int cy = int(std::lround(cy_real));
    if (cx < 1 || cy < 1 || std::abs(cx_real - cx) > 1e-9 || std::abs(cy_real - cy) > 1e-9)
        throw ValidationError("grating: grid does not span an integer number of unit cells");
    if (grid.nx % cx != 0 || grid.ny % cy != 0)
        throw ValidationError("grating: samples per unit cell must be an integer");

    const int sx = grid.nx / cx;
    const int sy = grid.ny / cy;
    if (sx != sy)
        throw ValidationError("grating: samples per cell must match on both grid axes");
    const int S = sx;
    if (S % 2 != 0)
        throw ValidationError("grating: samples per unit cell must be even");

    PhaseMask mask;
    mask.grid = grid;
    mask.triangle_side = L;
    mask.cells_x = cx;
    mask.cells_y = cy;
    mask.phi_step = reflection_phase_step(spec, wavelength);
    mask.phase.assign(grid.size(), 0.0);

    // Samples sit on cell corners, u = i/S, v = j/S. Interior samples are
    // classified by u+v < 1. Samples exactly on a triangle edge (i = 0, j = 0,
    // or i+j = S) alternate raised/recessed along the edge: each edge then
    // carries zero net weight and zero first-harmonic weight, so the two
    // levels stay balanced to one sample per cell and the six first-order
    // Fourier amplitudes of exp(i*phase) come out identical. The assignment
    // is invariant under the 120-degree map (i,j) -> (S-i-j mod S, i), which
    // permutes the three reciprocal-order families.
    for (int iy = 0; iy < grid.ny; ++iy) {
        const int j = iy % S;
        for (int ix = 0; ix < grid.nx; ++ix) {
            const int i = ix % S;
            bool up;
            if (i == 0)
                up = (j % 2 == 0);
            else if (j == 0)
                up = (i % 2 == 0);
            else if (i + j == S)
                up = (i % 2 == 0);
            else
                up = (i + j < S);
            if (!up)
                mask.phase[grid.index(ix, iy)] = mask.phi_step;
        }
    }
    return mask;
}

PhaseMask synthesize_grating_profile(const GratingSpec& spec, const Grid2D& grid) {
    // Design-point wavelength of this etch depth: 4*d*cos(theta), where the
    // round-trip step is exactly pi.
    const double lambda0 = 4.0 * spec.etch_depth * std::cos(spec.incidence_angle);
    return synthesize_grating_profile(spec, grid, lambda0);
}

EfficiencyTable order_efficiencies(const PhaseMask& mask, double phase_step) {
    mask.grid.validate();
    if (mask.cells_x < 1 || mask.cells_y < 1 ||
        mask.grid.nx % mask.cells_x != 0 || mask.grid.ny % mask.cells_y != 0)
        throw ValidationError("grating: mask cell bookkeeping is inconsistent");
    if (mask.phase.size() != mask.grid.size())
        throw ValidationError("grating: mask sample count does not match grid");
    if (!(mask.triangle_side > 0.0))
        throw ValidationError("grating: mask triangle_side must be > 0");

    const int nx = mask.grid.nx;
    const int ny = mask.grid.ny;
    std::vector<std::complex<double>> field(mask.phase.size());
    const std::complex<double> recessed = std::polar(1.0, phase_step);
    for (std::size_t i = 0; i < mask.phase.size(); ++i)
        field[i] = (mask.phase[i] == 0.0) ? std::complex<double>(1.0, 0.0) : recessed;

    fft::transform_2d(field, nx, ny, -1);

    // Sampling is exactly cell-periodic, so the spectrum is confined to bins
    // (m*cells_x mod nx, n*cells_y mod ny); bin power over N^2 gives |c_mn|^2.
    const int sx = nx / mask.cells_x;
    const int sy = ny / mask.cells_y;
    const double norm = double(nx) * double(ny);

    GratingSpec geom;
    geom.triangle_side = mask.triangle_side;
    geom.etch_depth = 1.0; // geometry only; not used by reciprocal_vector

    EfficiencyTable table;
    table.max_m = sx / 2;
    table.max_n = sy / 2;
    table.orders.reserve(std::size_t(sx) * sy);
    for (int n = -((sy - 1) / 2); n <= sy / 2; ++n) {
        for (int m = -((sx - 1) / 2); m <= sx / 2; ++m) {
            const int p = ((m * mask.cells_x) % nx + nx) % nx;
            const int q = ((n * mask.cells_y) % ny + ny) % ny;
            const std::complex<double> c = field[std::size_t(q) * nx + p] / norm;
            OrderEfficiency oe;
            oe.m = m;
            oe.n = n;
            const Vec2 g = reciprocal_vector(geom, m, n);
            oe.kx = g.x;
            oe.ky = g.y;
            oe.efficiency = std::norm(c);
            table.orders.push_back(oe);
        }
    }
    std::sort(table.orders.begin(), table.orders.end(),
              [](const OrderEfficiency& a, const OrderEfficiency& b) {
                  const double ga = a.kx * a.kx + a.ky * a.ky;
                  const double gb = b.kx * b.kx + b.ky * b.ky;
                  if (ga != gb)
                      return ga < gb;
                  if (a.m != b.m)
                      return a.m < b.m;
                  return a.n < b.n;
              });
    return table;
}

std::array<DiffractionOrder, 3> first_order_directions(const GratingSpec& spec,
                                                       double wavelength) {
    const double theta = first_order_angle(spec, wavelength);
    const double sin_t = std::sin(theta);
    const double cos_t = std::cos(theta);
    const double phi = reflection_phase_step(spec, wavelength);
    const double eta1 = std::pow(std::sin(phi / 2.0), 2) / (pi * pi);

    // A momentum-closed 120-degree triple: (1,0) + (0,1) + (-1,-1) = 0.
    const std::array<std::pair<int, int>, 3> idx{{{1, 0}, {0, 1}, {-1, -1}}};
    std::array<DiffractionOrder, 3> out{};
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto [m, n] = idx[i];
        Vec2 g = reciprocal_vector(spec, m, n);
        const double glen = g.norm();
        DiffractionOrder d;
        d.m = m;
        d.n = n;
        d.direction = {sin_t * g.x / glen, sin_t * g.y / glen, cos_t};
        d.efficiency = eta1;
        d.propagating = true;
        out[i] = d;
    }
    return out;
}

std::array<Vec2, 6> first_order_reciprocal_vectors(const GratingSpec& spec) {
    spec.validate();
    const std::array<std::pair<int, int>, 6> idx{
        {{1, 0}, {0, 1}, {-1, -1}, {-1, 0}, {0, -1}, {1, 1}}};
    std::array<Vec2, 6> out{};
    for (std::size_t i = 0; i < idx.size(); ++i)
        out[i] = reciprocal_vector(spec, idx[i].first, idx[i].second);
    return out;
}

} // namespace bilat::doe

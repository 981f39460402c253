#include "bilat/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "bilat/errors.hpp"
#include "bilat/fft.hpp"
#include "bilat/units.hpp"

namespace bilat::lattice {

using units::nm;
using units::pi;

namespace {

double wrap_pi(double x) { return std::remainder(x, 2.0 * pi); }

// Solve the n x n system a*x = b in place (partial pivoting).
void solve_dense(std::vector<double>& a, std::vector<double>& b, int n) {
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
        if (std::abs(a[piv * n + col]) < 1e-300)
            throw NumericError("lattice: singular normal equations in phase fit");
        if (piv != col) {
            for (int c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
            std::swap(b[col], b[piv]);
        }
        for (int r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] / a[col * n + col];
            for (int c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < n; ++c) s -= a[r * n + c] * b[c];
        b[r] = s / a[r * n + r];
    }
}

// Fringe reciprocal vectors of the beam pairs (0,1), (1,2), (2,0).
std::array<Vec2, 3> fringe_vectors(const LatticeConfig& config) {
    const Vec2 k0 = config.beams[0].transverse_wavevector();
    const Vec2 k1 = config.beams[1].transverse_wavevector();
    const Vec2 k2 = config.beams[2].transverse_wavevector();
    return {k0 - k1, k1 - k2, k2 - k0};
}

} // namespace

Vec2 BeamSpec::transverse_wavevector() const {
    const double kt = 2.0 * pi / wavelength * std::sin(polar_angle);
    return {kt * std::cos(azimuth), kt * std::sin(azimuth)};
}

void BeamSpec::validate() const {
    if (!(wavelength > 0.0))
        throw ValidationError("beam: wavelength must be > 0");
    if (!(polar_angle > 0.0) || !(polar_angle < pi / 2.0))
        throw ValidationError("beam: polar angle must lie in (0, pi/2)");
    if (!(amplitude >= 0.0))
        throw ValidationError("beam: amplitude must be >= 0");
    if (!std::isfinite(azimuth) || !std::isfinite(phase))
        throw ValidationError("beam: azimuth and phase must be finite");
}

void LatticeConfig::validate() const {
    if (beams.size() != 2 && beams.size() != 3)
        throw ValidationError("lattice: expected two or three beams");
    if (!(azimuth_tolerance > 0.0) || !(polar_tolerance > 0.0))
        throw ValidationError("lattice: tolerances must be > 0");
    for (const auto& b : beams) b.validate();
    for (std::size_t i = 1; i < beams.size(); ++i) {
        if (std::abs(beams[i].wavelength - beams[0].wavelength) > 1e-9 * beams[0].wavelength)
            throw ValidationError("lattice: beams must share one wavelength");
        if (std::abs(beams[i].polar_angle - beams[0].polar_angle) > polar_tolerance)
            throw ValidationError("lattice: beam polar angles do not match");
    }
    if (beams.size() == 3) {
        // Azimuth spacing must be 120 degrees up to a common rotation.
        double d1 = std::fmod(beams[1].azimuth - beams[0].azimuth, 2.0 * pi);
        double d2 = std::fmod(beams[2].azimuth - beams[0].azimuth, 2.0 * pi);
        if (d1 < 0.0) d1 += 2.0 * pi;
        if (d2 < 0.0) d2 += 2.0 * pi;
        const double lo = std::min(d1, d2), hi = std::max(d1, d2);
        if (std::abs(lo - 2.0 * pi / 3.0) > azimuth_tolerance ||
            std::abs(hi - 4.0 * pi / 3.0) > azimuth_tolerance)
            throw ValidationError("lattice: azimuths are not spaced 120 degrees apart");
    } else {
        const Vec2 dk = beams[0].transverse_wavevector() - beams[1].transverse_wavevector();
        if (dk.norm() < 1e-9 * beams[0].transverse_wavevector().norm())
            throw ValidationError("lattice: the two beams are collinear");
    }
}

IntensityImage interference_intensity(const LatticeConfig& config, const Grid2D& grid) {
    config.validate();
    grid.validate();
    IntensityImage img;
    img.grid = grid;
    img.wavelength = config.beams[0].wavelength;
    img.values.resize(grid.size());
    std::vector<Vec2> k(config.beams.size());
    for (std::size_t j = 0; j < config.beams.size(); ++j)
        k[j] = config.beams[j].transverse_wavevector();
    for (int iy = 0; iy < grid.ny; ++iy) {
        for (int ix = 0; ix < grid.nx; ++ix) {
            const Vec2 r{grid.x(ix), grid.y(iy)};
            std::complex<double> field{0.0, 0.0};
            for (std::size_t j = 0; j < config.beams.size(); ++j) {
                const double arg = k[j].dot(r) + config.beams[j].phase;
                field += config.beams[j].amplitude * std::complex<double>(std::cos(arg), std::sin(arg));
            }
            img.values[grid.index(ix, iy)] = std::norm(field);
        }
    }
    return img;
}

double lattice_constant_analytic(double wavelength, double polar_angle) {
    if (!(wavelength > 0.0))
        throw ValidationError("lattice: wavelength must be > 0");
    if (!(polar_angle > 0.0) || !(polar_angle < pi / 2.0))
        throw ValidationError("lattice: polar angle must lie in (0, pi/2)");
    return 2.0 * wavelength / (3.0 * std::sin(polar_angle));
}

Vec2 dominant_reciprocal_vector(const IntensityImage& image) {
    image.validate();
    const int nx = image.grid.nx, ny = image.grid.ny;
    const std::size_t n = image.grid.size();

    double mean = 0.0;
    for (double v : image.values) mean += v;
    mean /= double(n);

    // Hann window against spectral leakage of the non-periodic field of view.
    std::vector<std::complex<double>> data(n);
    for (int iy = 0; iy < ny; ++iy) {
        const double wy = 0.5 - 0.5 * std::cos(2.0 * pi * iy / ny);
        for (int ix = 0; ix < nx; ++ix) {
            const double wx = 0.5 - 0.5 * std::cos(2.0 * pi * ix / nx);
            data[image.grid.index(ix, iy)] = (image.at(ix, iy) - mean) * wx * wy;
        }
    }
    fft::transform_2d(data, nx, ny, -1);

    // Peak search outside a small exclusion zone around DC.
    const auto signed_index = [](int i, int nn) { return i <= nn / 2 ? i : i - nn; };
    double peak_power = 0.0, total = 0.0;
    int px = 0, py = 0;
    std::size_t counted = 0;
    for (int iy = 0; iy < ny; ++iy) {
        const int my = signed_index(iy, ny);
        for (int ix = 0; ix < nx; ++ix) {
            const int mx = signed_index(ix, nx);
            if (std::abs(mx) <= 2 && std::abs(my) <= 2) continue;
            const double p = std::norm(data[image.grid.index(ix, iy)]);
            total += p;
            ++counted;
            if (p > peak_power) {
                peak_power = p;
                px = ix;
                py = iy;
            }
        }
    }
    if (!(total > 0.0) || peak_power < 20.0 * total / double(counted))
        throw NumericError("lattice: no interference peak above the noise floor");

    // Sub-bin refinement: power centroid over the 3x3 neighborhood, in
    // signed-bin coordinates anchored at the peak (no re-wrap across edges).
    const double mx0 = signed_index(px, nx), my0 = signed_index(py, ny);
    double wsum = 0.0, fx = 0.0, fy = 0.0;
    for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
            const int ix = (px + dx + nx) % nx;
            const int iy = (py + dy + ny) % ny;
            const double p = std::norm(data[image.grid.index(ix, iy)]);
            wsum += p;
            fx += p * (mx0 + dx);
            fy += p * (my0 + dy);
        }
    }
    fx /= wsum;
    fy /= wsum;

    Vec2 g{2.0 * pi * fx / (nx * image.grid.pitch), 2.0 * pi * fy / (ny * image.grid.pitch)};
    if (g.x < 0.0 || (g.x == 0.0 && g.y < 0.0)) g = -1.0 * g;  // +-G are equivalent
    return g;
}

double lattice_constant_from_image(const IntensityImage& image) {
    const Vec2 g = dominant_reciprocal_vector(image);
    return 4.0 * pi / (std::sqrt(3.0) * g.norm());
}

double commensurability_mismatch(double a1, double a2) {
    if (!(a1 > 0.0) || !(a2 > 0.0))
        throw ValidationError("lattice: spacings must be > 0");
    return std::abs(a1 - a2) / (0.5 * (a1 + a2));
}

PhaseFit fit_lattice_phase(const IntensityImage& image, const LatticeConfig& reference) {
    image.validate();
    reference.validate();
    if (reference.beams.size() != 3)
        throw ValidationError("lattice: phase fit requires the three-beam geometry");

    const auto g = fringe_vectors(reference);

    // The image must show the reference's spatial frequency before a phase
    // comparison against it means anything.
    const Vec2 gdom = dominant_reciprocal_vector(image);
    double best = std::numeric_limits<double>::infinity();
    for (const Vec2& gm : g)
        best = std::min(best, std::abs(gdom.norm() - gm.norm()) / gm.norm());
    if (best > 0.02)
        throw ValidationError("lattice: image spatial frequency does not match the reference geometry");

    // Least squares of I(r) ~ c0 + sum_m [ cm cos(G_m . r) + sm sin(G_m . r) ]
    // via the 7x7 normal equations.
    constexpr int kCols = 7;
    std::vector<double> ata(kCols * kCols, 0.0);
    std::vector<double> atb(kCols, 0.0);
    const Grid2D& grid = image.grid;
    double col[kCols];
    for (int iy = 0; iy < grid.ny; ++iy) {
        for (int ix = 0; ix < grid.nx; ++ix) {
            const Vec2 r{grid.x(ix), grid.y(iy)};
            col[0] = 1.0;
            for (int m = 0; m < 3; ++m) {
                const double arg = g[m].dot(r);
                col[1 + 2 * m] = std::cos(arg);
                col[2 + 2 * m] = std::sin(arg);
            }
            const double v = image.at(ix, iy);
            for (int a = 0; a < kCols; ++a) {
                for (int b = a; b < kCols; ++b) ata[a * kCols + b] += col[a] * col[b];
                atb[a] += col[a] * v;
            }
        }
    }
    for (int a = 0; a < kCols; ++a)
        for (int b = 0; b < a; ++b) ata[a * kCols + b] = ata[b * kCols + a];
    solve_dense(ata, atb, kCols);

    PhaseFit fit;
    for (int m = 0; m < 3; ++m) {
        // cm cos + sm sin = R cos(G.r + delta) with delta = atan2(-sm, cm).
        const double cm = atb[1 + 2 * m], sm = atb[2 + 2 * m];
        const double delta = std::atan2(-sm, cm);
        const auto& bi = reference.beams[m];
        const auto& bj = reference.beams[(m + 1) % 3];
        fit.phases[m] = wrap_pi(delta - (bi.phase - bj.phase));
    }

    // Residual of the fitted model, relative to the image contrast.
    double mean = 0.0;
    for (double v : image.values) mean += v;
    mean /= double(grid.size());
    double rss = 0.0, contrast = 0.0;
    for (int iy = 0; iy < grid.ny; ++iy) {
        for (int ix = 0; ix < grid.nx; ++ix) {
            const Vec2 r{grid.x(ix), grid.y(iy)};
            double model = atb[0];
            for (int m = 0; m < 3; ++m) {
                const double arg = g[m].dot(r);
                model += atb[1 + 2 * m] * std::cos(arg) + atb[2 + 2 * m] * std::sin(arg);
            }
            const double dv = model - image.at(ix, iy);
            rss += dv * dv;
            contrast += (image.at(ix, iy) - mean) * (image.at(ix, iy) - mean);
        }
    }
    fit.fit_residual = std::sqrt(rss / contrast);
    if (fit.fit_residual > 0.75)
        throw NumericError("lattice: fringe model does not describe the image");

    // Translation d with image(r) = reference(r - d): each fringe family
    // shifts by -G_m . d, so the first two families give a 2x2 system.
    const double det = g[0].x * g[1].y - g[0].y * g[1].x;
    if (std::abs(det) < 1e-12 * g[0].norm() * g[1].norm())
        throw NumericError("lattice: degenerate fringe directions in phase fit");
    fit.displacement = {(-fit.phases[0] * g[1].y + fit.phases[1] * g[0].y) / det,
                        (-fit.phases[1] * g[0].x + fit.phases[0] * g[1].x) / det};

    fit.closure_residual = std::abs(wrap_pi(fit.phases[0] + fit.phases[1] + fit.phases[2]));
    fit.phases_consistent = fit.closure_residual < 0.05;
    fit.sites = std::max({std::abs(fit.phases[0]), std::abs(fit.phases[1]),
                          std::abs(fit.phases[2])}) / (2.0 * pi);
    return fit;
}

void PositionSeries::validate() const {
    if (timestamps.size() != positions.size())
        throw ValidationError("series: timestamp and position counts differ");
    if (timestamps.size() < 2)
        throw ValidationError("series: need at least two samples");
    for (std::size_t i = 1; i < timestamps.size(); ++i)
        if (!(timestamps[i] > timestamps[i - 1]))
            throw ValidationError("series: timestamps must be strictly increasing");
}

namespace {

Vec2 interpolate(const PositionSeries& s, double t) {
    const auto it = std::upper_bound(s.timestamps.begin(), s.timestamps.end(), t);
    std::size_t hi = std::size_t(it - s.timestamps.begin());
    if (hi == 0) hi = 1;
    if (hi == s.timestamps.size()) hi = s.timestamps.size() - 1;
    const std::size_t lo = hi - 1;
    const double u = (t - s.timestamps[lo]) / (s.timestamps[hi] - s.timestamps[lo]);
    return s.positions[lo] + u * (s.positions[hi] - s.positions[lo]);
}

// Centered moving mean over |t_j - t_i| <= half_window.
std::vector<Vec2> moving_mean(const std::vector<double>& t, const std::vector<Vec2>& p,
                              double half_window) {
    const std::size_t n = t.size();
    std::vector<Vec2> mm(n);
    std::size_t lo = 0, hi = 0;
    Vec2 acc{};
    for (std::size_t i = 0; i < n; ++i) {
        while (hi < n && t[hi] <= t[i] + half_window) acc = acc + p[hi++];
        while (t[lo] < t[i] - half_window) acc = acc - p[lo++];
        mm[i] = (1.0 / double(hi - lo)) * acc;
    }
    return mm;
}

double rms_about(const std::vector<Vec2>& p, const std::vector<Vec2>& ref) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const Vec2 d = p[i] - ref[i];
        s += d.dot(d);
    }
    return std::sqrt(s / double(p.size()));
}

} // namespace

StabilityReport stability_report(const PositionSeries& series1, const PositionSeries& series2,
                                 double short_window) {
    series1.validate();
    series2.validate();
    if (!(short_window > 0.0))
        throw ValidationError("stability: short_window must be > 0");

    const double t_lo = std::max(series1.timestamps.front(), series2.timestamps.front());
    const double t_hi = std::min(series1.timestamps.back(), series2.timestamps.back());
    if (!(t_lo < t_hi))
        throw ValidationError("stability: the series do not overlap in time");

    // Resample onto the coarser series' timestamps: interpolation within the
    // finer series is well conditioned, extrapolation never happens.
    const auto count_in = [&](const PositionSeries& s) {
        std::size_t c = 0;
        for (double t : s.timestamps) c += (t >= t_lo && t <= t_hi);
        return c;
    };
    const bool first_is_coarser = count_in(series1) <= count_in(series2);
    const PositionSeries& coarse = first_is_coarser ? series1 : series2;
    const PositionSeries& fine = first_is_coarser ? series2 : series1;

    std::vector<double> t;
    std::vector<Vec2> pc, pf;
    for (std::size_t i = 0; i < coarse.timestamps.size(); ++i) {
        const double ti = coarse.timestamps[i];
        if (ti < t_lo || ti > t_hi) continue;
        t.push_back(ti);
        pc.push_back(coarse.positions[i]);
        pf.push_back(interpolate(fine, ti));
    }
    if (t.size() < 8)
        throw ValidationError("stability: series overlap too short");
    const std::vector<Vec2>& p1 = first_is_coarser ? pc : pf;
    const std::vector<Vec2>& p2 = first_is_coarser ? pf : pc;

    StabilityReport rep;
    const auto mm1 = moving_mean(t, p1, short_window / 2.0);
    const auto mm2 = moving_mean(t, p2, short_window / 2.0);
    rep.short_term_rms1 = rms_about(p1, mm1);
    rep.short_term_rms2 = rms_about(p2, mm2);

    const auto drift_of = [](const std::vector<Vec2>& mm) {
        double xlo = mm[0].x, xhi = mm[0].x, ylo = mm[0].y, yhi = mm[0].y;
        for (const Vec2& v : mm) {
            xlo = std::min(xlo, v.x);
            xhi = std::max(xhi, v.x);
            ylo = std::min(ylo, v.y);
            yhi = std::max(yhi, v.y);
        }
        return std::hypot(xhi - xlo, yhi - ylo);
    };
    rep.drift1 = drift_of(mm1);
    rep.drift2 = drift_of(mm2);

    std::vector<Vec2> diff(t.size());
    Vec2 dmean{};
    for (std::size_t i = 0; i < t.size(); ++i) {
        diff[i] = p1[i] - p2[i];
        dmean = dmean + diff[i];
    }
    dmean = (1.0 / double(t.size())) * dmean;
    double s = 0.0;
    for (const Vec2& d : diff) {
        const Vec2 e = d - dmean;
        s += e.dot(e);
    }
    rep.differential_rms = std::sqrt(s / double(t.size()));

    const double per_series = 0.5 * (rep.short_term_rms1 + rep.short_term_rms2);
    rep.rejection_ratio = rep.differential_rms > 0.0
                              ? per_series / rep.differential_rms
                              : (per_series > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    return rep;
}

void write_position_series_csv(std::ostream& out, const PositionSeries& series) {
    series.validate();
    out << std::setprecision(12);
    if (!series.label.empty()) out << "# label: " << series.label << "\n";
    out << "t_s,x_nm,y_nm\n";
    for (std::size_t i = 0; i < series.timestamps.size(); ++i)
        out << series.timestamps[i] << ',' << series.positions[i].x / nm << ','
            << series.positions[i].y / nm << "\n";
}

PositionSeries read_position_series_csv(std::istream& in) {
    PositionSeries series;
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string tag = "# label:";
            if (line.rfind(tag, 0) == 0) {
                std::size_t b = tag.size();
                while (b < line.size() && line[b] == ' ') ++b;
                series.label = line.substr(b);
            }
            continue;
        }
        if (!header_seen) {
            std::string h = line;
            h.erase(std::remove_if(h.begin(), h.end(), [](char c) { return c == ' ' || c == '\r'; }),
                    h.end());
            if (h != "t_s,x_nm,y_nm")
                throw ValidationError("series csv: line " + std::to_string(lineno) +
                                      ": expected header t_s,x_nm,y_nm");
            header_seen = true;
            continue;
        }
        std::istringstream row(line);
        double t, x, y;
        char c1, c2;
        if (!(row >> t >> c1 >> x >> c2 >> y) || c1 != ',' || c2 != ',')
            throw ValidationError("series csv: line " + std::to_string(lineno) +
                                  ": expected t_s,x_nm,y_nm row");
        series.timestamps.push_back(t);
        series.positions.push_back({x * nm, y * nm});
    }
    series.validate();
    return series;
}

void write_stability_report_csv(std::ostream& out, const StabilityReport& report) {
    out << std::setprecision(12);
    out << "metric,value\n";
    out << "short_term_rms1_nm," << report.short_term_rms1 / nm << "\n";
    out << "short_term_rms2_nm," << report.short_term_rms2 / nm << "\n";
    out << "drift1_nm," << report.drift1 / nm << "\n";
    out << "drift2_nm," << report.drift2 / nm << "\n";
    out << "differential_rms_nm," << report.differential_rms / nm << "\n";
    out << "rejection_ratio," << report.rejection_ratio << "\n";
}

} // namespace bilat::lattice

#include "bilat/lens.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "bilat/units.hpp"

namespace bilat::lens {

using units::pi;

double Surface::sag(double y) const {
    if (kind == Kind::flat || kind == Kind::ideal_lens)
        return 0.0;
    const double c = 1.0 / curvature_radius;
    const double k = (kind == Kind::conic_asphere) ? conic_constant : 0.0;
    const double arg = 1.0 - (1.0 + k) * c * c * y * y;
    if (arg <= 0.0)
        throw VignettingError("lens: ray misses surface (beyond conic domain)");
    double s = c * y * y / (1.0 + std::sqrt(arg));
    for (const auto& [order, a] : aspheric_coeffs)
        s += a * std::pow(y, order);
    return s;
}

double Surface::sag_slope(double y) const {
    if (kind == Kind::flat || kind == Kind::ideal_lens)
        return 0.0;
    const double c = 1.0 / curvature_radius;
    const double k = (kind == Kind::conic_asphere) ? conic_constant : 0.0;
    const double arg = 1.0 - (1.0 + k) * c * c * y * y;
    if (arg <= 0.0)
        throw VignettingError("lens: ray misses surface (beyond conic domain)");
    double s = c * y / std::sqrt(arg);
    for (const auto& [order, a] : aspheric_coeffs)
        s += a * order * std::pow(y, order - 1);
    return s;
}

double Surface::focal_at(double wavelength) const {
    if (power_glass.is_vacuum() || power_reference <= 0.0)
        return focal_length;
    return focal_length * (power_glass.index(power_reference) - 1.0) /
           (power_glass.index(wavelength) - 1.0);
}

void Surface::validate() const {
    if (!(aperture_radius > 0.0))
        throw ValidationError("lens: surface aperture_radius must be > 0");
    if (kind == Kind::spherical || kind == Kind::conic_asphere) {
        if (curvature_radius == 0.0 || !std::isfinite(curvature_radius))
            throw ValidationError("lens: curved surface needs a finite nonzero radius");
    }
    if (kind == Kind::ideal_lens && focal_length == 0.0)
        throw ValidationError("lens: ideal_lens needs a nonzero focal length");
    if (thickness < 0.0)
        throw ValidationError("lens: surface thickness must be >= 0");
    medium.validate();
}

void OpticalSystem::validate() const {
    if (surfaces.empty())
        throw ValidationError("lens: system has no surfaces");
    if (first_gap < 0.0)
        throw ValidationError("lens: first_gap must be >= 0");
    ambient.validate();
    for (const auto& s : surfaces)
        s.validate();
}

namespace {

struct RayState {
    double z, y;
    double dz, dy;  // unit direction, dz > 0
};

// Newton iteration for the intersection of the ray with surface sag about the
// vertex plane at z = vz. Returns the path length along the ray.
double intersect(const Surface& surf, const RayState& r, double vz) {
    double t = (vz - r.z) / r.dz;  // exact for flat and ideal surfaces
    if (surf.kind == Surface::Kind::flat || surf.kind == Surface::Kind::ideal_lens) {
        if (t < -1e-12)
            throw TraceError("lens: ray started past a surface");
        return t;
    }
    for (int it = 0; it < 64; ++it) {
        const double y = r.y + t * r.dy;
        const double f = (r.z + t * r.dz) - (vz + surf.sag(y));
        const double fp = r.dz - surf.sag_slope(y) * r.dy;
        if (fp == 0.0)
            throw TraceError("lens: ray grazes surface (no intersection)");
        const double step = f / fp;
        t -= step;
        if (std::abs(step) < 1e-16 * std::max(1.0, std::abs(t)))
            break;
    }
    if (t < -1e-12)
        throw TraceError("lens: ray started past a surface");
    return t;
}

} // namespace

TraceResult trace_ray(const OpticalSystem& system, const Ray& ray) {
    system.validate();
    if (!(ray.wavelength > 0.0))
        throw ValidationError("lens: ray wavelength must be > 0");
    if (!(std::abs(ray.angle) < pi / 2))
        throw ValidationError("lens: ray angle must lie in (-pi/2, pi/2)");

    RayState r{0.0, ray.height, std::cos(ray.angle), std::sin(ray.angle)};
    double n1 = system.ambient.index(ray.wavelength);
    double vz = system.first_gap;

    TraceResult out;
    out.path.reserve(system.surfaces.size());
    for (std::size_t i = 0; i < system.surfaces.size(); ++i) {
        const Surface& surf = system.surfaces[i];
        const double t = intersect(surf, r, vz);
        r.z += t * r.dz;
        r.y += t * r.dy;
        if (std::abs(r.y) > surf.aperture_radius * (1.0 + 1e-12)) {
            std::ostringstream os;
            os << "lens: ray clipped at surface " << i << " (|y| = " << std::abs(r.y)
               << " m, aperture " << surf.aperture_radius << " m)";
            throw VignettingError(os.str());
        }

        const double n2 = surf.medium.index(ray.wavelength);
        if (surf.kind == Surface::Kind::ideal_lens) {
            // exact stigmatic mapping in tangent space
            const double tan_new = r.dy / r.dz - r.y / surf.focal_at(ray.wavelength);
            const double norm = std::hypot(1.0, tan_new);
            r.dz = 1.0 / norm;
            r.dy = tan_new / norm;
        } else {
            // inward unit normal (opposing the incoming ray)
            const double m = surf.sag_slope(r.y);
            const double nn = std::hypot(1.0, m);
            const double Nz = -1.0 / nn, Ny = m / nn;
            const double eta = n1 / n2;
            const double c1 = -(r.dz * Nz + r.dy * Ny);
            const double c2sq = 1.0 - eta * eta * (1.0 - c1 * c1);
            if (c2sq < 0.0) {
                std::ostringstream os;
                os << "lens: total internal reflection at surface " << i;
                throw TraceError(os.str());
            }
            const double c2 = std::sqrt(c2sq);
            r.dz = eta * r.dz + (eta * c1 - c2) * Nz;
            r.dy = eta * r.dy + (eta * c1 - c2) * Ny;
            if (r.dz <= 0.0)
                throw TraceError("lens: ray refracted backward");
            const double len = std::hypot(r.dz, r.dy);
            r.dz /= len;
            r.dy /= len;
        }
        out.path.push_back({r.z, r.y, std::atan2(r.dy, r.dz)});
        n1 = n2;
        vz += surf.thickness;
    }

    out.exit_z = r.z;
    out.exit_height = r.y;
    out.exit_angle = std::atan2(r.dy, r.dz);
    if (r.dy != 0.0)
        out.crossing_z = r.z - r.y * r.dz / r.dy;
    return out;
}

double marginal_crossing(const OpticalSystem& system, double wavelength, double height) {
    const auto tr = trace_ray(system, Ray{height, 0.0, wavelength});
    if (!tr.crossing_z)
        throw TraceError("lens: marginal ray exits parallel to the axis");
    return *tr.crossing_z;
}

double paraxial_focus(const OpticalSystem& system, double wavelength) {
    system.validate();
    double n = system.ambient.index(wavelength);
    double y = 1.0, w = 0.0;  // w = n * u (reduced angle), parallel input
    double z = system.first_gap;
    for (const Surface& surf : system.surfaces) {
        double power = 0.0;
        switch (surf.kind) {
        case Surface::Kind::flat:
            break;
        case Surface::Kind::spherical:
        case Surface::Kind::conic_asphere:
            power = (surf.medium.index(wavelength) - n) / surf.curvature_radius;
            break;
        case Surface::Kind::ideal_lens:
            power = n / surf.focal_at(wavelength);
            break;
        }
        w -= power * y;
        n = surf.medium.index(wavelength);
        y += (surf.thickness / n) * w;
        z += surf.thickness;
    }
    if (!(w < 0.0))
        throw TraceError("lens: system has no real forward paraxial focus");
    // crossing of the exit ray; lies inside the system when y already < 0
    return z + y * n / (-w);
}

FocusReport aberration_report(const OpticalSystem& system, double lambda1,
                              double lambda2, double h1, double h2) {
    FocusReport r;
    r.wavelength1 = lambda1;
    r.wavelength2 = lambda2;
    r.height1 = h1;
    r.height2 = h2;
    r.paraxial_z1 = paraxial_focus(system, lambda1);
    r.paraxial_z2 = paraxial_focus(system, lambda2);
    r.crossing_z1 = marginal_crossing(system, lambda1, h1);
    r.crossing_z2 = marginal_crossing(system, lambda2, h2);
    r.lsa1 = r.paraxial_z1 - r.crossing_z1;
    r.lsa2 = r.paraxial_z2 - r.crossing_z2;
    r.lca = r.paraxial_z1 - r.paraxial_z2;
    r.delta_f = r.crossing_z1 - r.crossing_z2;
    return r;
}

void write_focus_report_csv(std::ostream& out, const FocusReport& r) {
    out << "lambda_nm,height_mm,crossing_mm,lsa_mm,lca_mm,delta_f_mm\n";
    const auto row = [&](double lam, double h, double cross, double lsa) {
        out << lam / units::nm << ',' << h / units::mm << ',' << cross / units::mm
            << ',' << lsa / units::mm << ',' << r.lca / units::mm << ','
            << r.delta_f / units::mm << '\n';
    };
    row(r.wavelength1, r.height1, r.crossing_z1, r.lsa1);
    row(r.wavelength2, r.height2, r.crossing_z2, r.lsa2);
}

OpticalSystem focusing_group(const FocusingGroupSpec& g) {
    if (!(g.asphere_f > 0.0))
        throw ValidationError("lens: asphere focal length must be > 0");
    const auto fs = glass::load_glass("fused_silica");
    const auto vac = glass::vacuum();

    OpticalSystem sys;
    sys.name = "focusing-group";
    sys.ambient = vac;

    if (g.weak_f > 0.0) {
        const auto bk7 = glass::load_glass("BK7");
        const double n = bk7.index(g.design_wavelength);
        // Flat side faces the collimated input on purpose: this orientation
        // maximises the undercorrected spherical aberration of the singlet,
        // which is the knob that offsets the chromatic focal split downstream.
        Surface front;
        front.kind = Surface::Kind::flat;
        front.aperture_radius = g.weak_aperture;
        front.medium = bk7;
        front.thickness = 0.004;
        Surface back;  // convex exit
        back.kind = Surface::Kind::spherical;
        back.curvature_radius = -(n - 1.0) * g.weak_f;
        back.aperture_radius = g.weak_aperture;
        back.medium = vac;
        back.thickness = g.d1;
        sys.surfaces.push_back(front);
        sys.surfaces.push_back(back);
    }

    Surface asph;  // stigmatic asphere: ideal mapping, fused-silica dispersion
    asph.kind = Surface::Kind::ideal_lens;
    asph.focal_length = g.asphere_f;
    asph.power_glass = fs;
    asph.power_reference = g.design_wavelength;
    asph.aperture_radius = g.asphere_aperture;
    asph.medium = vac;
    asph.thickness = g.asphere_thickness + g.d2;  // lens body plus air gap
    sys.surfaces.push_back(asph);

    Surface w_front;
    w_front.kind = Surface::Kind::flat;
    w_front.aperture_radius = g.window_aperture;
    w_front.medium = fs;
    w_front.thickness = g.window_thickness;
    Surface w_back;
    w_back.kind = Surface::Kind::flat;
    w_back.aperture_radius = g.window_aperture;
    w_back.medium = vac;
    w_back.thickness = 0.0;
    sys.surfaces.push_back(w_front);
    sys.surfaces.push_back(w_back);
    return sys;
}

OpticalSystem with_collimator(const OpticalSystem& group, double f1,
                              double collimator_aperture) {
    if (!(f1 > 0.0))
        throw ValidationError("lens: collimator focal length must be > 0");
    OpticalSystem sys = group;
    sys.name = group.name.empty() ? "collimated" : group.name + "+collimator";
    Surface coll;
    coll.kind = Surface::Kind::ideal_lens;
    coll.focal_length = f1;
    coll.aperture_radius = collimator_aperture;
    coll.medium = sys.ambient;
    coll.thickness = f1;  // grating plane sits at the front focus
    sys.surfaces.insert(sys.surfaces.begin(), coll);
    sys.first_gap = f1;
    return sys;
}

BalanceResult balance_aberrations(const BalanceProblem& p) {
    if (!(p.f_min < p.f_max) || !(p.d1_min < p.d1_max))
        throw ValidationError("lens: balance bounds are empty");

    const auto evaluate = [&](double f, double d1) -> double {
        FocusingGroupSpec g = p.group;
        g.weak_f = f;
        g.d1 = d1;
        try {
            const auto rep =
                aberration_report(focusing_group(g), p.lambda1, p.lambda2, p.h1, p.h2);
            return rep.delta_f;
        } catch (const Error&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    };

    double best_f = p.group.weak_f;
    double best_d1 = p.group.d1;
    const double start = evaluate(best_f, best_d1);
    if (std::isnan(start))
        throw TraceError("lens: starting configuration does not trace");
    double best = start;

    double f_lo = p.f_min, f_hi = p.f_max;
    double d_lo = p.d1_min, d_hi = p.d1_max;
    constexpr int kGrid = 13;
    for (int round = 0; round < 7; ++round) {
        for (int i = 0; i < kGrid; ++i) {
            const double f = f_lo + (f_hi - f_lo) * i / (kGrid - 1);
            for (int j = 0; j < kGrid; ++j) {
                const double d1 = d_lo + (d_hi - d_lo) * j / (kGrid - 1);
                const double df = evaluate(f, d1);
                if (!std::isnan(df) && std::abs(df) < std::abs(best)) {
                    best = df;
                    best_f = f;
                    best_d1 = d1;
                }
            }
        }
        // shrink the window around the incumbent, clamped to the bounds
        const double f_span = (f_hi - f_lo) / 4.0;
        const double d_span = (d_hi - d_lo) / 4.0;
        f_lo = std::max(p.f_min, best_f - f_span / 2.0);
        f_hi = std::min(p.f_max, best_f + f_span / 2.0);
        d_lo = std::max(p.d1_min, best_d1 - d_span / 2.0);
        d_hi = std::min(p.d1_max, best_d1 + d_span / 2.0);
    }

    BalanceResult res;
    res.group = p.group;
    res.group.weak_f = best_f;
    res.group.d1 = best_d1;
    res.system = focusing_group(res.group);
    res.f_weak = best_f;
    res.d1 = best_d1;
    res.delta_f = best;
    res.start_delta_f = start;
    res.met_target = std::abs(best) <= p.target;
    return res;
}

double exit_angle(const OpticalSystem& system, double entrance_angle, double wavelength) {
    const auto tr = trace_ray(system, Ray{0.0, entrance_angle, wavelength});
    return std::abs(tr.exit_angle);
}

OpticalSystem reversed(const OpticalSystem& system) {
    system.validate();
    const std::size_t n = system.surfaces.size();
    OpticalSystem rev;
    rev.name = system.name.empty() ? "reversed" : system.name + "-reversed";
    rev.ambient = system.surfaces.back().medium;
    rev.first_gap = system.surfaces.back().thickness;
    rev.surfaces.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Surface& src = system.surfaces[n - 1 - i];
        Surface s = src;
        s.curvature_radius = -src.curvature_radius;
        for (auto& [order, a] : s.aspheric_coeffs)
            a = -a;
        s.medium = (n - 1 - i == 0) ? system.ambient : system.surfaces[n - 2 - i].medium;
        s.thickness = (n - 1 - i == 0) ? system.first_gap : system.surfaces[n - 2 - i].thickness;
        rev.surfaces[i] = s;
    }
    return rev;
}

namespace {

const char* kind_name(Surface::Kind k) {
    switch (k) {
    case Surface::Kind::flat: return "flat";
    case Surface::Kind::spherical: return "spherical";
    case Surface::Kind::conic_asphere: return "conic_asphere";
    case Surface::Kind::ideal_lens: return "ideal_lens";
    }
    return "?";
}

Surface::Kind kind_from(const std::string& s, const std::string& where) {
    if (s == "flat") return Surface::Kind::flat;
    if (s == "spherical") return Surface::Kind::spherical;
    if (s == "conic_asphere") return Surface::Kind::conic_asphere;
    if (s == "ideal_lens") return Surface::Kind::ideal_lens;
    throw ValidationError("lens: " + where + ": unknown surface kind '" + s + "'");
}

} // namespace

OpticalSystem load_prescription(std::istream& in, const std::string& label) {
    OpticalSystem sys;
    sys.ambient = glass::vacuum();
    std::string line;
    int lineno = 0;
    bool any = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        std::string head;
        if (!(ls >> head))
            continue;
        const auto where = [&] {
            std::ostringstream os;
            os << label << ":" << lineno;
            return os.str();
        }();
        if (head == "name") {
            std::string eq;
            ls >> eq >> sys.name;
        } else if (head == "ambient") {
            std::string eq, g;
            if (!(ls >> eq >> g) || eq != "=")
                throw ValidationError("lens: " + where + ": expected 'ambient = <glass>'");
            sys.ambient = glass::load_glass(g);
        } else if (head == "first_gap") {
            std::string eq;
            if (!(ls >> eq >> sys.first_gap) || eq != "=")
                throw ValidationError("lens: " + where + ": expected 'first_gap = <m>'");
        } else if (head == "surface") {
            Surface s;
            s.medium = glass::vacuum();
            std::string tok;
            bool have_kind = false;
            while (ls >> tok) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos)
                    throw ValidationError("lens: " + where + ": expected key=value, got '" + tok + "'");
                const std::string key = tok.substr(0, eq);
                const std::string val = tok.substr(eq + 1);
                try {
                    if (key == "kind") {
                        s.kind = kind_from(val, where);
                        have_kind = true;
                    } else if (key == "R") {
                        s.curvature_radius = std::stod(val);
                    } else if (key == "k") {
                        s.conic_constant = std::stod(val);
                    } else if (key == "f") {
                        s.focal_length = std::stod(val);
                    } else if (key == "pglass") {
                        s.power_glass = glass::load_glass(val);
                    } else if (key == "pref") {
                        s.power_reference = std::stod(val);
                    } else if (key == "ap") {
                        s.aperture_radius = std::stod(val);
                    } else if (key == "t") {
                        s.thickness = std::stod(val);
                    } else if (key == "glass") {
                        s.medium = glass::load_glass(val);
                    } else if (key == "asph") {
                        std::istringstream as(val);
                        std::string term;
                        while (std::getline(as, term, ';')) {
                            const auto colon = term.find(':');
                            if (colon == std::string::npos)
                                throw ValidationError("lens: " + where + ": asph terms are order:coeff");
                            s.aspheric_coeffs.emplace_back(std::stoi(term.substr(0, colon)),
                                                           std::stod(term.substr(colon + 1)));
                        }
                    } else {
                        throw ValidationError("lens: " + where + ": unknown key '" + key + "'");
                    }
                } catch (const std::invalid_argument&) {
                    throw ValidationError("lens: " + where + ": bad number in '" + tok + "'");
                }
            }
            if (!have_kind)
                throw ValidationError("lens: " + where + ": surface needs kind=...");
            sys.surfaces.push_back(std::move(s));
            any = true;
        } else {
            throw ValidationError("lens: " + where + ": unknown directive '" + head + "'");
        }
    }
    if (!any)
        throw ValidationError("lens: " + label + ": prescription has no surfaces");
    sys.validate();
    return sys;
}

OpticalSystem load_prescription_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("lens: cannot open " + path);
    return load_prescription(in, path);
}

void save_prescription(std::ostream& out, const OpticalSystem& sys) {
    out.precision(12);
    out << "# lens prescription; lengths in meters\n";
    if (!sys.name.empty())
        out << "name = " << sys.name << '\n';
    out << "ambient = " << sys.ambient.name << '\n';
    out << "first_gap = " << sys.first_gap << '\n';
    for (const Surface& s : sys.surfaces) {
        out << "surface kind=" << kind_name(s.kind);
        if (s.kind == Surface::Kind::spherical || s.kind == Surface::Kind::conic_asphere)
            out << " R=" << s.curvature_radius;
        if (s.kind == Surface::Kind::conic_asphere)
            out << " k=" << s.conic_constant;
        if (s.kind == Surface::Kind::ideal_lens) {
            out << " f=" << s.focal_length;
            if (!s.power_glass.is_vacuum())
                out << " pglass=" << s.power_glass.name << " pref=" << s.power_reference;
        }
        if (!s.aspheric_coeffs.empty()) {
            out << " asph=";
            for (std::size_t i = 0; i < s.aspheric_coeffs.size(); ++i) {
                if (i)
                    out << ';';
                out << s.aspheric_coeffs[i].first << ':' << s.aspheric_coeffs[i].second;
            }
        }
        out << " ap=" << s.aperture_radius << " t=" << s.thickness
            << " glass=" << s.medium.name << '\n';
    }
}

} // namespace bilat::lens

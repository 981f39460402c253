#pragma once
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bilat/errors.hpp"
#include "bilat/glass.hpp"

// Meridional (y-z plane) sequential ray tracing. z is the optical axis and
// light travels toward +z. Radii are signed: R > 0 when the center of
// curvature lies on the +z side of the vertex. Each surface names the medium
// FOLLOWING it; the medium before the first surface is the system ambient.
namespace bilat::lens {

struct Surface {
    enum class Kind { flat, spherical, conic_asphere, ideal_lens };

    Kind kind = Kind::flat;
    double curvature_radius = 0.0;  // m; spherical / conic_asphere
    double conic_constant = 0.0;    // conic_asphere
    std::vector<std::pair<int, double>> aspheric_coeffs;  // sag += a * y^order
    double focal_length = 0.0;      // m; ideal_lens (exact tangent mapping)
    // Chromatic power of an ideal_lens: when power_glass is a real glass the
    // focal length scales as f(lambda) = focal_length * (n(power_reference) -
    // 1) / (n(lambda) - 1), the thin-lens dispersion of an element blanked
    // from that glass. A vacuum power_glass keeps the focal length fixed.
    glass::GlassModel power_glass;
    double power_reference = 0.0;   // m; wavelength at which focal_length holds
    double aperture_radius = 0.0;   // m
    glass::GlassModel medium;       // medium after this surface
    double thickness = 0.0;         // m, vertex-to-vertex gap to the next surface

    // ideal_lens focal length at the given wavelength
    double focal_at(double wavelength) const;

    double sag(double y) const;
    double sag_slope(double y) const;
    void validate() const;
};

struct OpticalSystem {
    std::string name;
    glass::GlassModel ambient;  // medium before the first surface
    double first_gap = 0.0;     // m from the entrance reference plane (z = 0)
    std::vector<Surface> surfaces;

    void validate() const;
};

struct Ray {
    double height = 0.0;      // m at the entrance reference plane
    double angle = 0.0;       // rad to the axis, positive toward +y
    double wavelength = 0.0;  // m
};

struct TracePoint {
    double z = 0.0;           // m, absolute intersection position
    double y = 0.0;           // m
    double angle_after = 0.0; // rad, ray angle after refraction
};

struct TraceResult {
    std::vector<TracePoint> path;       // one entry per surface
    double exit_z = 0.0;                // m, last intersection
    double exit_height = 0.0;           // m
    double exit_angle = 0.0;            // rad
    std::optional<double> crossing_z;   // m, where the exit ray meets the axis
};

// Exact Snell refraction surface by surface; throws TraceError on total
// internal reflection, VignettingError when a ray exceeds an aperture or
// misses a surface entirely.
TraceResult trace_ray(const OpticalSystem& system, const Ray& ray);

// Axis crossing of a parallel input ray at the given height (the h -> 0
// limit of which is paraxial_focus).
double marginal_crossing(const OpticalSystem& system, double wavelength, double height);

// Paraxial (2x2 transfer-matrix) focus of a parallel input bundle, measured
// from the entrance reference plane. Throws TraceError for systems without a
// real forward focus.
double paraxial_focus(const OpticalSystem& system, double wavelength);

// Longitudinal aberration bookkeeping between two design wavelengths traced
// at their respective beam heights.
//   lsa   = paraxial - marginal crossing at one wavelength (> 0 when the
//           marginal ray crosses short of the paraxial focus, the
//           undercorrected sign for a positive singlet)
//   lca   = paraxial(lambda1) - paraxial(lambda2) (< 0 for normal dispersion
//           when lambda1 < lambda2)
//   delta_f = crossing(lambda1, h1) - crossing(lambda2, h2)
//           = lca + (lsa2 - lsa1); negative when the longer wavelength
//           focuses farther from the lens.
struct FocusReport {
    double wavelength1 = 0.0, wavelength2 = 0.0;  // m
    double height1 = 0.0, height2 = 0.0;          // m
    double paraxial_z1 = 0.0, paraxial_z2 = 0.0;  // m
    double crossing_z1 = 0.0, crossing_z2 = 0.0;  // m
    double lsa1 = 0.0, lsa2 = 0.0;                // m
    double lca = 0.0;                             // m
    double delta_f = 0.0;                         // m
};

FocusReport aberration_report(const OpticalSystem& system, double lambda1,
                              double lambda2, double h1, double h2);

void write_focus_report_csv(std::ostream& out, const FocusReport& report);

// The final focusing group: weak BK7 plano-convex lens (omitted when
// weak_f <= 0, flat side toward the collimated input), spacing d1, a
// stigmatic asphere modeled as an ideal element whose power carries the
// fused-silica dispersion (f quoted at design_wavelength), spacing d2 past
// the asphere body, flat fused-silica chamber window. The asphere model has
// zero spherical aberration by construction, so without the weak lens the
// focal split between the two colors is purely chromatic plus the window's
// plate aberration.
struct FocusingGroupSpec {
    double weak_f = 0.175;                // m, BK7 plano-convex; <= 0 omits it
    double d1 = 0.050;                    // m, weak lens to asphere
    double asphere_f = 0.040;             // m
    double asphere_thickness = 0.016;     // m, center thickness
    double d2 = 0.006;                    // m, asphere to window
    double window_thickness = 0.005;      // m, fused silica
    double design_wavelength = 872.5e-9;  // m
    double weak_aperture = 0.0381;        // m
    double asphere_aperture = 0.028;      // m
    double window_aperture = 0.019;       // m
};

OpticalSystem focusing_group(const FocusingGroupSpec& spec);

// Prepend an ideal collimating lens of focal length f1 at distance f1 from
// the entrance plane (where the grating sits): a ray leaving the plane at
// angle theta arrives at the group parallel to the axis at height f1*tan(theta).
OpticalSystem with_collimator(const OpticalSystem& group, double f1,
                              double collimator_aperture);

// Two-parameter balancing of the focusing group: the weak-lens focal length
// and the weak-to-asphere spacing are searched on bounded intervals by
// iterated grid refinement, minimizing |delta_f| of aberration_report.
struct BalanceProblem {
    FocusingGroupSpec group;              // starting configuration
    double lambda1 = 0.0, lambda2 = 0.0;  // m
    double h1 = 0.0, h2 = 0.0;            // m
    double f_min = 0.100, f_max = 0.400;  // m, weak-lens focal length bounds
    double d1_min = 0.010, d1_max = 0.100;  // m, spacing bounds
    double target = 100e-6;               // m, |delta_f| goal
};

struct BalanceResult {
    FocusingGroupSpec group;     // optimized configuration
    OpticalSystem system;
    double f_weak = 0.0;         // m
    double d1 = 0.0;             // m
    double delta_f = 0.0;        // m, achieved (signed)
    double start_delta_f = 0.0;  // m, at the starting configuration
    bool met_target = false;
};

BalanceResult balance_aberrations(const BalanceProblem& problem);

// Beam-to-axis angle after the last surface for a ray entering the reference
// plane on axis at `entrance_angle` (the grating emission angle).
double exit_angle(const OpticalSystem& system, double entrance_angle, double wavelength);

// Same surfaces traversed in the opposite direction (radii negated, media
// shifted); used for reversibility checks.
OpticalSystem reversed(const OpticalSystem& system);

// Line-oriented prescription I/O (one surface per line, key=value fields).
OpticalSystem load_prescription(std::istream& in, const std::string& label);
OpticalSystem load_prescription_file(const std::string& path);
void save_prescription(std::ostream& out, const OpticalSystem& system);

} // namespace bilat::lens

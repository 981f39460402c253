#pragma once
#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "bilat/grid.hpp"

namespace bilat::lattice {

// One plane wave of the interference pattern, described by the angles of its
// propagation direction: `polar_angle` is measured from the optical axis
// (the image-plane normal), `azimuth` is the in-plane direction of the
// transverse wavevector component. Only the transverse part matters for the
// in-plane pattern; the common longitudinal component is a global phase.
struct BeamSpec {
    double wavelength = 0.0;    // m
    double polar_angle = 0.0;   // rad, in (0, pi/2)
    double azimuth = 0.0;       // rad
    double amplitude = 1.0;     // relative field amplitude, >= 0
    double phase = 0.0;         // rad

    // Transverse wavevector (2pi/lambda) sin(polar) (cos az, sin az).
    Vec2 transverse_wavevector() const;

    void validate() const;
};

// Three beams of equal wavelength whose azimuths are spaced 120 degrees and
// whose polar angles match: the triangular-lattice interference geometry.
// Two beams are accepted as the degenerate case (a single fringe family),
// which is useful for calibrating one reciprocal direction at a time.
struct LatticeConfig {
    std::vector<BeamSpec> beams;
    double azimuth_tolerance = 0.02;  // rad, allowed deviation from 120 deg spacing
    double polar_tolerance = 0.02;    // rad, allowed polar-angle spread

    void validate() const;
};

// Squared modulus of the summed beam fields sampled on `grid`.
IntensityImage interference_intensity(const LatticeConfig& config, const Grid2D& grid);

// Lattice constant of the three-beam triangular pattern,
//   a = 2 lambda / (3 sin(polar_angle)).
double lattice_constant_analytic(double wavelength, double polar_angle);

// Strongest non-DC spatial frequency of the image, as an angular reciprocal
// vector (rad/m), refined to sub-bin accuracy by a windowed FFT and a local
// power centroid. Throws NumericError when no peak stands above the noise
// floor (e.g. a uniform or pure-noise image).
Vec2 dominant_reciprocal_vector(const IntensityImage& image);

// Lattice constant recovered from an image of the triangular pattern:
// the dominant reciprocal vector has magnitude |G| = 4 pi / (sqrt(3) a).
double lattice_constant_from_image(const IntensityImage& image);

// Relative spacing mismatch |a1 - a2| / mean(a1, a2) between two lattices.
double commensurability_mismatch(double a1, double a2);

// Result of fitting the three-fringe interference model to an image.
// `phases` are the fringe-phase changes relative to the reference
// configuration, one per beam pair (0,1), (1,2), (2,0), wrapped to (-pi, pi].
// `displacement` is the in-plane translation d that maps the reference
// pattern onto the image (image(r) = reference(r - d)), determined from the
// first two fringe families; it is defined modulo a lattice translation.
// The third family is redundant (the three reciprocal vectors sum to zero),
// so the wrapped sum of the three phases is a consistency check: it vanishes
// for a rigid translation and `closure_residual` measures the violation.
// `sites` is the largest fringe advance in periods, max |phase| / 2pi.
struct PhaseFit {
    std::array<double, 3> phases{};  // rad
    Vec2 displacement{};             // m
    double sites = 0.0;              // fringe periods
    double closure_residual = 0.0;   // rad, |wrap(sum of phases)|
    double fit_residual = 0.0;       // relative RMS of (model - image)
    bool phases_consistent = true;   // closure_residual below threshold
};

// Least-squares fit of offset + three fringe cosines (reciprocal vectors
// taken from `reference`) to the image. Throws ValidationError when the
// image's dominant spatial frequency does not match the reference geometry,
// and NumericError when the residual shows the model does not describe the
// image at all.
PhaseFit fit_lattice_phase(const IntensityImage& image, const LatticeConfig& reference);

// Tracked in-plane position of one pattern over time, e.g. the fitted
// displacement of one wavelength's lattice across a measurement run.
struct PositionSeries {
    std::vector<double> timestamps;  // s, strictly increasing
    std::vector<Vec2> positions;     // m
    std::string label;               // e.g. the color tag of the lattice

    void validate() const;
};

// Stability metrics of a pair of simultaneously tracked patterns. Short-term
// RMS is measured about a centered moving mean (window `short_window` in
// stability_report); drift is the excursion of that moving mean over the
// run. The differential series (series1 - series2 on common timestamps)
// measures what a relative measurement would see: common-mode motion
// cancels, so its RMS reflects only the independent noise. The rejection
// ratio compares the mean per-series short-term RMS to the differential RMS.
struct StabilityReport {
    double short_term_rms1 = 0.0;   // m
    double short_term_rms2 = 0.0;   // m
    double drift1 = 0.0;            // m
    double drift2 = 0.0;            // m
    double differential_rms = 0.0;  // m
    double rejection_ratio = 0.0;   // dimensionless
};

// Compare two position series over their common time span. The finer series
// is linearly interpolated onto the coarser one's timestamps (no
// extrapolation); fewer than eight overlapping samples is an error.
StabilityReport stability_report(const PositionSeries& series1, const PositionSeries& series2,
                                 double short_window);

// CSV exchange format: header `t_s,x_nm,y_nm`, one row per sample, `#`
// comment lines ignored ("# label: <text>" restores the label).
void write_position_series_csv(std::ostream& out, const PositionSeries& series);
PositionSeries read_position_series_csv(std::istream& in);

// One `metric,value` row per report field, lengths in nm.
void write_stability_report_csv(std::ostream& out, const StabilityReport& report);

} // namespace bilat::lattice

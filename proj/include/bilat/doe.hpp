#pragma once
#include <array>
#include <vector>

#include "bilat/grid.hpp"

// Binary phase grating made of alternately raised and recessed equilateral
// triangles of side L tiling the plane. Lattice vectors of the tiling:
//   a1 = L*(1, 0),  a2 = L*(1/2, sqrt(3)/2)
// Each rhombic unit cell {u*a1 + v*a2 : u,v in [0,1)} splits along its short
// diagonal into an up triangle (u+v < 1, raised) and a down triangle
// (recessed); both are equilateral with side L. Reciprocal basis:
//   b1 = G*(sqrt(3)/2, -1/2),  b2 = G*(0, 1),  G = 4*pi/(sqrt(3)*L)
// The six shortest reciprocal vectors (the first diffraction orders) are
// +-b1, +-b2, +-(b1+b2), all of magnitude G, 60 degrees apart in azimuth.
namespace bilat::doe {

enum class WavefrontMode { reflection, transmission };

struct GratingSpec {
    double triangle_side = 0.0;                       // m
    double etch_depth = 0.0;                          // m
    WavefrontMode mode = WavefrontMode::reflection;
    double incidence_angle = 0.0;                     // rad from normal

    void validate() const;
};

// Two-level phase profile sampled on the lattice basis: sample (ix, iy) sits
// at fractional coordinates u = cells_x*ix/nx, v = cells_y*iy/ny, i.e. at
// physical position u*a1 + v*a2 (corner-aligned; sample (0,0) is a cell
// vertex). grid.pitch is the sample spacing along each lattice vector
// (identical for both by construction).
struct PhaseMask {
    Grid2D grid{};
    double phi_step = 0.0;        // rad, the recessed-region phase
    double triangle_side = 0.0;   // m
    int cells_x = 0;              // unit cells spanned along a1
    int cells_y = 0;              // unit cells spanned along a2
    std::vector<double> phase;    // row-major, each value exactly 0 or phi_step

    bool raised(int ix, int iy) const { return phase[grid.index(ix, iy)] == 0.0; }
    double raised_area_fraction() const;
};

struct DiffractionOrder {
    int m = 0, n = 0;                       // reciprocal indices (m*b1 + n*b2)
    std::array<double, 3> direction{};      // unit propagation vector, z along axis
    double efficiency = 0.0;
    bool propagating = true;
};

struct OrderEfficiency {
    int m = 0, n = 0;
    double kx = 0.0, ky = 0.0;   // rad/m, transverse reciprocal vector m*b1 + n*b2
    double efficiency = 0.0;
};

// Every order resolvable by the sampled unit cell, |eta| summing to 1 for a
// lossless (pure-phase) mask.
struct EfficiencyTable {
    int max_m = 0, max_n = 0;            // orders span [-max, +max] per axis
    std::vector<OrderEfficiency> orders; // sorted by |G| ascending, then (m, n)

    double total() const;
    double efficiency(int m, int n) const;  // 0 if outside the resolved range
};

// Tiling predicate in fractional lattice coordinates (period 1 in u and v).
bool raised_at_fractional(double u, double v);
// Same predicate at a physical point.
bool raised_at_point(const GratingSpec& spec, Vec2 r);

// Reciprocal-lattice vector m*b1 + n*b2 for this tiling.
Vec2 reciprocal_vector(const GratingSpec& spec, int m, int n);

// sin(theta) = 2*lambda/(sqrt(3)*L); throws if the first order is evanescent.
double first_order_angle(const GratingSpec& spec, double wavelength);

// Round-trip phase between raised and recessed regions for a reflective mask:
// phi = 4*pi*d*cos(theta_inc)/lambda.
double reflection_phase_step(const GratingSpec& spec, double wavelength);

// Etch depth (lambda1+lambda2)/8: the compromise that puts the reflection
// phase step at pi for the mean of the two wavelengths.
double compromise_depth(double lambda1, double lambda2);

// Sample the tiling onto a grid. The grid must span an integer number of unit
// cells along both axes with an integer, even number of samples per cell, and
// resolve each cell with at least 16 samples (pitch <= L/16). Samples exactly
// on triangle edges alternate between the two levels along the edge (see the
// implementation note), which keeps the levels area-balanced and the six
// first-order efficiencies identical.
// phi_step of the result is reflection_phase_step at the given wavelength;
// the two-argument overload uses the step at the grating's own quarter-wave point
// (4*pi*d*cos(theta)/lambda with lambda = 4*d*cos(theta), i.e. exactly pi).
PhaseMask synthesize_grating_profile(const GratingSpec& spec, const Grid2D& grid);
PhaseMask synthesize_grating_profile(const GratingSpec& spec, const Grid2D& grid,
                                     double wavelength);

// Unit-cell Fourier power |c_mn|^2 of exp(i*phase) with the recessed level
// rescaled to `phase_step`. Exact discrete Fourier analysis of the sampled
// cell; sum over all returned orders is 1 up to roundoff.
EfficiencyTable order_efficiencies(const PhaseMask& mask, double phase_step);

// The canonical 120-degree triple of first orders used downstream to build a
// three-beam lattice: indices (1,0), (0,1), (-1,-1). Efficiency is filled with
// the ideal first-order value sin^2(phi/2)/pi^2 at the given wavelength.
std::array<DiffractionOrder, 3> first_order_directions(const GratingSpec& spec,
                                                       double wavelength);

// All six first-order reciprocal vectors.
std::array<Vec2, 6> first_order_reciprocal_vectors(const GratingSpec& spec);

} // namespace bilat::doe

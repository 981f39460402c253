#pragma once
#include <array>
#include <iosfwd>
#include <string>

#include "bilat/errors.hpp"

namespace bilat::glass {

// Sellmeier dispersion model, n^2 = 1 + sum_i B_i L^2/(L^2 - C_i) with L the
// wavelength in micrometers. All-zero coefficients mean vacuum (n = 1), which
// doubles as the "no medium" marker on optical surfaces.
struct GlassModel {
    std::string name = "vacuum";
    std::array<double, 3> B{};
    std::array<double, 3> C{};            // um^2
    double band_lo = 0.0, band_hi = 0.0;  // m; validity range (0,0 = unrestricted)

    bool is_vacuum() const { return B[0] == 0.0 && B[1] == 0.0 && B[2] == 0.0; }
    double index(double wavelength) const;
    void validate() const;
};

GlassModel vacuum();

// Parse the line-oriented catalog format ('#' comments, key = value).
GlassModel parse_glass(std::istream& in, const std::string& label);
GlassModel load_glass_file(const std::string& path);
// Look up <name>.glass in the bundled catalog directory.
GlassModel load_glass(const std::string& name);

} // namespace bilat::glass

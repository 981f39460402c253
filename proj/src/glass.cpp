#include "bilat/glass.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "bilat/units.hpp"

#ifndef BILAT_DATA_DIR
#define BILAT_DATA_DIR "data"
#endif

namespace bilat::glass {

double GlassModel::index(double wavelength) const {
    if (is_vacuum())
        return 1.0;
    if (!(wavelength > 0.0))
        throw ValidationError("glass: wavelength must be > 0");
    if (band_hi > 0.0 && (wavelength < band_lo || wavelength > band_hi)) {
        std::ostringstream os;
        os << "glass: " << name << " has no dispersion data at "
           << wavelength / units::nm << " nm (valid " << band_lo / units::nm
           << "-" << band_hi / units::nm << " nm)";
        throw ValidationError(os.str());
    }
    const double l2 = (wavelength / units::um) * (wavelength / units::um);
    double n2 = 1.0;
    for (int i = 0; i < 3; ++i)
        n2 += B[i] * l2 / (l2 - C[i]);
    if (!(n2 > 0.0))
        throw NumericError("glass: Sellmeier form is singular at this wavelength");
    return std::sqrt(n2);
}

void GlassModel::validate() const {
    if (is_vacuum())
        return;
    if (band_hi > 0.0 && !(band_lo > 0.0 && band_hi > band_lo))
        throw ValidationError("glass: invalid validity band");
    for (double c : C)
        if (c < 0.0)
            throw ValidationError("glass: Sellmeier C coefficients must be >= 0");
}

GlassModel vacuum() { return GlassModel{}; }

GlassModel parse_glass(std::istream& in, const std::string& label) {
    GlassModel g;
    g.name.clear();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key))
            continue;
        std::string eq;
        ls >> eq;
        if (eq != "=") {
            std::ostringstream os;
            os << "glass: " << label << ":" << lineno << ": expected 'key = value'";
            throw ValidationError(os.str());
        }
        bool ok = true;
        if (key == "name") {
            ok = bool(ls >> g.name);
        } else if (key == "band_um") {
            double lo = 0.0, hi = 0.0;
            ok = bool(ls >> lo >> hi);
            g.band_lo = lo * units::um;
            g.band_hi = hi * units::um;
        } else if (key.size() == 2 && (key[0] == 'B' || key[0] == 'C') &&
                   key[1] >= '1' && key[1] <= '3') {
            double v = 0.0;
            ok = bool(ls >> v);
            (key[0] == 'B' ? g.B : g.C)[key[1] - '1'] = v;
        } else {
            std::ostringstream os;
            os << "glass: " << label << ":" << lineno << ": unknown key '" << key << "'";
            throw ValidationError(os.str());
        }
        if (!ok) {
            std::ostringstream os;
            os << "glass: " << label << ":" << lineno << ": bad value for '" << key << "'";
            throw ValidationError(os.str());
        }
    }
    if (g.name.empty())
        throw ValidationError("glass: " + label + ": missing 'name'");
    g.validate();
    return g;
}

GlassModel load_glass_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("glass: cannot open " + path);
    return parse_glass(in, path);
}

GlassModel load_glass(const std::string& name) {
    if (name == "vacuum")
        return vacuum();
    return load_glass_file(std::string(BILAT_DATA_DIR) + "/glass/" + name + ".glass");
}

} // namespace bilat::glass

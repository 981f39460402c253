#pragma once
#include <cmath>
#include <cstddef>
#include <vector>

#include "bilat/errors.hpp"

namespace bilat {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }

// Uniform 2D sampling. `pitch` is the sample spacing along each grid axis;
// for Cartesian images the axes are x/y, for triangular-tiling phase masks the
// axes are the two lattice vectors (see doe.hpp). Row-major storage,
// index = iy*nx + ix.
struct Grid2D {
    double pitch = 0.0;   // m per sample
    int nx = 0;
    int ny = 0;
    Vec2 origin{};        // physical position of sample (0,0)

    std::size_t size() const { return std::size_t(nx) * std::size_t(ny); }
    std::size_t index(int ix, int iy) const { return std::size_t(iy) * nx + ix; }
    double x(int ix) const { return origin.x + pitch * ix; }
    double y(int iy) const { return origin.y + pitch * iy; }

    void validate() const {
        if (!(pitch > 0.0))
            throw ValidationError("grid: pitch must be > 0");
        if (nx < 16 || ny < 16)
            throw ValidationError("grid: nx and ny must be >= 16");
    }
};

// Scalar intensity samples on a Cartesian grid, tagged with the wavelength
// that produced them. Values are relative intensity, >= 0.
struct IntensityImage {
    Grid2D grid{};
    double wavelength = 0.0;        // m
    std::vector<double> values;     // row-major, size grid.size()

    double at(int ix, int iy) const { return values[grid.index(ix, iy)]; }
    double& at(int ix, int iy) { return values[grid.index(ix, iy)]; }

    void validate() const {
        grid.validate();
        if (values.size() != grid.size())
            throw ValidationError("image: value count does not match grid");
        if (!(wavelength > 0.0))
            throw ValidationError("image: wavelength must be > 0");
    }
};

} // namespace bilat

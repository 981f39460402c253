#pragma once
#include <numbers>

// All quantities are SI internally (m, s, kg, V, A, F, J, rad).
// These constants make call sites read like the bench numbers they came from:
//   26.0 * units::um, 8.5 * units::deg, 16.0 * units::pF, ...
namespace bilat::units {

inline constexpr double pi = std::numbers::pi;

// length
inline constexpr double m  = 1.0;
inline constexpr double cm = 1e-2;
inline constexpr double mm = 1e-3;
inline constexpr double um = 1e-6;
inline constexpr double nm = 1e-9;
inline constexpr double pm = 1e-12;

// time
inline constexpr double s  = 1.0;
inline constexpr double ms = 1e-3;
inline constexpr double us = 1e-6;
inline constexpr double ns = 1e-9;
inline constexpr double ps = 1e-12;

// electrical
inline constexpr double V   = 1.0;
inline constexpr double kV  = 1e3;
inline constexpr double mA  = 1e-3;
inline constexpr double pF  = 1e-12;
inline constexpr double nF  = 1e-9;
inline constexpr double uF  = 1e-6;
inline constexpr double ohm = 1.0;
inline constexpr double Hz  = 1.0;
inline constexpr double kHz = 1e3;
inline constexpr double MHz = 1e6;

// angle: write `28.0 * units::deg`, read back with `x / units::deg`
inline constexpr double rad = 1.0;
inline constexpr double deg = pi / 180.0;

// physics
inline constexpr double hbar        = 1.054571817e-34;  // J s
inline constexpr double amu         = 1.66053906660e-27; // kg
inline constexpr double cesium_mass = 132.905451961 * amu;

} // namespace bilat::units

#include "bilat/eom.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "bilat/errors.hpp"
#include "bilat/units.hpp"

namespace bilat::eom {

using units::deg;
using units::pi;

namespace {

double wrap_pi(double x) { return std::remainder(x, 2.0 * pi); }

// Fringe reciprocal vectors of the beam pairs (0,1), (1,2), (2,0).
std::array<Vec2, 3> fringe_vectors(const lattice::LatticeConfig& geometry) {
    const Vec2 k0 = geometry.beams[0].transverse_wavevector();
    const Vec2 k1 = geometry.beams[1].transverse_wavevector();
    const Vec2 k2 = geometry.beams[2].transverse_wavevector();
    return {k0 - k1, k1 - k2, k2 - k0};
}

// d solving g0.d = p0, g1.d = p1.
Vec2 solve_pair(const std::array<Vec2, 3>& g, double p0, double p1) {
    const double det = g[0].x * g[1].y - g[0].y * g[1].x;
    if (std::abs(det) < 1e-12 * g[0].norm() * g[1].norm())
        throw ValidationError("eom: fringe directions are degenerate");
    return {(p0 * g[1].y - p1 * g[0].y) / det, (p1 * g[0].x - p0 * g[1].x) / det};
}

// Settling fraction of the spark transition, 1 -> 0: an RC exponential
// (time constant tau) whose onset is spread uniformly over the ignition
// ramp [0, t_ig]. Closed form of the convolution.
double spark_fraction(double t, double tau, double t_ig) {
    if (t <= 0.0) return 1.0;
    if (t_ig <= 0.0) return std::exp(-t / tau);
    if (t <= t_ig) return 1.0 - (t - tau * (1.0 - std::exp(-t / tau))) / t_ig;
    return tau / t_ig * (1.0 - std::exp(-t_ig / tau)) * std::exp(-(t - t_ig) / tau);
}

} // namespace

void ModulatorSpec::validate() const {
    ordinary_index_model.validate();
    if (!(r13 > 0.0))
        throw ValidationError("modulator: r13 must be > 0");
    if (passes != 1 && passes != 2)
        throw ValidationError("modulator: passes must be 1 or 2");
    if (!(incidence_angle >= 0.0) || !(incidence_angle < 0.5 * pi))
        throw ValidationError("modulator: incidence angle must lie in [0, pi/2)");
    if (!(pad_capacitance > 0.0))
        throw ValidationError("modulator: pad capacitance must be > 0");
    if (!(series_resistance > 0.0))
        throw ValidationError("modulator: series resistance must be > 0");
}

ModulatorSpec standard_modulator() {
    ModulatorSpec mod;
    mod.ordinary_index_model = glass::load_glass("linbo3_o");
    mod.incidence_angle = 8.5 * deg;
    return mod;
}

void AmplifierSpec::validate() const {
    if (!(supply_voltage > 0.0) || !(current_limit > 0.0) || !(small_signal_bandwidth > 0.0))
        throw ValidationError("amplifier: all parameters must be > 0");
}

void DischargeSpec::validate() const {
    if (!(reservoir_capacitance > 0.0))
        throw ValidationError("discharge: reservoir capacitance must be > 0");
    if (!(ignition_timescale >= 0.0))
        throw ValidationError("discharge: ignition timescale must be >= 0");
    if (!std::isfinite(reservoir_bias))
        throw ValidationError("discharge: reservoir bias must be finite");
}

void PhaseWaveform::validate() const {
    if (timestamps.size() != phases.size())
        throw ValidationError("phase waveform: timestamp and sample counts differ");
    if (timestamps.empty())
        throw ValidationError("phase waveform: no samples");
    for (std::size_t i = 0; i < timestamps.size(); ++i) {
        if (i > 0 && !(timestamps[i] > timestamps[i - 1]))
            throw ValidationError("phase waveform: timestamps must be strictly increasing");
        for (double p : phases[i])
            if (!std::isfinite(p))
                throw ValidationError("phase waveform: phases must be finite");
    }
}

void DriveWaveforms::validate() const {
    if (timestamps.size() != voltages.size())
        throw ValidationError("drive: timestamp and sample counts differ");
    if (timestamps.empty())
        throw ValidationError("drive: no samples");
    for (std::size_t i = 0; i < timestamps.size(); ++i) {
        if (i > 0 && !(timestamps[i] > timestamps[i - 1]))
            throw ValidationError("drive: timestamps must be strictly increasing");
        for (double v : voltages[i])
            if (!std::isfinite(v))
                throw ValidationError("drive: voltages must be finite");
    }
}

double half_wave_voltage(const ModulatorSpec& mod, double wavelength) {
    mod.validate();
    const double n = mod.ordinary_index_model.index(wavelength);
    return wavelength / (n * n * n * mod.r13) / double(mod.passes) /
           std::cos(mod.incidence_angle);
}

double pad_phase(const ModulatorSpec& mod, double wavelength, double voltage) {
    return pi / half_wave_voltage(mod, wavelength) * voltage;
}

PadDisplacement phases_to_displacement(const std::array<double, 3>& pad_phases,
                                       const lattice::LatticeConfig& geometry) {
    geometry.validate();
    if (geometry.beams.size() != 3)
        throw ValidationError("eom: displacement needs the three-beam geometry");
    for (double p : pad_phases)
        if (!std::isfinite(p))
            throw ValidationError("eom: pad phases must be finite");
    const auto g = fringe_vectors(geometry);
    const std::array<double, 3> dphi{pad_phases[0] - pad_phases[1],
                                     pad_phases[1] - pad_phases[2],
                                     pad_phases[2] - pad_phases[0]};
    PadDisplacement out;
    out.displacement = solve_pair(g, dphi[0], dphi[1]);
    out.sites = std::max({std::abs(dphi[0]), std::abs(dphi[1]), std::abs(dphi[2])}) / (2.0 * pi);
    return out;
}

RampResult slew_limited_ramp(double delta_v, const AmplifierSpec& amp, const ModulatorSpec& mod,
                             int samples) {
    amp.validate();
    mod.validate();
    if (samples < 2)
        throw ValidationError("ramp: need at least two samples");
    if (std::abs(delta_v) > 2.0 * amp.supply_voltage)
        throw ValidationError("ramp: target exceeds the differential swing limit");
    RampResult out;
    out.slew = amp.current_limit / mod.pad_capacitance;
    if (delta_v == 0.0) return out;
    out.duration = std::abs(delta_v) / out.slew;
    out.timestamps.resize(std::size_t(samples));
    out.voltages.resize(std::size_t(samples));
    for (int i = 0; i < samples; ++i) {
        const double u = double(i) / double(samples - 1);
        out.timestamps[std::size_t(i)] = u * out.duration;
        out.voltages[std::size_t(i)] = u * delta_v;
    }
    return out;
}

double phase_slew(const AmplifierSpec& amp, const ModulatorSpec& mod, double wavelength) {
    amp.validate();
    return pi / half_wave_voltage(mod, wavelength) * (amp.current_limit / mod.pad_capacitance);
}

DischargeResult spark_discharge(double v_start, const ModulatorSpec& mod,
                                const DischargeSpec& spec, int samples) {
    mod.validate();
    spec.validate();
    if (samples < 2)
        throw ValidationError("discharge: need at least two samples");
    const double c = mod.pad_capacitance;
    const double cf = spec.reservoir_capacitance;
    const double c_series = c * cf / (c + cf);

    DischargeResult out;
    out.time_constant = mod.series_resistance * c_series;
    out.equilibrium_voltage = (c * v_start + cf * spec.reservoir_bias) / (c + cf);
    out.peak_current = std::abs(v_start - spec.reservoir_bias) / mod.series_resistance;
    out.charge_transferred = c * (v_start - out.equilibrium_voltage);

    const double t_end = spec.ignition_timescale + 40.0 * out.time_constant;
    out.timestamps.resize(std::size_t(samples));
    out.voltages.resize(std::size_t(samples));
    const double dv = v_start - out.equilibrium_voltage;
    for (int i = 0; i < samples; ++i) {
        const double t = t_end * double(i) / double(samples - 1);
        out.timestamps[std::size_t(i)] = t;
        out.voltages[std::size_t(i)] =
            out.equilibrium_voltage +
            dv * spark_fraction(t, out.time_constant, spec.ignition_timescale);
    }

    // 10-90% settling from the monotone fraction, by bisection.
    const auto crossing = [&](double level) {
        double lo = 0.0, hi = t_end;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (spark_fraction(mid, out.time_constant, spec.ignition_timescale) > level ? lo : hi) =
                mid;
        }
        return 0.5 * (lo + hi);
    };
    out.settle_time_10_90 = crossing(0.1) - crossing(0.9);
    return out;
}

TrajectoryResult drive_to_trajectory(const DriveWaveforms& drive, const ModulatorSpec& mod,
                                     double wavelength, const lattice::LatticeConfig& geometry) {
    drive.validate();
    geometry.validate();
    if (geometry.beams.size() != 3)
        throw ValidationError("eom: trajectory needs the three-beam geometry");
    const double v_pi = half_wave_voltage(mod, wavelength);
    const auto g = fringe_vectors(geometry);

    TrajectoryResult out;
    const std::size_t n = drive.timestamps.size();
    out.phases.timestamps = drive.timestamps;
    out.phases.phases.resize(n);
    out.displacements.resize(n);
    out.sites.resize(n);
    out.annotations.assign(n, "");

    std::array<double, 3> pair_acc{};  // accumulated wrapped pair-phase steps
    std::array<double, 3> prev_pair{};
    for (std::size_t i = 0; i < n; ++i) {
        std::array<double, 3> phi;
        for (int j = 0; j < 3; ++j) phi[std::size_t(j)] = pi / v_pi * drive.voltages[i][std::size_t(j)];
        out.phases.phases[i] = phi;

        const std::array<double, 3> pair{phi[0] - phi[1], phi[1] - phi[2], phi[2] - phi[0]};
        if (i > 0) {
            bool raw_jump = false, wrapped_zero = true;
            for (int m = 0; m < 3; ++m) {
                const double step = pair[std::size_t(m)] - prev_pair[std::size_t(m)];
                const double wrapped = wrap_pi(step);
                pair_acc[std::size_t(m)] += wrapped;
                raw_jump = raw_jump || std::abs(step) > pi;
                wrapped_zero = wrapped_zero && std::abs(wrapped) < 1e-9;
            }
            if (raw_jump && wrapped_zero) out.annotations[i] = "reset";
        }
        prev_pair = pair;
        out.displacements[i] = solve_pair(g, pair_acc[0], pair_acc[1]);
        out.sites[i] =
            std::max({std::abs(pair_acc[0]), std::abs(pair_acc[1]), std::abs(pair_acc[2])}) /
            (2.0 * pi);
    }
    return out;
}

DriveWaveforms read_drive_waveforms_csv(std::istream& in) {
    DriveWaveforms drive;
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            std::string h = line;
            h.erase(std::remove_if(h.begin(), h.end(), [](char c) { return c == ' ' || c == '\r'; }),
                    h.end());
            if (h != "t_s,V1,V2,V3")
                throw ValidationError("drive csv: line " + std::to_string(lineno) +
                                      ": expected header t_s,V1,V2,V3");
            header_seen = true;
            continue;
        }
        std::istringstream row(line);
        double t, v1, v2, v3;
        char c1, c2, c3;
        if (!(row >> t >> c1 >> v1 >> c2 >> v2 >> c3 >> v3) || c1 != ',' || c2 != ',' || c3 != ',')
            throw ValidationError("drive csv: line " + std::to_string(lineno) +
                                  ": expected t_s,V1,V2,V3 row");
        drive.timestamps.push_back(t);
        drive.voltages.push_back({v1, v2, v3});
    }
    drive.validate();
    return drive;
}

void write_trajectory_csv(std::ostream& out, const TrajectoryResult& trajectory) {
    trajectory.phases.validate();
    out << std::setprecision(12);
    out << "t_s,phi1,phi2,phi3,dx_nm,dy_nm,sites\n";
    for (std::size_t i = 0; i < trajectory.phases.timestamps.size(); ++i) {
        const auto& phi = trajectory.phases.phases[i];
        out << trajectory.phases.timestamps[i] << ',' << phi[0] << ',' << phi[1] << ',' << phi[2]
            << ',' << trajectory.displacements[i].x / units::nm << ','
            << trajectory.displacements[i].y / units::nm << ',' << trajectory.sites[i] << "\n";
        if (!trajectory.annotations[i].empty())
            out << "# " << trajectory.annotations[i]
                << " at t_s=" << trajectory.phases.timestamps[i] << "\n";
    }
}

} // namespace bilat::eom

#pragma once
#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "bilat/glass.hpp"
#include "bilat/grid.hpp"
#include "bilat/lattice.hpp"

namespace bilat::eom {

// Monolithic electro-optic phase-modulator array: one lithium-niobate wafer
// with three drive pads, one per lattice beam, used in double pass. The
// incidence angle enters the half-wave voltage as a single geometric
// path-length factor 1/cos(angle).
struct ModulatorSpec {
    glass::GlassModel ordinary_index_model;  // n_o dispersion of the wafer
    double r13 = 8.6e-12;                    // m/V, electro-optic coefficient
    int passes = 2;                          // 1 or 2 (retro-reflected)
    double incidence_angle = 0.0;            // rad
    double pad_capacitance = 16e-12;         // F
    double series_resistance = 5.0;          // ohm, electrode + spark path

    void validate() const;
};

// Bench modulator: lithium-niobate ordinary index, 8.6 pm/V, double pass at
// 8.5 degrees incidence (which lands the 681 nm half-wave voltage at 3.4 kV),
// 16 pF pads behind 5 ohm electrodes.
ModulatorSpec standard_modulator();

// High-voltage amplifier column driving one pad. The default current limit
// reproduces the measured 600 V/us slew into a 16 pF pad.
struct AmplifierSpec {
    double supply_voltage = 4.5e3;          // V
    double current_limit = 9.6e-3;          // A
    double small_signal_bandwidth = 1.0e6;  // Hz

    void validate() const;
};

// Spark-gap discharge path: the pad capacitance dumps into a reservoir
// capacitor (optionally biased to the opposite polarity) through the series
// resistance. Ignition of the spark is modeled behaviorally as a conduction
// onset spread linearly over ignition_timescale.
struct DischargeSpec {
    double reservoir_capacitance = 1e-6;  // F
    double reservoir_bias = 0.0;          // V, signed (opposite polarity)
    double ignition_timescale = 10e-9;    // s

    void validate() const;
};

// Per-pad phase samples over time.
struct PhaseWaveform {
    std::vector<double> timestamps;              // s, strictly increasing
    std::vector<std::array<double, 3>> phases;   // rad

    void validate() const;
};

// Per-pad drive voltages over a shared time base.
struct DriveWaveforms {
    std::vector<double> timestamps;               // s, strictly increasing
    std::vector<std::array<double, 3>> voltages;  // V

    void validate() const;
};

// V_pi = lambda / (n_o^3 r13), divided by the number of passes and corrected
// by 1/cos(incidence_angle). Throws when lambda is outside the index model's
// validity band.
double half_wave_voltage(const ModulatorSpec& mod, double wavelength);

// Phase imparted on one beam by pad voltage V: pi * V / V_pi. Exactly linear.
double pad_phase(const ModulatorSpec& mod, double wavelength, double voltage);

// In-plane displacement conjugate to a set of pad phases. `displacement`
// solves (k_i - k_j) . d = phi_i - phi_j for the first two beam pairs; the
// third pair is linearly dependent and closes to 1e-9 rad by construction.
// Note the sign convention: the interference pattern itself translates by
// -d (fit_lattice_phase on before/after images reports that conjugate).
// `sites` is the largest pair advance in fringe periods, max |dphi| / 2pi.
struct PadDisplacement {
    Vec2 displacement{};  // m
    double sites = 0.0;   // fringe periods along the dominant drive direction
};
PadDisplacement phases_to_displacement(const std::array<double, 3>& pad_phases,
                                       const lattice::LatticeConfig& geometry);

// Constant-current ramp of one pad from 0 to delta_v: slew is
// current_limit / pad_capacitance, duration |delta_v| / slew. delta_v = 0
// yields an empty waveform. Targets beyond the differential swing
// (2 x supply) are rejected.
struct RampResult {
    std::vector<double> timestamps;  // s
    std::vector<double> voltages;    // V
    double slew = 0.0;               // V/s
    double duration = 0.0;           // s
};
RampResult slew_limited_ramp(double delta_v, const AmplifierSpec& amp, const ModulatorSpec& mod,
                             int samples = 129);

// Fastest continuous phase motion of one beam: (pi / V_pi) * (I / C).
double phase_slew(const AmplifierSpec& amp, const ModulatorSpec& mod, double wavelength);

// Spark-gap jump from v_start toward the charge-sharing equilibrium of the
// pad with the reservoir. The pad voltage settles as an RC exponential with
// tau = R * C_series(pad, reservoir), smeared by the linear conduction onset;
// with ignition_timescale >> tau the 10-90% settling time is 0.8 of it.
struct DischargeResult {
    std::vector<double> timestamps;   // s
    std::vector<double> voltages;     // V, pad voltage
    double time_constant = 0.0;       // s, R * C_series
    double equilibrium_voltage = 0.0; // V
    double peak_current = 0.0;        // A, initial gap voltage / R
    double settle_time_10_90 = 0.0;   // s
    double charge_transferred = 0.0;  // C, off the pad
};
DischargeResult spark_discharge(double v_start, const ModulatorSpec& mod,
                                const DischargeSpec& spec, int samples = 2001);

// Pointwise composition of pad_phase and phases_to_displacement over a drive
// record. Pattern motion accumulates the *wrapped* pair-phase step between
// consecutive samples, so a sudden pad jump by a 2pi multiple (the sawtooth
// reset) contributes zero net motion and is annotated "reset"; slow ramps
// accumulate without bound. `phases` holds the raw per-pad phases.
struct TrajectoryResult {
    PhaseWaveform phases;
    std::vector<Vec2> displacements;       // m, relative to the first sample
    std::vector<double> sites;             // fringe periods, from pair phases
    std::vector<std::string> annotations;  // per sample; "" or "reset"
};
TrajectoryResult drive_to_trajectory(const DriveWaveforms& drive, const ModulatorSpec& mod,
                                     double wavelength, const lattice::LatticeConfig& geometry);

// CSV exchange: drive records come in as `t_s,V1,V2,V3`, trajectories go out
// as `t_s,phi1,phi2,phi3,dx_nm,dy_nm,sites` (one row per sample; a sample's
// annotation follows its row as a `# <annotation> at t_s=<t>` comment line).
DriveWaveforms read_drive_waveforms_csv(std::istream& in);
void write_trajectory_csv(std::ostream& out, const TrajectoryResult& trajectory);

} // namespace bilat::eom

#pragma once
#include <array>
#include <complex>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace bilat::dynamics {

// Sinusoidal 1D lattice potential V(x,t) = depth * sin^2(pi (x - x0(t)) / a)
// translating along the transport axis. The lattice position follows the
// fringe phase: x0(t) = a * theta(t) / 2pi. A null trajectory means a static
// lattice at theta = 0.
struct LatticePotential1D {
    double depth = 0.0;             // J
    double lattice_constant = 0.0;  // m
    std::function<double(double)> phase_trajectory;  // rad vs seconds

    double offset_at(double t) const;
    double value(double x, double t) const;
    void validate() const;
};

// Harmonic expansion of a site minimum: omega = (pi/a) sqrt(2 V0 / m).
double site_frequency(double depth, double lattice_constant, double mass);
// Inverse relation: the depth that puts the site frequency at omega.
double depth_for_site_frequency(double omega, double lattice_constant, double mass);

// Wavefunction samples on a uniform periodic grid x_i = x0 + i dx.
struct WavepacketState {
    double x0 = 0.0;  // m
    double dx = 0.0;  // m
    double mass = 0.0;  // kg
    std::vector<std::complex<double>> amplitudes;

    int n() const { return int(amplitudes.size()); }
    double norm() const;  // sqrt(sum |psi|^2 dx)
    void validate() const;
};

// Lowest state localized in the site nearest the grid center, by
// imaginary-time split-step propagation from a harmonic seed (a uniform seed
// when depth = 0, whose ground state is the flat zero-momentum wave). The
// grid must span at least 3 sites at 64+ samples per site. Throws
// NumericError with the residual when the iteration stalls.
WavepacketState ground_state(const LatticePotential1D& potential, double mass, double x0,
                             double dx, int n);

// Strang split-step Fourier evolution under V(x,t) from t_start over
// `duration`, stepping close to `dt` (the count is rounded so the steps tile
// the duration exactly). Unitary: norm is conserved to 1e-9, and energy to
// 1e-6 relative over 1e4 steps for a static lattice. Two stability guards
// throw NumericError rather than return folded dynamics: steps so coarse
// that the potential advances the local phase by more than pi per step, and
// wavepackets that spread past 95% of the grid Nyquist momentum (aliasing;
// refine the spatial grid).
WavepacketState evolve(const WavepacketState& state, const LatticePotential1D& potential,
                       double dt, double duration, double t_start = 0.0);

// |<a|b>|^2 on a shared grid.
double overlap_fidelity(const WavepacketState& a, const WavepacketState& b);
// Exact band-limited translation by `shift` (Fourier phase ramp).
WavepacketState translated(const WavepacketState& state, double shift);
double position_mean(const WavepacketState& state);
double position_variance(const WavepacketState& state);
// <T> + <V(., t)>.
double total_energy(const WavepacketState& state, const LatticePotential1D& potential, double t);

enum class TransportMode { smooth_ramp, sudden_jump, composite };
enum class RampShape { linear, minimum_jerk };

// One lattice translation: move the potential by `distance` sites over
// `duration`. A sudden jump has zero duration (the pattern is displaced
// between two samples, faster than any atomic motion); a smooth ramp slides
// it along `ramp_shape`. `composite` only labels a chained stage list.
struct TransportProtocol {
    TransportMode mode = TransportMode::smooth_ramp;
    double distance = 0.0;  // lattice sites (may be fractional)
    double duration = 0.0;  // s
    RampShape ramp_shape = RampShape::minimum_jerk;

    void validate() const;
};

// Numerical knobs for transport runs. The defaults satisfy the documented
// convergence margins (halving dt: < 1e-6; doubling density: < 1e-5).
// 64 samples per site is the accepted floor but only resolves low-momentum
// scenarios (shallow wells, slow ramps); the default of 128 keeps the
// momenta of strongly excited wavepackets clear of the grid Nyquist limit
// for site depths up to ~100 level spacings. Under-resolved runs stop with
// a NumericError instead of aliasing silently.
struct TransportOptions {
    int samples_per_site = 128;
    int padding_sites = 8;      // each side, beyond the travelled range
    int steps_per_period = 256; // time steps per site oscillation period
    int trace_stride = 0;       // record every k-th step; 0 = no trace
};

// `fidelity` is the squared overlap of the evolved state with the ground
// state of the site of the *final* potential nearest the wavepacket; a jump
// by an integer number of sites maps the potential onto itself, so the
// stationary wavepacket scores 1. `excitation_energy` is measured above that
// target state under the final potential.
struct FidelityResult {
    double fidelity = 0.0;
    double excitation_energy = 0.0;  // J
    TransportProtocol protocol;      // echo (chained stages echo a composite)
    std::vector<double> trace_times;       // s (when trace_stride > 0)
    std::vector<double> trace_fidelities;  // vs the site-following target
    std::vector<double> trace_energies;    // J
};

FidelityResult transport_fidelity(const TransportProtocol& protocol,
                                  const LatticePotential1D& potential, double mass,
                                  const TransportOptions& options = {});
// Chained stages sharing one wavepacket (e.g. slow ramp + sawtooth reset).
FidelityResult transport_fidelity(const std::vector<TransportProtocol>& stages,
                                  const LatticePotential1D& potential, double mass,
                                  const TransportOptions& options = {});

// Overlap fidelity of two identical Gaussian wavepackets whose relative
// position jitters by delta ~ Normal(0, sigma): the average of
// F(delta) = exp(-delta^2 / 4 w^2) is (1 + sigma^2 / 2 w^2)^(-1/2).
double jitter_overlap_fidelity(double sigma_jitter, double wavepacket_width);

// CSV `t_s,fidelity,energy_J` of a recorded trace (requires trace_stride > 0).
void write_fidelity_trace_csv(std::ostream& out, const FidelityResult& result);
// CSV `param,fidelity` sweep table.
void write_sweep_csv(std::ostream& out, const std::vector<std::array<double, 2>>& rows);

} // namespace bilat::dynamics
